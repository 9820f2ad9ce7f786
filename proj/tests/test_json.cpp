#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "dtd/json_io.hpp"

using namespace dtd;

TEST_CASE("environment round trip") {
  for (const auto& env : {make_random_walk(5, InitialState::Left), make_noisy_chain(-1.0),
                          make_boyan_chain()}) {
    const auto path = std::filesystem::temp_directory_path() / "dtd_env_roundtrip.json";
    save_environment(env, path);
    const auto back = load_environment(path);
    CHECK(back.mrp.transition() == env.mrp.transition());
    CHECK(back.mrp.expected_reward() == env.mrp.expected_reward());
    CHECK(back.mrp.reward_noise_std() == env.mrp.reward_noise_std());
    CHECK(back.mrp.initial_dist() == env.mrp.initial_dist());
    CHECK(back.mrp.discount() == env.mrp.discount());
    CHECK(back.mrp.transition_reward().has_value() == env.mrp.transition_reward().has_value());
    CHECK(back.features.phi() == env.features.phi());
    std::filesystem::remove(path);
  }
}

TEST_CASE("malformed environments are rejected") {
  Json j = to_json(make_random_walk(3, InitialState::Middle));
  j["mrp"]["n_states"] = 4;
  CHECK_THROWS_AS(environment_from_json(j), std::invalid_argument);
  j = to_json(make_random_walk(3, InitialState::Middle));
  j["features"]["phi"] = Json::array({Json::array({1.0})});
  CHECK_THROWS_AS(environment_from_json(j), std::invalid_argument);
  j = to_json(make_random_walk(3, InitialState::Middle));
  j["mrp"].erase("discount");
  CHECK_THROWS(environment_from_json(j));
}

TEST_CASE("emphasis specs") {
  const auto c = parse_emphasis("constant:0.5");
  CHECK(c.kind == EmphasisKind::Constant);
  CHECK(c.constant == 0.5);
  const auto t = parse_emphasis("table:1,0.5,0.25@0.01");
  CHECK(t.table == std::vector<double>{1, 0.5, 0.25});
  CHECK(t.epsilon_floor == 0.01);
  CHECK(parse_emphasis("abs-td").adaptive());
  CHECK_THROWS_AS(parse_emphasis("count:3"), std::invalid_argument);
  CHECK_THROWS_AS(parse_emphasis("constant:x"), std::invalid_argument);

  const auto back = emphasis_from_json(to_json(t));
  CHECK(back.kind == t.kind);
  CHECK(back.table == t.table);
  CHECK(back.epsilon_floor == t.epsilon_floor);
}

TEST_CASE("sweep config") {
  const auto dir = std::filesystem::temp_directory_path() / "dtd_sweep_config";
  std::filesystem::create_directories(dir);
  save_environment(make_random_walk(3, InitialState::Right), dir / "env.json");
  const Json j = Json::parse(R"({
    "env_file": "env.json",
    "algorithms": [
      {"algorithm": "DTD", "lambda": [0.5], "alpha": [0.1],
       "emphasis": {"kind": "constant", "params": 0.5, "epsilon_floor": 0.001}},
      {"algorithm": "TD", "lambda": [0, 1], "alpha": [0.25, 0.5]}
    ],
    "runs": 2, "steps": 100, "eval_every": 10, "base_seed": 5
  })");
  const auto config = experiment_from_json(j, dir);
  REQUIRE(config.environment.has_value());
  CHECK(config.environment->mrp.n_states() == 3);
  CHECK(config.algorithms.size() == 2);
  CHECK(config.algorithms[0].emphasis.constant == 0.5);
  CHECK(config.algorithms[1].alphas == std::vector<double>{0.25, 0.5});
  CHECK(config.base_seed == 5);
  const auto records = run_experiment(config);
  CHECK(records.size() == (1 + 4) * 2 * 10);
  CHECK(records.front().task == "CUSTOM");
  std::filesystem::remove_all(dir);
}
