#include "dtd/json_io.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>
#include <string>

namespace dtd {

namespace {

Json vector_json(const Vector& v) {
  auto arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Json matrix_json(const Matrix& m) {
  auto rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Vector vector_from(const Json& j, const char* field) {
  if (!j.is_array()) throw std::invalid_argument(std::string(field) + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Matrix matrix_from(const Json& j, const char* field) {
  if (!j.is_array() || j.empty()) {
    throw std::invalid_argument(std::string(field) + " must be a nonempty array of rows");
  }
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      throw std::invalid_argument(std::string(field) + " rows have unequal length");
    }
    for (std::size_t k = 0; k < cols; ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

double parse_number(std::string_view text) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("not a number: " + std::string(text));
  }
  return value;
}

}  // namespace

Json to_json(const MarkovRewardProcess& mrp) {
  Json j;
  j["n_states"] = mrp.n_states();
  j["transition"] = matrix_json(mrp.transition());
  j["expected_reward"] = vector_json(mrp.expected_reward());
  j["reward_noise_std"] = vector_json(mrp.reward_noise_std());
  j["initial_dist"] = vector_json(mrp.initial_dist());
  j["discount"] = mrp.discount();
  if (mrp.transition_reward()) {
    j["transition_reward"] = matrix_json(*mrp.transition_reward());
  }
  return j;
}

Json to_json(const FeatureMap& features) {
  Json j;
  j["phi"] = matrix_json(features.phi());
  return j;
}

Json to_json(const Environment& env) {
  Json j;
  j["mrp"] = to_json(env.mrp);
  j["features"] = to_json(env.features);
  return j;
}

MarkovRewardProcess mrp_from_json(const Json& j) {
  const Matrix p = matrix_from(j.at("transition"), "transition");
  const int n = j.at("n_states").get<int>();
  if (p.rows() != n) throw std::invalid_argument("n_states disagrees with transition");
  std::optional<Matrix> table;
  if (j.contains("transition_reward")) {
    table = matrix_from(j.at("transition_reward"), "transition_reward");
  }
  return MarkovRewardProcess(p, vector_from(j.at("expected_reward"), "expected_reward"),
                             vector_from(j.at("reward_noise_std"), "reward_noise_std"),
                             vector_from(j.at("initial_dist"), "initial_dist"),
                             j.at("discount").get<double>(), std::move(table));
}

FeatureMap features_from_json(const Json& j) {
  return FeatureMap(matrix_from(j.at("phi"), "phi"));
}

Environment environment_from_json(const Json& j) {
  Environment env{mrp_from_json(j.at("mrp")), features_from_json(j.at("features"))};
  if (env.features.n_states() != env.mrp.n_states()) {
    throw std::invalid_argument("feature rows do not match n_states");
  }
  return env;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return Json::parse(in);
}

Environment load_environment(const std::filesystem::path& path) {
  return environment_from_json(read_json_file(path));
}

void save_environment(const Environment& env, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << to_json(env).dump(2) << '\n';
}

Json to_json(const EmphasisSpec& spec) {
  Json j;
  j["kind"] = std::string(to_string(spec.kind));
  if (spec.kind == EmphasisKind::Constant) j["params"] = spec.constant;
  if (spec.kind == EmphasisKind::Table) j["params"] = spec.table;
  j["epsilon_floor"] = spec.epsilon_floor;
  return j;
}

EmphasisSpec emphasis_from_json(const Json& j) {
  EmphasisSpec spec;
  spec.kind = parse_emphasis_kind(j.at("kind").get<std::string>());
  if (spec.kind == EmphasisKind::Constant) {
    spec.constant = j.contains("params") ? j.at("params").get<double>() : 1.0;
  }
  if (spec.kind == EmphasisKind::Table) {
    spec.table = j.at("params").get<std::vector<double>>();
  }
  if (j.contains("epsilon_floor")) spec.epsilon_floor = j.at("epsilon_floor").get<double>();
  spec.validate();
  return spec;
}

EmphasisSpec parse_emphasis(std::string_view text) {
  EmphasisSpec spec;
  if (const auto at = text.find('@'); at != std::string_view::npos) {
    spec.epsilon_floor = parse_number(text.substr(at + 1));
    text = text.substr(0, at);
  }
  std::string_view params;
  if (const auto colon = text.find(':'); colon != std::string_view::npos) {
    params = text.substr(colon + 1);
    text = text.substr(0, colon);
  }
  spec.kind = parse_emphasis_kind(text);
  if (spec.kind == EmphasisKind::Constant) {
    spec.constant = params.empty() ? 1.0 : parse_number(params);
  } else if (spec.kind == EmphasisKind::Table) {
    while (!params.empty()) {
      const auto comma = params.find(',');
      spec.table.push_back(parse_number(params.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      params = params.substr(comma + 1);
    }
  } else if (!params.empty()) {
    throw std::invalid_argument("emphasis kind takes no parameters: " + std::string(text));
  }
  spec.validate();
  return spec;
}

ExperimentConfig experiment_from_json(const Json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig config;
  if (j.contains("env_file")) {
    std::filesystem::path env_path = j.at("env_file").get<std::string>();
    if (env_path.is_relative() && !base_dir.empty()) env_path = base_dir / env_path;
    config.environment = load_environment(env_path);
    config.task = TaskSpec{TaskKind::Custom};
  } else {
    config.task = parse_task(j.at("task").get<std::string>());
  }
  for (const auto& a : j.at("algorithms")) {
    AlgoGrid grid;
    grid.algorithm = parse_algorithm(a.at("algorithm").get<std::string>());
    if (a.contains("lambda")) grid.lambdas = a.at("lambda").get<std::vector<double>>();
    if (a.contains("alpha")) grid.alphas = a.at("alpha").get<std::vector<double>>();
    if (a.contains("alpha_decay")) grid.alpha_decay = a.at("alpha_decay").get<double>();
    if (a.contains("emphasis")) {
      const auto& e = a.at("emphasis");
      grid.emphasis = e.is_string() ? parse_emphasis(e.get<std::string>())
                                    : emphasis_from_json(e);
    }
    config.algorithms.push_back(std::move(grid));
  }
  config.runs = j.value("runs", config.runs);
  config.steps = j.value("steps", config.steps);
  config.eval_every = j.value("eval_every", config.eval_every);
  config.base_seed = j.value("base_seed", config.base_seed);
  config.threads = j.value("threads", config.threads);
  config.validate();
  return config;
}

}  // namespace dtd
