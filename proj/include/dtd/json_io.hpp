#pragma once

#include <filesystem>
#include <string_view>

#include "json.hpp"

#include "dtd/emphasis.hpp"
#include "dtd/harness.hpp"
#include "dtd/mrp.hpp"

namespace dtd {

using Json = nlohmann::ordered_json;

// Environment file schema:
//   {
//     "mrp": {
//       "n_states": n,
//       "transition": [[...n...] x n],
//       "expected_reward": [...n...],
//       "reward_noise_std": [...n...],
//       "initial_dist": [...n...],
//       "discount": g,
//       "transition_reward": [[...n+1...] x n]      (optional)
//     },
//     "features": { "phi": [[...K...] x n] }
//   }

Json to_json(const MarkovRewardProcess& mrp);
Json to_json(const FeatureMap& features);
Json to_json(const Environment& env);

MarkovRewardProcess mrp_from_json(const Json& j);
FeatureMap features_from_json(const Json& j);
Environment environment_from_json(const Json& j);

Environment load_environment(const std::filesystem::path& path);
void save_environment(const Environment& env, const std::filesystem::path& path);

/// {"kind": ..., "params": ..., "epsilon_floor": ...}; params is the
/// constant for "constant", the value list for "table", absent otherwise.
Json to_json(const EmphasisSpec& spec);
EmphasisSpec emphasis_from_json(const Json& j);

/// CLI form: "count", "noise", "abs-td", "constant:<c>", "table:<v1>,<v2>,...",
/// each optionally followed by "@<epsilon_floor>".
EmphasisSpec parse_emphasis(std::string_view text);

/// Sweep config: {"task", "env_file"?, "algorithms": [{"algorithm",
/// "lambda": [...], "alpha": [...], "alpha_decay"?, "emphasis"?}], "runs",
/// "steps", "eval_every", "base_seed", "threads"?}.
ExperimentConfig experiment_from_json(const Json& j,
                                      const std::filesystem::path& base_dir = {});

Json read_json_file(const std::filesystem::path& path);

}  // namespace dtd
