#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dtd/json_io.hpp"
#include "dtd/mrp.hpp"
#include "dtd/returns.hpp"

namespace dtd {

struct CheckResult {
  std::string name;
  Json inputs;
  /// Slack against the threshold; positive when the check passes.
  double margin = 0.0;
  bool pass = false;
  std::string detail;
};

struct VerifyOptions {
  /// Substring filter on check names; empty runs everything.
  std::string filter;
  std::uint64_t seed = 20240917;
  /// Replaces the fixed emphasis used by the RW5_MIDDLE geometry checks.
  std::optional<Vector> emphasis_override;
};

std::vector<std::string> verify_check_names();
std::vector<CheckResult> verify_all(const VerifyOptions& options = {});
/// Runs one check by exact name; throws std::out_of_range for an unknown name.
CheckResult run_check(std::string_view name, const VerifyOptions& options = {});
Json report_json(const std::vector<CheckResult>& results);

/// Continuing MRP: Dirichlet(1) rows, uniform start, N(0,1) rewards.
MarkovRewardProcess random_continuing_mrp(int n_states, double discount, Rng& rng);

/// A random instance for the contraction / negative-definiteness checks.
/// f is drawn in [0.5, 1] and then scaled until condition (i) holds.
struct ContractionInstance {
  MarkovRewardProcess mrp;
  FeatureMap features;
  Vector f;
  double lambda = 0.0;
  Vector d;
};
ContractionInstance random_contraction_instance(Rng& rng);

/// Samples one episode (or a truncated prefix of at most max_len steps).
Trajectory sample_episode(const MarkovRewardProcess& mrp, Rng& rng, std::size_t max_len);

/// Long-run count-inverse emphasis: the count pipeline applied to d_pi.
Vector stationary_count_emphasis(const MarkovRewardProcess& mrp,
                                 double epsilon_floor = kDefaultEpsilonFloor);

/// Multiplies f by the largest factor of the form 0.9^k (k >= 0) for which
/// condition (i) holds at lambda; returns the scaled vector.
Vector scale_into_contraction_class(const MarkovRewardProcess& mrp, const Vector& f,
                                    double lambda, const Vector& d);

}  // namespace dtd
