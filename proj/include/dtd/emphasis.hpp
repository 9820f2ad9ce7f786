#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dtd/mrp.hpp"

namespace dtd {

enum class EmphasisKind {
  Constant,
  Table,
  CountInverse,
  NoisePrior,
  AbsExpectedTdError,
};

std::string_view to_string(EmphasisKind kind);
EmphasisKind parse_emphasis_kind(std::string_view name);

inline constexpr double kDefaultEpsilonFloor = 1e-3;

/// Declarative emphasis choice. `constant` is used by Constant, `table` by
/// Table; the remaining kinds derive their values from the task or the run.
struct EmphasisSpec {
  EmphasisKind kind = EmphasisKind::Constant;
  double constant = 1.0;
  std::vector<double> table;
  double epsilon_floor = kDefaultEpsilonFloor;

  static EmphasisSpec unit() { return {}; }
  static EmphasisSpec constant_value(double c);
  static EmphasisSpec from_table(std::vector<double> values);
  static EmphasisSpec count_inverse(double eps = kDefaultEpsilonFloor);
  static EmphasisSpec noise_prior(double eps = kDefaultEpsilonFloor);
  static EmphasisSpec abs_expected_td(double eps = kDefaultEpsilonFloor);

  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;
  bool adaptive() const { return kind == EmphasisKind::AbsExpectedTdError; }
};

/// Per-run emphasis values. visit_counts is only maintained for CountInverse.
struct EmphasisState {
  EmphasisKind kind = EmphasisKind::Constant;
  double epsilon_floor = kDefaultEpsilonFloor;
  Vector values;
  std::vector<long long> visit_counts;

  double at(State s) const { return values(s); }
};

/// raw / max(raw), square-rooted, floored at epsilon_floor. A zero maximum
/// yields uniform emphasis 1.
Vector scale_and_root(const Vector& raw, double epsilon_floor);

/// Inverse normalized visitation pipeline. Unvisited states count as one
/// visit; all-zero counts give uniform emphasis 1.
Vector emphasis_from_counts(std::span<const long long> counts,
                            double epsilon_floor = kDefaultEpsilonFloor);

/// Same pipeline applied to (strictly positive) visitation frequencies.
Vector emphasis_from_frequencies(const Vector& frequencies,
                                 double epsilon_floor = kDefaultEpsilonFloor);

/// exp(-sigma), scaled and square-rooted.
Vector emphasis_from_noise(const Vector& sigma,
                           double epsilon_floor = kDefaultEpsilonFloor);

/// |r + gamma P Phi theta - Phi theta| under the exact dynamics, scaled and
/// square-rooted.
Vector emphasis_abs_expected_td(const MarkovRewardProcess& mrp,
                                const FeatureMap& features, const Vector& theta,
                                double epsilon_floor = kDefaultEpsilonFloor);

/// Initial per-run state for `spec`. theta seeds the adaptive kind.
EmphasisState make_emphasis_state(const EmphasisSpec& spec,
                                  const MarkovRewardProcess& mrp,
                                  const FeatureMap& features,
                                  const Vector& theta);

/// Records a visit and refreshes values. Throws std::logic_error unless the
/// state tracks counts.
void update_counts(State s, EmphasisState& state);

/// Recomputes the adaptive emphasis from theta; no-op for other kinds.
void refresh_adaptive(EmphasisState& state, const MarkovRewardProcess& mrp,
                      const FeatureMap& features, const Vector& theta);

}  // namespace dtd
