#include "dtd/emphasis.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dtd {

std::string_view to_string(EmphasisKind kind) {
  switch (kind) {
    case EmphasisKind::Constant: return "constant";
    case EmphasisKind::Table: return "table";
    case EmphasisKind::CountInverse: return "count";
    case EmphasisKind::NoisePrior: return "noise";
    case EmphasisKind::AbsExpectedTdError: return "abs-td";
  }
  return "unknown";
}

EmphasisKind parse_emphasis_kind(std::string_view name) {
  if (name == "constant") return EmphasisKind::Constant;
  if (name == "table") return EmphasisKind::Table;
  if (name == "count" || name == "count-inverse") return EmphasisKind::CountInverse;
  if (name == "noise" || name == "noise-prior") return EmphasisKind::NoisePrior;
  if (name == "abs-td" || name == "abs-expected-td")
    return EmphasisKind::AbsExpectedTdError;
  throw std::invalid_argument("unknown emphasis kind: " + std::string(name));
}

EmphasisSpec EmphasisSpec::constant_value(double c) {
  EmphasisSpec spec;
  spec.constant = c;
  spec.validate();
  return spec;
}

EmphasisSpec EmphasisSpec::from_table(std::vector<double> values) {
  EmphasisSpec spec;
  spec.kind = EmphasisKind::Table;
  spec.table = std::move(values);
  spec.validate();
  return spec;
}

EmphasisSpec EmphasisSpec::count_inverse(double eps) {
  EmphasisSpec spec;
  spec.kind = EmphasisKind::CountInverse;
  spec.epsilon_floor = eps;
  spec.validate();
  return spec;
}

EmphasisSpec EmphasisSpec::noise_prior(double eps) {
  EmphasisSpec spec;
  spec.kind = EmphasisKind::NoisePrior;
  spec.epsilon_floor = eps;
  spec.validate();
  return spec;
}

EmphasisSpec EmphasisSpec::abs_expected_td(double eps) {
  EmphasisSpec spec;
  spec.kind = EmphasisKind::AbsExpectedTdError;
  spec.epsilon_floor = eps;
  spec.validate();
  return spec;
}

void EmphasisSpec::validate() const {
  if (!(epsilon_floor > 0.0 && epsilon_floor < 1.0)) {
    throw std::invalid_argument("epsilon_floor must lie in (0, 1)");
  }
  // Zero is allowed here so a PTD preference can switch updates off; DTD
  // itself requires strictly positive emphasis (see AlgoConfig::validate).
  if (kind == EmphasisKind::Constant && !(constant >= 0.0 && std::isfinite(constant))) {
    throw std::invalid_argument("constant emphasis must be nonnegative");
  }
  if (kind == EmphasisKind::Table) {
    if (table.empty()) throw std::invalid_argument("emphasis table is empty");
    for (double v : table) {
      if (!(v >= 0.0 && std::isfinite(v))) {
        throw std::invalid_argument("emphasis table entries must be nonnegative");
      }
    }
  }
}

Vector scale_and_root(const Vector& raw, double epsilon_floor) {
  if (raw.size() == 0) return raw;
  if (!raw.allFinite() || (raw.array() < 0.0).any()) {
    throw std::invalid_argument("raw emphasis must be finite and nonnegative");
  }
  const double peak = raw.maxCoeff();
  if (peak <= 0.0) return Vector::Ones(raw.size());
  return (raw / peak).cwiseSqrt().cwiseMax(epsilon_floor);
}

Vector emphasis_from_frequencies(const Vector& frequencies,
                                 double epsilon_floor) {
  if ((frequencies.array() <= 0.0).any()) {
    throw std::invalid_argument("visitation frequencies must be positive");
  }
  const Vector normalized = frequencies / frequencies.sum();
  return scale_and_root(normalized.cwiseInverse(), epsilon_floor);
}

Vector emphasis_from_counts(std::span<const long long> counts,
                            double epsilon_floor) {
  const auto n = static_cast<Eigen::Index>(counts.size());
  const long long total = std::accumulate(counts.begin(), counts.end(), 0LL);
  if (total == 0) return Vector::Ones(n);
  Vector imputed(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (counts[i] < 0) throw std::invalid_argument("negative visit count");
    imputed(i) = counts[i] == 0 ? 1.0 : static_cast<double>(counts[i]);
  }
  return emphasis_from_frequencies(imputed, epsilon_floor);
}

Vector emphasis_from_noise(const Vector& sigma, double epsilon_floor) {
  if ((sigma.array() < 0.0).any()) {
    throw std::invalid_argument("noise levels must be nonnegative");
  }
  return scale_and_root((-sigma.array()).exp().matrix(), epsilon_floor);
}

Vector emphasis_abs_expected_td(const MarkovRewardProcess& mrp,
                                const FeatureMap& features, const Vector& theta,
                                double epsilon_floor) {
  if (theta.size() != features.n_features()) {
    throw std::invalid_argument("theta has wrong length");
  }
  const Vector v = features.phi() * theta;
  const Vector td = mrp.expected_reward() +
                    mrp.discount() * (mrp.transition() * v) - v;
  return scale_and_root(td.cwiseAbs(), epsilon_floor);
}

EmphasisState make_emphasis_state(const EmphasisSpec& spec,
                                  const MarkovRewardProcess& mrp,
                                  const FeatureMap& features,
                                  const Vector& theta) {
  spec.validate();
  const int n = mrp.n_states();
  EmphasisState state;
  state.kind = spec.kind;
  state.epsilon_floor = spec.epsilon_floor;
  switch (spec.kind) {
    case EmphasisKind::Constant:
      state.values = Vector::Constant(n, spec.constant);
      break;
    case EmphasisKind::Table:
      if (static_cast<int>(spec.table.size()) != n) {
        throw std::invalid_argument("emphasis table length != n_states");
      }
      state.values = Eigen::Map<const Vector>(spec.table.data(), n);
      break;
    case EmphasisKind::CountInverse:
      state.visit_counts.assign(n, 0);
      state.values = emphasis_from_counts(state.visit_counts, spec.epsilon_floor);
      break;
    case EmphasisKind::NoisePrior:
      state.values = emphasis_from_noise(mrp.reward_noise_std(), spec.epsilon_floor);
      break;
    case EmphasisKind::AbsExpectedTdError:
      state.values =
          emphasis_abs_expected_td(mrp, features, theta, spec.epsilon_floor);
      break;
  }
  return state;
}

void update_counts(State s, EmphasisState& state) {
  if (state.kind != EmphasisKind::CountInverse) {
    throw std::logic_error("update_counts requires count-inverse emphasis");
  }
  if (s < 0 || s >= static_cast<State>(state.visit_counts.size())) {
    throw std::out_of_range("update_counts: state out of range");
  }
  ++state.visit_counts[s];
  state.values = emphasis_from_counts(state.visit_counts, state.epsilon_floor);
}

void refresh_adaptive(EmphasisState& state, const MarkovRewardProcess& mrp,
                      const FeatureMap& features, const Vector& theta) {
  if (state.kind != EmphasisKind::AbsExpectedTdError) return;
  state.values =
      emphasis_abs_expected_td(mrp, features, theta, state.epsilon_floor);
}

}  // namespace dtd
