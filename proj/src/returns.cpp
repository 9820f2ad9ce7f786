#include "dtd/returns.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dtd {

namespace {

double value_at(const FeatureMap& features, State s, const Vector& theta) {
  return s == kTerminal ? 0.0 : features.phi().row(s).dot(theta);
}

void check_start(const Trajectory& traj, std::size_t t) {
  traj.validate();
  if (t >= traj.length()) throw std::out_of_range("start index past the last transition");
}

/// Emphasis at trajectory index k with the final value extended forever.
double extended_f(const ReturnParams& params, std::size_t k, std::size_t horizon) {
  return params.f_values[std::min(k, horizon - 1)];
}

void check_params(const Trajectory& traj, const ReturnParams& params) {
  if (params.f_values.size() < traj.length()) {
    throw std::invalid_argument("one emphasis value per transition is required");
  }
  for (std::size_t k = 0; k < traj.length(); ++k) {
    if (!(params.f_values[k] > 0.0) || !std::isfinite(params.f_values[k])) {
      throw std::domain_error("emphasis values must be positive");
    }
  }
  if (!(params.lambda >= 0.0 && params.lambda <= 1.0)) {
    throw std::invalid_argument("lambda must lie in [0, 1]");
  }
}

}  // namespace

void Trajectory::validate() const {
  if (states.size() != rewards.size() + 1) {
    throw std::invalid_argument("trajectory needs exactly one more state than rewards");
  }
  for (std::size_t k = 0; k + 1 < states.size(); ++k) {
    if (states[k] == kTerminal) {
      throw std::invalid_argument("terminal state inside trajectory");
    }
  }
  for (double r : rewards) {
    if (!std::isfinite(r)) throw std::invalid_argument("non-finite reward");
  }
}

double n_step_return(const Trajectory& traj, std::size_t t, std::size_t n,
                     const Vector& theta, const FeatureMap& features,
                     double gamma) {
  check_start(traj, t);
  if (n == 0) throw std::invalid_argument("n must be at least 1");
  const std::size_t horizon = traj.length() - t;
  if (n > horizon) {
    if (!traj.terminated()) {
      throw std::out_of_range("n-step return runs past a truncated trajectory");
    }
    n = horizon;
  }
  double g = 0.0;
  double discount = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    g += discount * traj.rewards[t + k];
    discount *= gamma;
  }
  return g + discount * value_at(features, traj.states[t + n], theta);
}

double lambda_return(const Trajectory& traj, std::size_t t, const Vector& theta,
                     const FeatureMap& features, double gamma, double lambda) {
  check_start(traj, t);
  const std::size_t horizon = traj.length() - t;
  double result = 0.0;
  double reward_sum = 0.0;
  double discount = 1.0;
  double weight = 1.0;  // lambda^{n-1}
  for (std::size_t n = 1; n <= horizon; ++n) {
    reward_sum += discount * traj.rewards[t + n - 1];
    discount *= gamma;
    const double g_n =
        reward_sum + discount * value_at(features, traj.states[t + n], theta);
    result += (n < horizon ? (1.0 - lambda) * weight : weight) * g_n;
    weight *= lambda;
  }
  return result;
}

double identity_check(std::span<const double> f, double lambda) {
  if (f.empty()) throw std::invalid_argument("empty emphasis sequence");
  if (!(lambda >= 0.0 && lambda < 1.0)) {
    throw std::invalid_argument("identity requires lambda in [0, 1)");
  }
  double sum = 0.0;
  double power = 1.0;
  for (std::size_t n = 0; n + 1 < f.size(); ++n) {
    sum += power * (f[n] - lambda * f[n + 1]);
    power *= lambda;
  }
  // Constant tail f_last: terms lambda^n (1 - lambda) f_last until negligible.
  const double last = f.back();
  const double step = (1.0 - lambda) * last;
  for (int guard = 0; power > 0.0 && guard < 1'000'000; ++guard) {
    const double term = power * step;
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    power *= lambda;
  }
  return sum;
}

double discerning_return_interp(const Trajectory& traj, std::size_t t,
                                const ReturnParams& params, const Vector& theta,
                                const FeatureMap& features) {
  check_start(traj, t);
  check_params(traj, params);
  const std::size_t end = traj.length();
  const std::size_t horizon = end - t;
  const double lambda = params.lambda;
  const double gamma = params.gamma;

  double mixture = 0.0;
  double reward_sum = 0.0;
  double discount = 1.0;
  double weight = 1.0;  // lambda^{n-1}
  for (std::size_t n = 1; n <= horizon; ++n) {
    reward_sum += discount * traj.rewards[t + n - 1];
    discount *= gamma;
    const double g_n =
        reward_sum + discount * value_at(features, traj.states[t + n], theta);
    const double f_prev = extended_f(params, t + n - 1, end);
    if (n < horizon) {
      const double f_next = extended_f(params, t + n, end);
      mixture += weight * (f_prev - lambda * f_next) * g_n;
    } else {
      // Every n >= horizon reuses G^(horizon); their weights sum to
      // lambda^{horizon-1} f_last under the constant extension.
      mixture += weight * f_prev * g_n;
    }
    weight *= lambda;
  }
  return mixture / params.f_values[t];
}

double discerning_return_tdsum(const Trajectory& traj, std::size_t t,
                               const ReturnParams& params, const Vector& theta,
                               const FeatureMap& features) {
  check_start(traj, t);
  check_params(traj, params);
  const double decay = params.gamma * params.lambda;
  double sum = 0.0;
  double power = 1.0;
  for (std::size_t k = t; k < traj.length(); ++k) {
    const double delta = traj.rewards[k] +
                         params.gamma * value_at(features, traj.states[k + 1], theta) -
                         value_at(features, traj.states[k], theta);
    sum += power * delta * params.f_values[k];
    power *= decay;
  }
  return value_at(features, traj.states[t], theta) + sum / params.f_values[t];
}

std::vector<double> td_errors(const Trajectory& traj, const Vector& theta,
                              const FeatureMap& features, double gamma) {
  traj.validate();
  std::vector<double> deltas(traj.length());
  for (std::size_t k = 0; k < traj.length(); ++k) {
    deltas[k] = traj.rewards[k] +
                gamma * value_at(features, traj.states[k + 1], theta) -
                value_at(features, traj.states[k], theta);
  }
  return deltas;
}

std::vector<double> dae(const Trajectory& traj, const ReturnParams& params,
                        const Vector& theta, const FeatureMap& features) {
  check_params(traj, params);
  const std::vector<double> deltas = td_errors(traj, theta, features, params.gamma);
  const double decay = params.gamma * params.lambda;
  std::vector<double> advantages(deltas.size());
  double tail = 0.0;
  for (std::size_t k = deltas.size(); k-- > 0;) {
    tail = params.f_values[k] * deltas[k] + decay * tail;
    advantages[k] = tail / params.f_values[k];
  }
  return advantages;
}

}  // namespace dtd
