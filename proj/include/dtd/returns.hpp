#pragma once

#include <span>
#include <vector>

#include "dtd/mrp.hpp"

namespace dtd {

/// states[0..T] with rewards[0..T-1]; rewards[k] is R_{k+1}, received on
/// the step out of states[k]. Ends at kTerminal or, when truncated, at a
/// non-terminal state that is bootstrapped from.
struct Trajectory {
  std::vector<State> states;
  std::vector<double> rewards;

  std::size_t length() const { return rewards.size(); }
  bool terminated() const {
    return !states.empty() && states.back() == kTerminal;
  }
  void validate() const;
};

/// f_values[k] is the emphasis of states[k] for k < T. Past the end, Eq.-10
/// style mixtures extend the final value and TD-error sums use zero.
struct ReturnParams {
  double lambda = 0.0;
  double gamma = 1.0;
  std::vector<double> f_values;
};

/// sum_{k=1..n} gamma^{k-1} R_{t+k} + gamma^n v(S_{t+n}). On a terminated
/// trajectory n may run past the end (the remaining terms are zero).
double n_step_return(const Trajectory& traj, std::size_t t, std::size_t n,
                     const Vector& theta, const FeatureMap& features,
                     double gamma);

/// lambda-return with the final available n-step return absorbing the
/// residual weight lambda^{T-t-1}.
double lambda_return(const Trajectory& traj, std::size_t t, const Vector& theta,
                     const FeatureMap& features, double gamma, double lambda);

/// sum_{n>=0} lambda^n (f_n - lambda f_{n+1}) with the last entry of f
/// repeated forever. Equals f[0].
double identity_check(std::span<const double> f, double lambda);

/// Discerning lambda-return as a mixture of n-step returns:
///   (1/f_t) sum_{n>=1} lambda^{n-1} (f_{t+n-1} - lambda f_{t+n}) G_t^(n)
double discerning_return_interp(const Trajectory& traj, std::size_t t,
                                const ReturnParams& params, const Vector& theta,
                                const FeatureMap& features);

/// Discerning lambda-return as an emphasis-weighted TD-error sum:
///   v(S_t) + (1/f_t) sum_{n>=0} (gamma lambda)^n delta_{t+n} f_{t+n}
double discerning_return_tdsum(const Trajectory& traj, std::size_t t,
                               const ReturnParams& params, const Vector& theta,
                               const FeatureMap& features);

/// One-step TD errors delta_0..delta_{T-1} with theta frozen.
std::vector<double> td_errors(const Trajectory& traj, const Vector& theta,
                              const FeatureMap& features, double gamma);

/// Discerning advantage estimates for every t, by a single backward pass:
///   U_t = f_t delta_t + gamma lambda U_{t+1},  A_t = U_t / f_t.
std::vector<double> dae(const Trajectory& traj, const ReturnParams& params,
                        const Vector& theta, const FeatureMap& features);

}  // namespace dtd
