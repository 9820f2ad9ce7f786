#include <cmath>

#include "doctest.h"

#include "dtd/returns.hpp"
#include "dtd/verify.hpp"

using namespace dtd;

namespace {

// Three-step deterministic chain 0 -> 1 -> 2 -> terminal.
Trajectory three_steps() { return Trajectory{{0, 1, 2, kTerminal}, {1.0, 2.0, 3.0}}; }

// Direct definition of the discerning return as an n-step mixture with the
// final return absorbing the remaining weight.
double mixture_oracle(const Trajectory& traj, std::size_t t, const ReturnParams& p,
                      const Vector& theta, const FeatureMap& phi) {
  const std::size_t horizon = traj.length() - t;
  auto f = [&](std::size_t k) { return p.f_values[std::min(k, traj.length() - 1)]; };
  double total = 0.0;
  double used = 0.0;
  for (std::size_t n = 1; n < horizon; ++n) {
    const double w = std::pow(p.lambda, n - 1) * (f(t + n - 1) - p.lambda * f(t + n));
    total += w * n_step_return(traj, t, n, theta, phi, p.gamma);
    used += w;
  }
  total += (f(t) - used) * n_step_return(traj, t, horizon, theta, phi, p.gamma);
  return total / f(t);
}

}  // namespace

TEST_CASE("n-step returns") {
  const FeatureMap tab = make_feature_map(FeatureKind::Tabular, 3);
  const Vector zero = Vector::Zero(3);
  const auto traj = three_steps();
  CHECK(n_step_return(traj, 0, 3, zero, tab, 0.5) == doctest::Approx(2.75));
  const Vector theta = Vector::Constant(3, 10.0);
  CHECK(n_step_return(traj, 0, 1, theta, tab, 0.5) == doctest::Approx(1.0 + 0.5 * 10.0));
  CHECK(n_step_return(traj, 0, 2, theta, tab, 0.0) == doctest::Approx(1.0));
  CHECK(n_step_return(traj, 1, 10, theta, tab, 1.0) == doctest::Approx(5.0));
  Trajectory truncated{{0, 1}, {1.0}};
  CHECK(n_step_return(truncated, 0, 1, theta, tab, 1.0) == doctest::Approx(11.0));
  CHECK_THROWS(n_step_return(truncated, 0, 2, theta, tab, 1.0));
}

TEST_CASE("lambda-return limits") {
  const FeatureMap tab = make_feature_map(FeatureKind::Tabular, 3);
  const Vector theta(Vector::LinSpaced(3, 1.0, 3.0));
  const auto traj = three_steps();
  CHECK(lambda_return(traj, 0, theta, tab, 0.9, 0.0) ==
        doctest::Approx(n_step_return(traj, 0, 1, theta, tab, 0.9)));
  CHECK(lambda_return(traj, 0, theta, tab, 0.9, 1.0) == doctest::Approx(1 + 0.9 * 2 + 0.81 * 3));
}

TEST_CASE("weight identity") {
  const std::vector<double> ones(5, 1.0);
  CHECK(identity_check(ones, 0.7) == doctest::Approx(1.0).epsilon(1e-12));
  const std::vector<double> f = {2, 3, 5};
  CHECK(std::abs(identity_check(f, 0.5) - 2.0) < 1e-12);
  CHECK(identity_check(f, 0.0) == 2.0);
  CHECK_THROWS(identity_check(f, 1.0));
}

TEST_CASE("discerning return") {
  const auto env = make_random_walk(5, InitialState::Middle);
  Rng rng = make_rng(12);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const Trajectory traj = sample_episode(env.mrp, rng, 25);
    Vector theta(5);
    for (int i = 0; i < 5; ++i) theta(i) = normal(rng);
    ReturnParams p{unit(rng), 1.0, {}};
    for (std::size_t i = 0; i < traj.length(); ++i) p.f_values.push_back(unit(rng));
    for (std::size_t t = 0; t < traj.length(); ++t) {
      const double interp = discerning_return_interp(traj, t, p, theta, env.features);
      CHECK(interp == doctest::Approx(mixture_oracle(traj, t, p, theta, env.features)).epsilon(1e-10));
      CHECK(interp == doctest::Approx(discerning_return_tdsum(traj, t, p, theta, env.features)).epsilon(1e-10));
    }
    // Constant emphasis recovers the lambda-return; lambda = 0 the one-step target.
    ReturnParams flat{p.lambda, 1.0, std::vector<double>(traj.length(), 0.3)};
    CHECK(discerning_return_interp(traj, 0, flat, theta, env.features) ==
          doctest::Approx(lambda_return(traj, 0, theta, env.features, 1.0, p.lambda)).epsilon(1e-12));
    ReturnParams myopic{0.0, 1.0, p.f_values};
    CHECK(discerning_return_tdsum(traj, 0, myopic, theta, env.features) ==
          doctest::Approx(n_step_return(traj, 0, 1, theta, env.features, 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("exact values make every TD error vanish") {
  const FeatureMap tab = make_feature_map(FeatureKind::Tabular, 3);
  const auto traj = three_steps();
  Vector v(3);
  v << 6, 5, 3;
  for (double d : td_errors(traj, v, tab, 1.0)) CHECK(d == doctest::Approx(0.0));
  ReturnParams p{0.8, 1.0, {0.2, 0.9, 0.4}};
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(discerning_return_tdsum(traj, t, p, v, tab) == doctest::Approx(v(traj.states[t])));
  }
}

TEST_CASE("advantage estimator") {
  const FeatureMap tab = make_feature_map(FeatureKind::Tabular, 3);
  const auto traj = three_steps();
  const Vector theta = Vector::Zero(3);
  ReturnParams p{0.0, 0.9, {1, 0.5, 0.25}};
  const auto deltas = td_errors(traj, theta, tab, 0.9);
  const auto a = dae(traj, p, theta, tab);
  for (std::size_t t = 0; t < 3; ++t) CHECK(a[t] == doctest::Approx(deltas[t]));
  // Unit emphasis: sum of (gamma lambda)^k delta_{t+k}.
  ReturnParams gae{0.5, 0.9, {1, 1, 1}};
  const auto b = dae(traj, gae, theta, tab);
  CHECK(b[0] == doctest::Approx(1 + 0.45 * 2 + 0.45 * 0.45 * 3));
}

TEST_CASE("trajectory validation") {
  Trajectory bad{{0, kTerminal, 1}, {1.0, 2.0}};
  CHECK_THROWS(bad.validate());
  Trajectory mismatched{{0, 1}, {1.0, 2.0}};
  CHECK_THROWS(mismatched.validate());
}
