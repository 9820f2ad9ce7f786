#include <cmath>

#include "doctest.h"

#include "dtd/mrp.hpp"

using namespace dtd;

namespace {

MarkovRewardProcess two_step_chain() {
  Matrix p(2, 2);
  p << 0, 1, 0, 0;
  return MarkovRewardProcess(p, Vector::Ones(2), Vector::Zero(2), Vector::Unit(2, 0), 1.0);
}

}  // namespace

TEST_CASE("constructor rejects malformed processes") {
  Matrix p(2, 2);
  p << 0.5, 0.6, 0, 0;
  CHECK_THROWS_AS(MarkovRewardProcess(p, Vector::Zero(2), Vector::Zero(2), Vector::Unit(2, 0), 1.0),
                  std::invalid_argument);
  p << 0.5, -0.1, 0, 0;
  CHECK_THROWS_AS(MarkovRewardProcess(p, Vector::Zero(2), Vector::Zero(2), Vector::Unit(2, 0), 1.0),
                  std::invalid_argument);
  p << 0, 1, 0, 0;
  CHECK_THROWS_AS(MarkovRewardProcess(p, Vector::Zero(2), -Vector::Ones(2), Vector::Unit(2, 0), 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(MarkovRewardProcess(p, Vector::Zero(2), Vector::Zero(2), Vector::Ones(2), 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(MarkovRewardProcess(p, Vector::Zero(2), Vector::Zero(2), Vector::Unit(2, 0), 1.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(MarkovRewardProcess(p, Vector::Zero(3), Vector::Zero(2), Vector::Unit(2, 0), 1.0),
                  std::invalid_argument);
}

TEST_CASE("five-state walk has values k/6") {
  const auto env = make_random_walk(5, InitialState::Middle);
  const Vector v = true_value(env.mrp);
  for (int k = 0; k < 5; ++k) CHECK(v(k) == doctest::Approx((k + 1) / 6.0).epsilon(1e-12));
  CHECK(env.mrp.initial_dist() == Vector::Unit(5, 2));
  CHECK(env.mrp.expected_reward()(4) == doctest::Approx(0.5));
  CHECK(env.mrp.episodic());
}

TEST_CASE("two-state walk from the left") {
  const auto env = make_random_walk(2, InitialState::Left);
  const Vector v = true_value(env.mrp);
  CHECK(v(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(v(1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("zero rewards give zero values") {
  const auto env = make_noisy_chain(0.0);
  CHECK(true_value(env.mrp).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("singular Bellman system is reported") {
  Matrix p(1, 1);
  p << 1.0;
  const MarkovRewardProcess mrp(p, Vector::Ones(1), Vector::Zero(1), Vector::Ones(1), 1.0);
  CHECK_THROWS_AS(true_value(mrp), std::domain_error);
}

TEST_CASE("stationary distribution") {
  SUBCASE("single recurrent state") {
    Matrix p(1, 1);
    p << 1.0;
    const MarkovRewardProcess mrp(p, Vector::Zero(1), Vector::Zero(1), Vector::Ones(1), 0.9);
    CHECK(stationary_distribution(mrp)(0) == doctest::Approx(1.0));
  }
  SUBCASE("periodic chain is rejected") {
    Matrix p(2, 2);
    p << 0, 1, 1, 0;
    const MarkovRewardProcess mrp(p, Vector::Zero(2), Vector::Zero(2), Vector::Unit(2, 0), 0.9);
    CHECK_FALSE(restart_chain_is_primitive(mrp));
    CHECK_THROWS_AS(stationary_distribution(mrp), std::domain_error);
  }
  SUBCASE("middle start is symmetric and peaks in the middle") {
    const auto env = make_random_walk(5, InitialState::Middle);
    const Vector d = stationary_distribution(env.mrp);
    // Left-eigenvector oracle: solve d (I - P_restart) = 0 with sum one.
    const Matrix pr = env.mrp.restart_transition();
    Matrix a = (Matrix::Identity(5, 5) - pr).transpose();
    a.row(4).setOnes();
    const Vector oracle = a.fullPivLu().solve(Vector::Unit(5, 4));
    CHECK((d - oracle).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::Index arg = 0;
    d.maxCoeff(&arg);
    CHECK(arg == 2);
    CHECK(d(0) == doctest::Approx(d(4)));
    CHECK(d(1) == doctest::Approx(d(3)));
  }
  SUBCASE("left start skews visits left") {
    const auto env = make_random_walk(5, InitialState::Left);
    const Vector d = stationary_distribution(env.mrp);
    for (int k = 0; k < 4; ++k) CHECK(d(k) > d(k + 1));
  }
}

TEST_CASE("sampling") {
  SUBCASE("deterministic chain") {
    const auto mrp = two_step_chain();
    Rng rng = make_rng(1);
    for (int i = 0; i < 10; ++i) {
      const auto tr = sample_transition(mrp, 0, rng);
      CHECK(tr.reward == 1.0);
      CHECK(tr.next == 1);
      CHECK(sample_transition(mrp, 1, rng).next == kTerminal);
    }
  }
  SUBCASE("walk neighbours are equally likely") {
    const auto env = make_random_walk(5, InitialState::Middle);
    Rng rng = make_rng(2);
    const int n = 100000;
    int left = 0;
    for (int i = 0; i < n; ++i) left += sample_transition(env.mrp, 2, rng).next == 1 ? 1 : 0;
    // Chi-squared with one degree of freedom, 1e-3 level: 10.83.
    const double expected = n / 2.0;
    const double chi2 = 2 * (left - expected) * (left - expected) / expected;
    CHECK(chi2 < 10.83);
  }
  SUBCASE("right exit pays one, left exit pays nothing") {
    const auto env = make_random_walk(5, InitialState::Middle);
    Rng rng = make_rng(3);
    for (int i = 0; i < 200; ++i) {
      const auto right = sample_transition(env.mrp, 4, rng);
      CHECK(right.reward == (right.next == kTerminal ? 1.0 : 0.0));
      CHECK(sample_transition(env.mrp, 0, rng).reward == 0.0);
    }
  }
  SUBCASE("reward noise moments") {
    Matrix p(1, 1);
    p << 0.5;
    const MarkovRewardProcess mrp(p, Vector::Zero(1), Vector::Ones(1), Vector::Ones(1), 1.0);
    Rng rng = make_rng(4);
    const int n = 100000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
      const double r = sample_transition(mrp, 0, rng).reward;
      sum += r;
      sq += r * r;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(sd - 1.0) < 0.02);
  }
  SUBCASE("same seed, same stream") {
    Rng a = make_rng(9, 3), b = make_rng(9, 3), c = make_rng(9, 4);
    CHECK(a() == b());
    CHECK(a() != c());
  }
}

TEST_CASE("noisy chain") {
  const auto env = make_noisy_chain(1.0);
  CHECK(env.mrp.n_states() == 10);
  CHECK(env.mrp.initial_dist().isApprox(Vector::Constant(10, 0.1)));
  CHECK(env.mrp.expected_reward().isApprox(Vector::Ones(10)));
  for (int i = 0; i < 10; ++i) CHECK(env.mrp.reward_noise_std()(i) == doctest::Approx(0.1 * (i + 1)));
}

TEST_CASE("Boyan chain features represent its values") {
  const auto env = make_boyan_chain();
  const Vector v = true_value(env.mrp);
  for (int k = 0; k < 13; ++k) CHECK(v(k) == doctest::Approx(-2.0 * k));
  const Vector theta = env.features.phi().colPivHouseholderQr().solve(v);
  CHECK((env.features.phi() * theta - v).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("feature maps") {
  CHECK(make_feature_map(FeatureKind::Tabular, 5).phi() == Matrix::Identity(5, 5));
  const Matrix inv = make_feature_map(FeatureKind::Inverted, 5).phi();
  for (int i = 0; i < 5; ++i) {
    CHECK(inv(i, i) == 0.0);
    CHECK(inv.row(i).norm() == doctest::Approx(1.0));
  }
  const Matrix dep = make_feature_map(FeatureKind::Dependent, 5).phi();
  CHECK(dep.cols() == 3);
  for (int i = 0; i < 5; ++i) CHECK(dep.row(i).norm() == doctest::Approx(1.0));
  Eigen::JacobiSVD<Matrix> svd(dep);
  CHECK((svd.singularValues().array() > 1e-10).count() == 3);
  CHECK_THROWS_AS(FeatureMap(Matrix::Ones(3, 2)), std::invalid_argument);
  const FeatureMap tab = make_feature_map(FeatureKind::Tabular, 3);
  CHECK(tab.features(kTerminal).isZero());
  CHECK(tab.value(kTerminal, Vector::Ones(3)) == 0.0);
}
