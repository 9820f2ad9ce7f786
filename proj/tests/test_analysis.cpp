#include <cmath>

#include "doctest.h"

#include "dtd/analysis.hpp"
#include "dtd/verify.hpp"

using namespace dtd;

namespace {

// A and b from the expectation over the restart chain, built term by term
// without the closed-form resolvent: sum_k (gamma lambda P)^k.
LinearSystem series_oracle(const MarkovRewardProcess& mrp, const FeatureMap& features,
                           const Vector& f, double lambda, const Vector& d) {
  const Matrix& p = mrp.transition();
  const Eigen::Index n = p.rows();
  const double g = mrp.discount();
  Matrix resolvent = Matrix::Zero(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 0; k < 5000; ++k) {
    resolvent += term;
    term = g * lambda * term * p;
  }
  const Matrix phi = features.phi();
  const Matrix left = phi.transpose() * (f.cwiseProduct(d)).asDiagonal() * resolvent * f.asDiagonal();
  return {left * (g * p - Matrix::Identity(n, n)) * phi, left * mrp.expected_reward()};
}

}  // namespace

TEST_CASE("projection") {
  const FeatureMap tab = make_feature_map(FeatureKind::Tabular, 4);
  CHECK(projection(tab, Vector::LinSpaced(4, 0.1, 0.7)).isApprox(Matrix::Identity(4, 4)));
  const FeatureMap dep = make_feature_map(FeatureKind::Dependent, 5);
  const Matrix pi = projection(dep, Vector::Constant(5, 0.2));
  CHECK((pi * pi - pi).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("induced norms") {
  const Vector w = Vector::LinSpaced(4, 0.1, 0.4);
  CHECK(induced_norm(Matrix::Identity(4, 4), w) == doctest::Approx(1.0));
  const Vector f(Vector::LinSpaced(4, 0.2, 0.9));
  CHECK(induced_norm(Matrix(f.asDiagonal()), w) == doctest::Approx(0.9));
  Matrix m(2, 2);
  m << 1, 2, 0, 1;
  Vector w2(2);
  w2 << 1.0, 4.0;
  // W^1/2 M W^-1/2 = [[1, 1], [0, 1]], spectral norm golden ratio.
  CHECK(induced_norm(m, w2) == doctest::Approx((1 + std::sqrt(5.0)) / 2));
  CHECK(weighted_norm(Vector::Ones(2), w2) == doctest::Approx(std::sqrt(5.0)));
}

TEST_CASE("MSPBE") {
  const auto env = make_random_walk(5, InitialState::Middle);
  CHECK(mspbe(true_value(env.mrp), env.mrp, env.features) < 1e-10);
  // theta = 0: the Bellman residual is the reward vector, fully representable.
  const Vector d = stationary_distribution(env.mrp);
  const Vector r = env.mrp.expected_reward();
  CHECK(mspbe(Vector::Zero(5), env.mrp, env.features) ==
        doctest::Approx(std::sqrt(r.cwiseAbs2().dot(d))));
  Matrix p(2, 2);
  p << 0.5, 0.25, 0.25, 0.5;
  const MarkovRewardProcess silent(p, Vector::Zero(2), Vector::Zero(2), Vector::Unit(2, 0), 1.0);
  CHECK(mspbe(Vector::Zero(2), silent, make_feature_map(FeatureKind::Tabular, 2)) == 0.0);
}

TEST_CASE("discerning operator") {
  const auto env = make_random_walk(5, InitialState::Middle);
  const Vector v = Vector::LinSpaced(5, -1, 1);
  const Vector one_step = env.mrp.expected_reward() + env.mrp.transition() * v;
  CHECK((dtd_operator(v, env.mrp, Vector::Ones(5), 0.0) - one_step).cwiseAbs().maxCoeff() < 1e-12);
  const Vector f = Vector::LinSpaced(5, 0.2, 1.0);
  const Vector vpi = true_value(env.mrp);
  CHECK((dtd_operator(vpi, env.mrp, f, 0.7) - vpi).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("A and b") {
  const auto env = make_random_walk(5, InitialState::Left);
  const Vector d = stationary_distribution(env.mrp);
  const FeatureMap dep = make_feature_map(FeatureKind::Dependent, 5);
  SUBCASE("closed form matches the series") {
    const Vector f = Vector::LinSpaced(5, 0.3, 0.9);
    const auto sys = compute_A_b(env.mrp, dep, f, 0.6, d);
    const auto oracle = series_oracle(env.mrp, dep, f, 0.6, d);
    CHECK((sys.a - oracle.a).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((sys.b - oracle.b).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("unit emphasis, lambda zero is the TD(0) matrix") {
    const auto sys = compute_A_b(env.mrp, dep, Vector::Ones(5), 0.0, d);
    const Matrix& phi = dep.phi();
    const Matrix a = phi.transpose() * d.asDiagonal() * (env.mrp.transition() - Matrix::Identity(5, 5)) * phi;
    CHECK((sys.a - a).cwiseAbs().maxCoeff() < 1e-12);
    // Independent TD(0) solution.
    const Vector b = phi.transpose() * d.asDiagonal() * env.mrp.expected_reward();
    const Vector theta = (-a).colPivHouseholderQr().solve(b);
    CHECK((fixed_point(sys) - theta).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("tabular fixed points are the true values") {
    const Vector vpi = true_value(env.mrp);
    CHECK((fixed_point(compute_A_b(env.mrp, env.features, Vector::Ones(5), 1.0, d)) - vpi)
              .cwiseAbs().maxCoeff() < 1e-10);
    CHECK((fixed_point(compute_A_b(env.mrp, env.features, Vector::LinSpaced(5, 0.1, 1), 0.4, d)) - vpi)
              .cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("singular system") {
    CHECK_THROWS_AS(fixed_point({Matrix::Zero(2, 2), Vector::Ones(2)}), std::domain_error);
  }
}

TEST_CASE("contraction condition") {
  Rng rng = make_rng(21);
  const auto mrp = random_continuing_mrp(6, 0.9, rng);
  const Vector d = stationary_distribution(mrp);
  const Vector f = Vector::Constant(6, 0.05);
  const auto i = contraction_condition(mrp, f, 0.5, d);
  const auto ii = contraction_condition(mrp, f, 0.5, d, 0.0);
  CHECK(ii.applicable);
  CHECK(ii.margin == doctest::Approx(i.margin));
  CHECK(i.holds);
  const auto big = contraction_condition(mrp, Vector::Constant(6, 50.0), 0.5, d);
  CHECK_FALSE(big.holds);
  const auto undefined = contraction_condition(mrp, f, 1.0, d, 0.5);
  CHECK_FALSE(undefined.applicable);
}

TEST_CASE("scaling emphasis leaves the sign of A alone") {
  // A is quadratic in f, so any scale that satisfies condition (i) has the
  // same definiteness as the unscaled emphasis.
  Rng rng = make_rng(33);
  const auto mrp = random_continuing_mrp(7, 0.9, rng);
  const Vector d = stationary_distribution(mrp);
  Matrix phi = Matrix::Random(7, 3);
  const FeatureMap features(phi);
  const Vector f = Vector::LinSpaced(7, 0.1, 1.0);
  const auto a1 = compute_A_b(mrp, features, f, 0.5, d).a;
  const auto a2 = compute_A_b(mrp, features, 0.01 * f, 0.5, d).a;
  CHECK((a2 - 1e-4 * a1).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("prioritized replay equivalence") {
  const std::vector<PerSample> data = {{0, 1.0, 0.0}, {1, 1.0, 0.0}};
  Vector f(2);
  f << 1.0, 2.0;
  const auto res = per_equivalence(data, f);
  CHECK(res.lhs == doctest::Approx(2.5));
  CHECK(res.rhs == doctest::Approx(2.5));
  const auto flat = per_equivalence(data, Vector::Ones(2));
  CHECK(flat.c == doctest::Approx(1.0));
  CHECK(flat.q(0) == doctest::Approx(0.5));
  CHECK(flat.lhs == doctest::Approx(1.0));
}

TEST_CASE("verification report") {
  VerifyOptions bad;
  bad.filter = "contraction-condition";
  bad.emphasis_override = Vector::Constant(5, -1.0);
  const auto results = verify_all(bad);
  REQUIRE(results.size() == 1);
  CHECK_FALSE(results[0].pass);
  const Json report = report_json(results);
  CHECK(report["all_pass"] == false);
  CHECK(report["checks"][0]["check"] == "contraction-condition");
  CHECK_THROWS_AS(run_check("no-such-check"), std::out_of_range);
}
