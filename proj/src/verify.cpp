#include "dtd/verify.hpp"

#include <cmath>
#include <algorithm>
#include <functional>
#include <stdexcept>

#include "dtd/analysis.hpp"
#include "dtd/emphasis.hpp"
#include "dtd/harness.hpp"
#include "dtd/learners.hpp"

namespace dtd {

namespace {

using CheckFn = std::function<CheckResult(Rng&)>;

struct NamedCheck {
  std::string name;
  CheckFn run;
};

CheckResult tolerance_result(std::string name, double error, double tol, Json inputs = {}) {
  CheckResult r;
  r.name = std::move(name);
  r.inputs = std::move(inputs);
  r.inputs["tolerance"] = tol;
  r.inputs["max_error"] = error;
  r.margin = tol - error;
  r.pass = std::isfinite(error) && error <= tol;
  return r;
}

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vector random_vector(Rng& rng, Eigen::Index n, double lo, double hi) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(rng, lo, hi);
  return v;
}

Vector normal_vector(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

std::vector<TaskSpec> all_tasks() {
  return {{TaskKind::RW5Left},        {TaskKind::RW5Middle},     {TaskKind::RW5Right},
          {TaskKind::Noisy10, -1.0},  {TaskKind::Noisy10, 0.0},  {TaskKind::Noisy10, 1.0},
          {TaskKind::RW5Inverted},    {TaskKind::RW5Dependent},  {TaskKind::Boyan13}};
}

/// theta after every step of a `steps`-long episodic stream.
std::vector<Vector> theta_path(const Environment& env, const AlgoConfig& config,
                               std::uint64_t seed, long steps) {
  Rng rng = make_rng(seed);
  LearnerState learner = LearnerState::zeros(env.features.n_features());
  EmphasisState emphasis =
      make_emphasis_state(config.emphasis, env.mrp, env.features, learner.theta);
  std::vector<Vector> path;
  path.reserve(static_cast<std::size_t>(steps));
  const StepObserver observer = [&](const LearnerState& s) { path.push_back(s.theta); };
  long used = 0;
  while (used < steps) {
    used += run_episode(env.mrp, env.features, config, emphasis, learner, rng,
                        steps - used, observer);
  }
  return path;
}

Vector rw5_fixed_emphasis(const VerifyOptions& options, const Environment& env) {
  if (options.emphasis_override) return *options.emphasis_override;
  return stationary_count_emphasis(env.mrp);
}

// ---------------------------------------------------------------- checks

CheckResult check_identity(Rng& rng) {
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const auto len = std::uniform_int_distribution<int>(1, 50)(rng);
    std::vector<double> f(static_cast<std::size_t>(len));
    for (auto& x : f) x = uniform(rng, 1e-3, 1.0);
    for (double lambda : {0.0, 0.25, 0.5, 0.9}) {
      worst = std::max(worst, std::abs(identity_check(f, lambda) - f[0]));
    }
  }
  return tolerance_result("identity", worst, 1e-12, {{"sequences", 1000}});
}

CheckResult check_discerning_equivalence(Rng& rng) {
  const Environment env = make_random_walk(5, InitialState::Middle);
  double worst = 0.0;
  const double lambdas[] = {0.0, 0.3, 0.7, 1.0 - 1e-6};
  for (int k = 0; k < 1000; ++k) {
    const Trajectory traj = sample_episode(env.mrp, rng, 30);
    const Vector theta = normal_vector(rng, env.features.n_features());
    ReturnParams params;
    params.gamma = 1.0;
    params.lambda = lambdas[k % 4];
    for (std::size_t i = 0; i < traj.length(); ++i) params.f_values.push_back(uniform(rng, 1e-3, 1.0));
    for (std::size_t t = 0; t < traj.length(); ++t) {
      const double a = discerning_return_interp(traj, t, params, theta, env.features);
      const double b = discerning_return_tdsum(traj, t, params, theta, env.features);
      worst = std::max(worst, std::abs(a - b));
    }
  }
  return tolerance_result("discerning-return-equivalence", worst, 1e-10,
                          {{"trajectories", 1000}});
}

CheckResult check_reduction(Rng&) {
  double worst = 0.0;
  for (const auto& task : all_tasks()) {
    const Environment env = make_task(task);
    AlgoConfig td{Algorithm::TD, 0.9, {1.0 / 16.0, 0.0}, EmphasisSpec::unit()};
    AlgoConfig dtd = td;
    dtd.algorithm = Algorithm::DTD;
    const auto a = theta_path(env, td, 7, 5000);
    const auto b = theta_path(env, dtd, 7, 5000);
    for (std::size_t i = 0; i < a.size(); ++i) {
      worst = std::max(worst, (a[i] - b[i]).cwiseAbs().maxCoeff());
    }
  }
  return tolerance_result("dtd-td-reduction", worst, 1e-15, {{"steps", 5000}});
}

CheckResult check_emphasis_scaling(Rng&) {
  const Environment env = make_random_walk(5, InitialState::Left);
  const double c = 0.5;
  const double alpha = 0.25;
  const AlgoConfig dtd{Algorithm::DTD, 0.0, {alpha, 0.0}, EmphasisSpec::constant_value(c)};
  const AlgoConfig td{Algorithm::TD, 0.0, {alpha * c * c, 0.0}, EmphasisSpec::unit()};
  const auto a = theta_path(env, dtd, 11, 5000);
  const auto b = theta_path(env, td, 11, 5000);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, (a[i] - b[i]).cwiseAbs().maxCoeff());
  }
  return tolerance_result("emphasis-squared-scaling", worst, 1e-15, {{"c", c}});
}

CheckResult check_offline_equivalence(Rng& rng) {
  const Environment env = make_random_walk(5, InitialState::Middle);
  const auto& phi = env.features;
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const Trajectory traj = sample_episode(env.mrp, rng, 10'000);
    const Vector theta0 = normal_vector(rng, phi.n_features());
    const Vector f_state = random_vector(rng, env.mrp.n_states(), 0.05, 1.0);
    const double lambda = uniform(rng, 0.0, 1.0);
    const double alpha = 0.1;
    const AlgoConfig config{Algorithm::DTD, lambda, {alpha, 0.0}, EmphasisSpec::unit()};

    LearnerState learner = LearnerState::zeros(phi.n_features());
    Vector backward = Vector::Zero(phi.n_features());
    ReturnParams params{lambda, 1.0, {}};
    for (std::size_t t = 0; t < traj.length(); ++t) {
      const State s = traj.states[t];
      params.f_values.push_back(f_state(s));
      learner.theta = theta0;
      dtd_step(phi, 1.0, {s, traj.rewards[t], traj.states[t + 1]}, f_state(s), learner, config);
      backward += learner.theta - theta0;
    }
    Vector forward = Vector::Zero(phi.n_features());
    for (std::size_t t = 0; t < traj.length(); ++t) {
      const State s = traj.states[t];
      const double f = params.f_values[t];
      const double g = discerning_return_interp(traj, t, params, theta0, phi);
      forward += alpha * f * f * (g - phi.value(s, theta0)) * phi.features(s);
    }
    worst = std::max(worst, (forward - backward).cwiseAbs().maxCoeff());
  }
  return tolerance_result("offline-forward-backward", worst, 1e-10, {{"episodes", 200}});
}

CheckResult check_expected_update_monte_carlo(Rng&, const VerifyOptions& options) {
  const Environment env = make_random_walk(5, InitialState::Middle);
  const Vector f = rw5_fixed_emphasis(options, env);
  const double lambda = 0.5;
  const auto exact = compute_A_b(env.mrp, env.features, f, lambda);

  Rng sim = make_rng(options.seed, 101);
  const int k = env.features.n_features();
  Matrix a_sum = Matrix::Zero(k, k);
  Vector b_sum = Vector::Zero(k);
  Vector trace = Vector::Zero(k);
  constexpr long kSteps = 1'000'000;
  State s = sample_initial_state(env.mrp, sim);
  const double gamma = env.mrp.discount();
  for (long t = 0; t < kSteps; ++t) {
    const Transition tr = sample_transition(env.mrp, s, sim);
    const Vector phi_s = env.features.features(s);
    trace = gamma * lambda * trace + f(s) * phi_s;
    const Vector diff = gamma * env.features.features(tr.next) - phi_s;
    a_sum += f(s) * trace * diff.transpose();
    b_sum += f(s) * tr.reward * trace;
    if (tr.next == kTerminal) {
      trace.setZero();
      s = sample_initial_state(env.mrp, sim);
    } else {
      s = tr.next;
    }
  }
  const Matrix a_mc = a_sum / static_cast<double>(kSteps);
  const Vector b_mc = b_sum / static_cast<double>(kSteps);
  const double err_a = (a_mc - exact.a).norm() / exact.a.norm();
  const double err_b = (b_mc - exact.b).norm() / exact.b.norm();
  auto r = tolerance_result("expected-update-monte-carlo", std::max(err_a, err_b), 0.01,
                            {{"steps", kSteps}, {"lambda", lambda}});
  r.inputs["relative_error_A"] = err_a;
  r.inputs["relative_error_b"] = err_b;
  return r;
}

CheckResult check_fixed_point_convergence(Rng&, const VerifyOptions& options) {
  const Environment env = make_random_walk(5, InitialState::Middle);
  const double lambda = 0.5;
  const Vector d = stationary_distribution(env.mrp);
  const Vector f = options.emphasis_override
                       ? *options.emphasis_override
                       : scale_into_contraction_class(env.mrp, rw5_fixed_emphasis(options, env),
                                                      lambda, d);
  const auto cond = contraction_condition(env.mrp, f, lambda, d);
  const auto sys = compute_A_b(env.mrp, env.features, f, lambda, d);
  const Vector theta_star = fixed_point(sys);
  const double residual = (sys.a * theta_star + sys.b).cwiseAbs().maxCoeff();

  AlgoConfig config{Algorithm::DTD, lambda, {0.5, 1000.0},
                    EmphasisSpec::from_table({f.data(), f.data() + f.size()})};
  Rng rng = make_rng(options.seed, 202);
  LearnerState learner = LearnerState::zeros(env.features.n_features());
  EmphasisState emphasis = make_emphasis_state(config.emphasis, env.mrp, env.features, learner.theta);
  constexpr long kSteps = 500'000;
  long used = 0;
  while (used < kSteps) {
    used += run_episode(env.mrp, env.features, config, emphasis, learner, rng, kSteps - used);
  }
  const double err = (learner.theta - theta_star).cwiseAbs().maxCoeff();
  auto r = tolerance_result("fixed-point-convergence", err, 0.05,
                            {{"steps", kSteps}, {"lambda", lambda}});
  r.inputs["residual"] = residual;
  r.inputs["condition_i_margin"] = cond.margin;
  r.pass = r.pass && residual < 1e-10 && cond.holds;
  if (!cond.holds) r.detail = "emphasis does not satisfy condition (i)";
  return r;
}

CheckResult check_negative_definite(Rng& rng) {
  double worst_eig = -std::numeric_limits<double>::infinity();
  double worst_lip = 0.0;
  int violations = 0;
  for (int k = 0; k < 100; ++k) {
    const auto inst = random_contraction_instance(rng);
    const auto sys = compute_A_b(inst.mrp, inst.features, inst.f, inst.lambda, inst.d);
    const double eig = symmetric_max_eigenvalue(sys.a);
    const Vector weights = EmphasizedGeometry::make(inst.f, inst.d).lambda;
    const double lip = sampled_lipschitz(
        [&](const Vector& v) { return dtd_operator(v, inst.mrp, inst.f, inst.lambda); },
        weights, 100, rng);
    worst_eig = std::max(worst_eig, eig);
    worst_lip = std::max(worst_lip, lip);
    if (eig >= 0.0 || lip >= 1.0) ++violations;
  }
  CheckResult r;
  r.name = "negative-definite";
  r.inputs = {{"instances", 100},
              {"max_symmetric_eigenvalue", worst_eig},
              {"max_sampled_lipschitz", worst_lip},
              {"violations", violations}};
  r.margin = std::min(-worst_eig, 1.0 - worst_lip);
  r.pass = violations == 0;
  return r;
}

CheckResult check_projection(Rng& rng) {
  // Orthogonality of the residual to Lambda Phi and non-expansiveness.
  double worst_orth = 0.0;
  double worst_ratio = 0.0;
  for (auto kind : {FeatureKind::Inverted, FeatureKind::Dependent}) {
    const FeatureMap features = make_feature_map(kind, 5);
    for (int k = 0; k < 50; ++k) {
      const Vector f = random_vector(rng, 5, 0.05, 1.0);
      const Vector d = random_vector(rng, 5, 0.05, 1.0).normalized().cwiseAbs2();
      const Vector weights = EmphasizedGeometry::make(f, d / d.sum()).lambda;
      const Matrix pi = projection(features, weights);
      const Vector v = normal_vector(rng, 5);
      const Vector resid = v - pi * v;
      worst_orth = std::max(
          worst_orth,
          (features.phi().transpose() * weights.asDiagonal() * resid).cwiseAbs().maxCoeff());
      worst_ratio = std::max(worst_ratio, weighted_norm(pi * v, weights) / weighted_norm(v, weights));
    }
  }
  auto r = tolerance_result("projection-orthogonality", worst_orth, 1e-10);
  r.inputs["max_norm_ratio"] = worst_ratio;
  r.pass = r.pass && worst_ratio <= 1.0 + 1e-12;
  return r;
}

CheckResult check_projected_operator(Rng& rng) {
  double worst = 0.0;
  int skipped = 0;
  for (int k = 0; k < 50; ++k) {
    const auto inst = random_contraction_instance(rng);
    const Vector weights = EmphasizedGeometry::make(inst.f, inst.d).lambda;
    const Matrix pi = projection(inst.features, weights);
    const double lip = sampled_lipschitz(
        [&](const Vector& v) { return Vector(pi * dtd_operator(v, inst.mrp, inst.f, inst.lambda)); },
        weights, 100, rng);
    worst = std::max(worst, lip);
    (void)skipped;
  }
  CheckResult r;
  r.name = "projected-operator-contraction";
  r.inputs = {{"instances", 50}, {"max_sampled_lipschitz", worst}};
  r.margin = 1.0 - worst;
  r.pass = worst < 1.0;
  return r;
}

CheckResult check_operator_identity(Rng& rng) {
  // A theta + b = Phi^T Lambda (T(Phi theta) - Phi theta). The Hadamard form
  // of the operator matches the expected update exactly when lambda = 0, or
  // when f is constant on a continuing chain.
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int n = std::uniform_int_distribution<int>(5, 10)(rng);
    const auto mrp = random_continuing_mrp(n, uniform(rng, 0.5, 0.95), rng);
    const FeatureMap features(normal_vector(rng, n * 3).reshaped(n, 3));
    const Vector d = stationary_distribution(mrp);
    const bool constant = k % 2 == 1;
    const Vector f = constant ? Vector::Constant(n, uniform(rng, 0.1, 1.0))
                              : random_vector(rng, n, 0.1, 1.0);
    const double lambda = constant ? uniform(rng, 0.0, 0.95) : 0.0;
    const auto sys = compute_A_b(mrp, features, f, lambda, d);
    const Vector theta = normal_vector(rng, 3);
    const Vector v = features.phi() * theta;
    const Vector weights = f.cwiseProduct(d).cwiseProduct(f);
    const Vector rhs = features.phi().transpose() *
                       weights.cwiseProduct(dtd_operator(v, mrp, f, lambda) - v);
    worst = std::max(worst, (sys.a * theta + sys.b - rhs).cwiseAbs().maxCoeff());
  }
  return tolerance_result("operator-identity", worst, 1e-8,
                          {{"instances", 100}, {"scope", "lambda=0 or constant f"}});
}

CheckResult check_per(Rng& rng) {
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const int n_states = 10;
    const Vector f = random_vector(rng, n_states, 0.01, 1.0);
    const int n = std::uniform_int_distribution<int>(1, 100)(rng);
    std::vector<PerSample> data;
    for (int i = 0; i < n; ++i) {
      data.push_back({std::uniform_int_distribution<int>(0, n_states - 1)(rng),
                      uniform(rng, -5, 5), uniform(rng, -5, 5)});
    }
    const auto res = per_equivalence(data, f);
    worst = std::max(worst, std::abs(res.lhs - res.rhs));
  }
  return tolerance_result("per-equivalence", worst, 1e-12, {{"datasets", 1000}});
}

CheckResult check_dae(Rng& rng) {
  const Environment env = make_random_walk(5, InitialState::Middle);
  double worst = 0.0;
  double worst_unit = 0.0;
  for (int k = 0; k < 500; ++k) {
    const Trajectory traj = sample_episode(env.mrp, rng, 40);
    const Vector theta = normal_vector(rng, 5);
    ReturnParams params{uniform(rng, 0, 1), uniform(rng, 0.5, 1.0), {}};
    for (std::size_t i = 0; i < traj.length(); ++i) params.f_values.push_back(uniform(rng, 0.01, 1));
    const auto fast = dae(traj, params, theta, env.features);
    const auto deltas = td_errors(traj, theta, env.features, params.gamma);
    for (std::size_t t = 0; t < deltas.size(); ++t) {
      double sum = 0.0;
      for (std::size_t j = t; j < deltas.size(); ++j) {
        sum += std::pow(params.gamma * params.lambda, static_cast<double>(j - t)) *
               deltas[j] * params.f_values[j];
      }
      worst = std::max(worst, std::abs(sum / params.f_values[t] - fast[t]));
    }
    // Unit emphasis: the lambda-return advantage.
    ReturnParams unit = params;
    std::fill(unit.f_values.begin(), unit.f_values.end(), 1.0);
    const auto plain = dae(traj, unit, theta, env.features);
    for (std::size_t t = 0; t < plain.size(); ++t) {
      const double gae = lambda_return(traj, t, theta, env.features, params.gamma, params.lambda) -
                         env.features.value(traj.states[t], theta);
      worst_unit = std::max(worst_unit, std::abs(plain[t] - gae));
    }
  }
  auto r = tolerance_result("dae-backward", std::max(worst, worst_unit), 1e-12,
                            {{"trajectories", 500}});
  r.inputs["max_error_unit_emphasis"] = worst_unit;
  return r;
}

CheckResult check_mspbe_sanity(Rng&) {
  double worst = 0.0;
  for (const auto& task : all_tasks()) {
    const Environment env = make_task(task);
    const FeatureMap tab = make_feature_map(FeatureKind::Tabular, env.mrp.n_states());
    const Vector v = true_value(env.mrp);
    worst = std::max(worst, mspbe(v, env.mrp, tab));
  }
  return tolerance_result("mspbe-sanity", worst, 1e-10);
}

CheckResult check_boyan(Rng&) {
  const Environment env = make_boyan_chain();
  const Vector v = true_value(env.mrp);
  const Matrix& phi = env.features.phi();
  const Vector theta = phi.colPivHouseholderQr().solve(v);
  return tolerance_result("boyan-representable", (phi * theta - v).cwiseAbs().maxCoeff(), 1e-8);
}

CheckResult check_stationary(Rng&, const VerifyOptions& options) {
  double worst_balance = 0.0;
  double worst_freq = 0.0;
  double worst_rel = 0.0;
  for (const auto& task : all_tasks()) {
    const Environment env = make_task(task);
    const Vector d = stationary_distribution(env.mrp);
    const Matrix p = env.mrp.restart_transition();
    worst_balance = std::max(worst_balance, (p.transpose() * d - d).cwiseAbs().maxCoeff());
  }
  for (auto init : {InitialState::Left, InitialState::Middle, InitialState::Right}) {
    const auto env = make_random_walk(5, init);
    const Vector d = stationary_distribution(env.mrp);
    Rng sim = make_rng(options.seed, 303);
    Vector visits = Vector::Zero(5);
    constexpr long kSteps = 1'000'000;
    State s = sample_initial_state(env.mrp, sim);
    for (long t = 0; t < kSteps; ++t) {
      visits(s) += 1.0;
      const auto tr = sample_transition(env.mrp, s, sim);
      s = tr.next == kTerminal ? sample_initial_state(env.mrp, sim) : tr.next;
    }
    worst_freq = std::max(worst_freq, (visits / kSteps - d).cwiseAbs().maxCoeff());
    worst_rel = std::max(worst_rel, ((visits / kSteps - d).cwiseAbs().array() / d.array()).maxCoeff());
  }
  auto r = tolerance_result("stationary-distribution", worst_balance, 1e-12);
  r.inputs["max_frequency_gap"] = worst_freq;
  r.inputs["max_relative_frequency_gap"] = worst_rel;
  r.pass = r.pass && worst_rel <= 0.01;
  return r;
}

CheckResult check_bellman(Rng&) {
  double worst = 0.0;
  for (const auto& task : all_tasks()) {
    const Environment env = make_task(task);
    const Vector v = true_value(env.mrp);
    const Vector resid = env.mrp.expected_reward() +
                         env.mrp.discount() * env.mrp.transition() * v - v;
    worst = std::max(worst, resid.cwiseAbs().maxCoeff());
  }
  return tolerance_result("bellman-residual", worst, 1e-10);
}

CheckResult check_feature_ranks(Rng&) {
  auto rank = [](const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    return static_cast<int>((svd.singularValues().array() > 1e-10).count());
  };
  const int tab = rank(make_feature_map(FeatureKind::Tabular, 5).phi());
  const int inv = rank(make_feature_map(FeatureKind::Inverted, 5).phi());
  const int dep = rank(make_feature_map(FeatureKind::Dependent, 5).phi());
  CheckResult r;
  r.name = "feature-ranks";
  r.inputs = {{"tabular", tab}, {"inverted", inv}, {"dependent", dep}};
  r.pass = tab == 5 && inv == 5 && dep == 3;
  r.margin = r.pass ? 0.0 : -1.0;
  return r;
}

CheckResult check_emphasis_bounds(Rng& rng) {
  const Environment env = make_random_walk(5, InitialState::Middle);
  double worst = 0.0;  // distance outside [eps, 1]
  for (int k = 0; k < 200; ++k) {
    std::vector<long long> counts(5);
    for (auto& c : counts) c = std::uniform_int_distribution<long long>(0, 1000)(rng);
    const Vector a = emphasis_from_counts(counts);
    const Vector b = emphasis_from_noise(random_vector(rng, 5, 0.0, 3.0));
    const Vector c = emphasis_abs_expected_td(env.mrp, env.features, normal_vector(rng, 5));
    for (const Vector* v : {&a, &b, &c}) {
      worst = std::max(worst, (v->array() - 1.0).maxCoeff());
      worst = std::max(worst, (kDefaultEpsilonFloor - v->array()).maxCoeff());
    }
  }
  return tolerance_result("emphasis-bounds", std::max(worst, 0.0), 0.0);
}

CheckResult check_norm_of_one(Rng&, const VerifyOptions& options) {
  const Environment env = make_random_walk(5, InitialState::Middle);
  const Vector f = rw5_fixed_emphasis(options, env);
  const Vector d = stationary_distribution(env.mrp);
  const Vector weights = EmphasizedGeometry::make(f, d).lambda;
  const double induced = weighted_norm(Vector::Ones(5), weights);
  const double expected_sq = d.dot(f.cwiseAbs2());
  auto r = tolerance_result("norm-of-one", std::abs(induced - std::sqrt(expected_sq)), 1e-15);
  r.inputs["norm_of_one"] = induced;
  r.inputs["expected_squared_emphasis"] = expected_sq;
  r.detail = "||1||_Lambda is the square root of E_d[f^2], not E_d[f^2] itself";
  return r;
}

CheckResult check_tabular_fixed_point(Rng& rng) {
  double worst = 0.0;
  for (auto init : {InitialState::Left, InitialState::Middle, InitialState::Right}) {
    const Environment env = make_random_walk(5, init);
    const Vector d = stationary_distribution(env.mrp);
    const Vector v = true_value(env.mrp);
    for (int k = 0; k < 10; ++k) {
      const Vector f = random_vector(rng, 5, 0.05, 1.0);
      const double lambda = uniform(rng, 0.0, 1.0);
      const Vector theta = fixed_point(compute_A_b(env.mrp, env.features, f, lambda, d));
      worst = std::max(worst, (env.features.phi() * theta - v).cwiseAbs().maxCoeff());
      worst = std::max(worst, (dtd_operator(v, env.mrp, f, lambda) - v).cwiseAbs().maxCoeff());
    }
  }
  return tolerance_result("tabular-fixed-point", worst, 1e-8);
}

CheckResult check_contraction_report(Rng&, const VerifyOptions& options) {
  const Environment env = make_random_walk(5, InitialState::Middle);
  const Vector f = rw5_fixed_emphasis(options, env);
  const Vector d = stationary_distribution(env.mrp);
  const double lambda = 0.5;
  const Vector scaled = options.emphasis_override ? f
                                                  : scale_into_contraction_class(env.mrp, f, lambda, d);
  const auto cond = contraction_condition(env.mrp, scaled, lambda, d);
  const auto cond_ii = contraction_condition(env.mrp, scaled, lambda, d, 0.0);
  CheckResult r;
  r.name = "contraction-condition";
  r.inputs = {{"lambda", lambda},
              {"norm_f", cond.norm_f},
              {"sigma_min_f", cond.sigma_min_f},
              {"norm_one", cond.norm_one},
              {"norm_I_minus_lambda_P", cond.norm_resolvent},
              {"bound", cond.bound},
              {"condition_ii_applicable", cond_ii.applicable}};
  r.margin = cond.margin;
  r.pass = cond.holds;
  return r;
}

std::vector<NamedCheck> make_checks(const VerifyOptions& options) {
  return {
      {"identity", check_identity},
      {"discerning-return-equivalence", check_discerning_equivalence},
      {"dtd-td-reduction", check_reduction},
      {"emphasis-squared-scaling", check_emphasis_scaling},
      {"offline-forward-backward", check_offline_equivalence},
      {"expected-update-monte-carlo", [&](Rng& r) { return check_expected_update_monte_carlo(r, options); }},
      {"fixed-point-convergence",
       [&](Rng& r) { return check_fixed_point_convergence(r, options); }},
      {"negative-definite", check_negative_definite},
      {"projection-orthogonality", check_projection},
      {"projected-operator-contraction", check_projected_operator},
      {"operator-identity", check_operator_identity},
      {"per-equivalence", check_per},
      {"dae-backward", check_dae},
      {"mspbe-sanity", check_mspbe_sanity},
      {"boyan-representable", check_boyan},
      {"stationary-distribution", [&](Rng& r) { return check_stationary(r, options); }},
      {"bellman-residual", check_bellman},
      {"feature-ranks", check_feature_ranks},
      {"emphasis-bounds", check_emphasis_bounds},
      {"norm-of-one", [&](Rng& r) { return check_norm_of_one(r, options); }},
      {"tabular-fixed-point", check_tabular_fixed_point},
      {"contraction-condition", [&](Rng& r) { return check_contraction_report(r, options); }},
  };
}

}  // namespace

MarkovRewardProcess random_continuing_mrp(int n_states, double discount, Rng& rng) {
  std::gamma_distribution<double> gamma_dist(1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix p(n_states, n_states);
  for (int i = 0; i < n_states; ++i) {
    for (int j = 0; j < n_states; ++j) p(i, j) = gamma_dist(rng) + 1e-12;
    p.row(i) /= p.row(i).sum();
    // Rows must not exceed one after rounding.
    p(i, n_states - 1) = 1.0 - p.row(i).head(n_states - 1).sum();
  }
  Vector r(n_states);
  for (int i = 0; i < n_states; ++i) r(i) = normal(rng);
  return MarkovRewardProcess(std::move(p), std::move(r), Vector::Zero(n_states),
                             Vector::Constant(n_states, 1.0 / n_states), discount);
}

Vector scale_into_contraction_class(const MarkovRewardProcess& mrp, const Vector& f,
                                    double lambda, const Vector& d) {
  Vector scaled = f;
  for (int k = 0; k < 2000; ++k) {
    if (contraction_condition(mrp, scaled, lambda, d).holds) return scaled;
    scaled *= 0.9;
  }
  throw std::domain_error("emphasis cannot be scaled into the contraction class");
}

ContractionInstance random_contraction_instance(Rng& rng) {
  const int n = std::uniform_int_distribution<int>(5, 10)(rng);
  const double gamma = uniform(rng, 0.5, 0.95);
  const double lambdas[] = {0.0, 0.3, 0.7, 0.9};
  const double lambda = lambdas[std::uniform_int_distribution<int>(0, 3)(rng)];
  auto mrp = random_continuing_mrp(n, gamma, rng);
  Matrix phi(n, 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) phi(i, j) = normal(rng);
  const Vector d = stationary_distribution(mrp);
  const Vector f = scale_into_contraction_class(mrp, random_vector(rng, n, 0.5, 1.0), lambda, d);
  return ContractionInstance{std::move(mrp), FeatureMap(std::move(phi)), f, lambda, d};
}

Trajectory sample_episode(const MarkovRewardProcess& mrp, Rng& rng, std::size_t max_len) {
  Trajectory traj;
  State s = sample_initial_state(mrp, rng);
  traj.states.push_back(s);
  while (traj.rewards.size() < max_len) {
    const Transition tr = sample_transition(mrp, s, rng);
    traj.rewards.push_back(tr.reward);
    traj.states.push_back(tr.next);
    if (tr.next == kTerminal) break;
    s = tr.next;
  }
  return traj;
}

Vector stationary_count_emphasis(const MarkovRewardProcess& mrp, double epsilon_floor) {
  return emphasis_from_frequencies(stationary_distribution(mrp), epsilon_floor);
}

std::vector<std::string> verify_check_names() {
  std::vector<std::string> names;
  for (const auto& c : make_checks({})) names.push_back(c.name);
  return names;
}

namespace {

// Each check draws from its own stream, keyed by its position in the list.
CheckResult run_guarded(const NamedCheck& check, std::uint64_t index,
                        const VerifyOptions& options) {
  Rng rng = make_rng(options.seed, index);
  try {
    return check.run(rng);
  } catch (const std::exception& e) {
    CheckResult r;
    r.name = check.name;
    r.pass = false;
    r.margin = -std::numeric_limits<double>::infinity();
    r.detail = std::string("precondition failed: ") + e.what();
    return r;
  }
}

}  // namespace

std::vector<CheckResult> verify_all(const VerifyOptions& options) {
  std::vector<CheckResult> results;
  std::uint64_t index = 0;
  for (const auto& check : make_checks(options)) {
    ++index;
    if (!options.filter.empty() && check.name.find(options.filter) == std::string::npos) {
      continue;
    }
    results.push_back(run_guarded(check, index, options));
  }
  return results;
}

CheckResult run_check(std::string_view name, const VerifyOptions& options) {
  std::uint64_t index = 0;
  for (const auto& check : make_checks(options)) {
    ++index;
    if (check.name == name) return run_guarded(check, index, options);
  }
  throw std::out_of_range("unknown check: " + std::string(name));
}

Json report_json(const std::vector<CheckResult>& results) {
  auto arr = Json::array();
  bool all = true;
  for (const auto& r : results) {
    Json row;
    row["check"] = r.name;
    row["inputs"] = r.inputs.is_null() ? Json::object() : r.inputs;
    row["margin"] = std::isfinite(r.margin) ? Json(r.margin) : Json(nullptr);
    row["pass"] = r.pass;
    if (!r.detail.empty()) row["detail"] = r.detail;
    arr.push_back(std::move(row));
    all = all && r.pass;
  }
  Json report;
  report["checks"] = std::move(arr);
  report["all_pass"] = all;
  return report;
}

}  // namespace dtd
