#include "dtd/analysis.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dtd {

namespace {

void require_positive(const Vector& v, const char* what) {
  if (!v.allFinite() || (v.array() <= 0.0).any()) {
    throw std::invalid_argument(std::string(what) + " must be positive");
  }
}

bool is_diagonal(const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (i != j && m(i, j) != 0.0) return false;
    }
  }
  return true;
}

}  // namespace

EmphasizedGeometry EmphasizedGeometry::make(const Vector& f, const Vector& d) {
  if (f.size() != d.size()) throw std::invalid_argument("f and d differ in length");
  require_positive(f, "emphasis");
  require_positive(d, "stationary distribution");
  return EmphasizedGeometry{f, d, f.cwiseProduct(d).cwiseProduct(f)};
}

Matrix projection(const FeatureMap& features, const Vector& weights) {
  require_positive(weights, "projection weights");
  const Matrix& phi = features.phi();
  if (weights.size() != phi.rows()) {
    throw std::invalid_argument("weights do not match the feature map");
  }
  const Matrix weighted_t = phi.transpose() * weights.asDiagonal();
  const Matrix gram = weighted_t * phi;
  Eigen::FullPivLU<Matrix> lu(gram);
  if (!lu.isInvertible()) throw std::domain_error("singular Gram matrix");
  return phi * lu.solve(weighted_t);
}

double weighted_norm(const Vector& x, const Vector& weights) {
  return std::sqrt(x.cwiseProduct(weights).dot(x));
}

double induced_norm(const Matrix& m, const Vector& weights) {
  require_positive(weights, "norm weights");
  if (m.rows() != m.cols() || m.rows() != weights.size()) {
    throw std::invalid_argument("induced_norm: dimension mismatch");
  }
  if (is_diagonal(m)) return m.diagonal().cwiseAbs().maxCoeff();
  const Vector root = weights.cwiseSqrt();
  const Matrix similar =
      root.asDiagonal() * m * root.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Matrix> svd(similar);
  return svd.singularValues()(0);
}

double symmetric_max_eigenvalue(const Matrix& a) {
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

MspbeEvaluator::MspbeEvaluator(const MarkovRewardProcess& mrp,
                               const FeatureMap& features)
    : phi_(features.phi()),
      bellman_p_(mrp.discount() * mrp.transition()),
      reward_(mrp.expected_reward()),
      d_(stationary_distribution(mrp)) {
  if (features.n_states() != mrp.n_states()) {
    throw std::invalid_argument("feature map does not match the MRP");
  }
  projection_ = projection(features, d_);
}

double MspbeEvaluator::operator()(const Vector& theta) const {
  const Vector v = phi_ * theta;
  const Vector backup = reward_ + bellman_p_ * v;
  return weighted_norm(v - projection_ * backup, d_);
}

double mspbe(const Vector& theta, const MarkovRewardProcess& mrp,
             const FeatureMap& features) {
  return MspbeEvaluator(mrp, features)(theta);
}

Vector dtd_operator(const Vector& v, const MarkovRewardProcess& mrp,
                    const Vector& f, double lambda, long series_cap) {
  const int n = mrp.n_states();
  if (v.size() != n || f.size() != n) {
    throw std::invalid_argument("dtd_operator: dimension mismatch");
  }
  require_positive(f, "emphasis");
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("lambda must lie in [0, 1]");
  }
  const Matrix& p = mrp.transition();
  const double gamma = mrp.discount();
  constexpr double kTol = 1e-14;

  Vector mix = f - lambda * (p * f);  // P^n (I - lambda P) f
  Vector reward_term = mrp.expected_reward();  // (gamma P)^n r
  Vector reward_sum = Vector::Zero(n);
  Vector bootstrap = v;  // (gamma P)^{n+1} V after the first update
  Vector out = Vector::Zero(n);
  double lambda_power = 1.0;
  for (long k = 0; k < series_cap; ++k) {
    reward_sum += reward_term;
    bootstrap = gamma * (p * bootstrap);
    out += (lambda_power * mix).cwiseProduct(reward_sum + bootstrap);

    lambda_power *= lambda;
    mix = p * mix;
    reward_term = gamma * (p * reward_term);
    if (lambda_power * mix.cwiseAbs().maxCoeff() < kTol) {
      return out.cwiseQuotient(f);
    }
  }
  throw std::runtime_error("dtd_operator: series cap reached before tolerance");
}

LinearSystem compute_A_b(const MarkovRewardProcess& mrp,
                         const FeatureMap& features, const Vector& f,
                         double lambda, const Vector& d) {
  const int n = mrp.n_states();
  if (f.size() != n || d.size() != n || features.n_states() != n) {
    throw std::invalid_argument("compute_A_b: dimension mismatch");
  }
  require_positive(f, "emphasis");
  const double gamma = mrp.discount();
  const Matrix& p = mrp.transition();
  const Matrix resolvent_system = Matrix::Identity(n, n) - gamma * lambda * p;
  Eigen::FullPivLU<Matrix> lu(resolvent_system);
  if (!lu.isInvertible()) throw std::domain_error("I - gamma lambda P is singular");

  const Matrix& phi = features.phi();
  const Matrix left = phi.transpose() * f.cwiseProduct(d).asDiagonal();
  const Matrix td_matrix = f.asDiagonal() * (gamma * p - Matrix::Identity(n, n)) * phi;
  LinearSystem sys;
  sys.a = left * lu.solve(td_matrix);
  sys.b = left * lu.solve(f.cwiseProduct(mrp.expected_reward()));
  return sys;
}

LinearSystem compute_A_b(const MarkovRewardProcess& mrp,
                         const FeatureMap& features, const Vector& f,
                         double lambda) {
  return compute_A_b(mrp, features, f, lambda, stationary_distribution(mrp));
}

Vector fixed_point(const LinearSystem& system) {
  const Matrix& a = system.a;
  if (a.rows() != a.cols() || a.rows() != system.b.size()) {
    throw std::invalid_argument("fixed_point: dimension mismatch");
  }
  Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible()) {
    throw std::domain_error("A is singular; emphasis outside the contraction class "
                            "or degenerate features");
  }
  Vector theta = lu.solve(-system.b);
  // One round of iterative refinement.
  const Vector residual = a * theta + system.b;
  theta -= lu.solve(residual);
  return theta;
}

ContractionReport contraction_condition(const MarkovRewardProcess& mrp,
                                        const Vector& f, double lambda,
                                        const Vector& d,
                                        std::optional<double> kappa) {
  const int n = mrp.n_states();
  const auto geometry = EmphasizedGeometry::make(f, d);
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("lambda must lie in [0, 1]");
  }
  const double gamma = mrp.discount();

  ContractionReport report;
  report.kappa = kappa;
  report.norm_f = induced_norm(Matrix(f.asDiagonal()), geometry.lambda);
  report.sigma_min_f = f.cwiseAbs().minCoeff();
  report.norm_one = weighted_norm(Vector::Ones(n), geometry.lambda);
  report.norm_resolvent = induced_norm(
      Matrix::Identity(n, n) - lambda * mrp.transition(), geometry.lambda);
  report.bound = gamma == 0.0
                     ? std::numeric_limits<double>::infinity()
                     : report.sigma_min_f * (1.0 - gamma * lambda) /
                           (gamma * report.norm_one * report.norm_resolvent);
  report.r_max = mrp.expected_reward().cwiseAbs().maxCoeff() +
                 3.0 * mrp.reward_noise_std().maxCoeff();

  double bound = report.bound;
  if (kappa) {
    if (*kappa < 0.0) throw std::invalid_argument("kappa must be nonnegative");
    if (lambda == 1.0 || gamma == 1.0) {
      report.applicable = false;
      report.holds = false;
      report.margin = std::numeric_limits<double>::quiet_NaN();
      return report;
    }
    report.kappa_penalty = gamma == 0.0 ? 0.0
                                        : (1.0 - gamma * lambda) * report.r_max * *kappa /
                                              (gamma * (1.0 - lambda) * (1.0 - gamma));
    bound -= report.kappa_penalty;
  }
  report.margin = bound - report.norm_f;
  report.holds = report.margin > 0.0;
  return report;
}

ContractionReport contraction_condition(const MarkovRewardProcess& mrp,
                                        const FeatureMap& features,
                                        const Vector& f, double lambda,
                                        std::optional<double> kappa) {
  if (features.n_states() != mrp.n_states()) {
    throw std::invalid_argument("feature map does not match the MRP");
  }
  return contraction_condition(mrp, f, lambda, stationary_distribution(mrp), kappa);
}

double sampled_lipschitz(const std::function<Vector(const Vector&)>& op,
                         const Vector& weights, int pairs, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto n = weights.size();
  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    Vector a(n), b(n);
    for (Eigen::Index i = 0; i < n; ++i) a(i) = normal(rng);
    for (Eigen::Index i = 0; i < n; ++i) b(i) = normal(rng);
    const double denom = weighted_norm(a - b, weights);
    if (denom == 0.0) continue;
    worst = std::max(worst, weighted_norm(op(a) - op(b), weights) / denom);
  }
  return worst;
}

PerEquivalence per_equivalence(std::span<const PerSample> dataset,
                               const Vector& f) {
  if (dataset.empty()) throw std::invalid_argument("empty dataset");
  const auto n = static_cast<Eigen::Index>(dataset.size());
  Vector f2(n);
  Vector sq_err(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& sample = dataset[static_cast<std::size_t>(i)];
    if (sample.state < 0 || sample.state >= f.size()) {
      throw std::out_of_range("sample state has no emphasis value");
    }
    const double fs = f(sample.state);
    if (!(fs > 0.0)) throw std::domain_error("emphasis must be positive");
    f2(i) = fs * fs;
    const double err = sample.target - sample.value;
    sq_err(i) = err * err;
  }
  PerEquivalence out;
  const double total = f2.sum();
  out.lhs = f2.dot(sq_err) / static_cast<double>(n);
  out.q = f2 / total;
  out.c = total / static_cast<double>(n);
  out.rhs = out.c * out.q.dot(sq_err);
  return out;
}

}  // namespace dtd
