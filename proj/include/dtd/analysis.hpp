#pragma once

#include <functional>
#include <optional>
#include <span>

#include "dtd/mrp.hpp"

namespace dtd {

/// Emphasis f, stationary distribution d and their combination
/// Lambda = F D F, all stored as diagonals.
struct EmphasizedGeometry {
  Vector emphasis;
  Vector d;
  Vector lambda;

  static EmphasizedGeometry make(const Vector& f, const Vector& d);
};

/// Phi (Phi^T W Phi)^{-1} Phi^T W for a positive weight diagonal W.
/// Throws std::domain_error for a singular Gram matrix.
Matrix projection(const FeatureMap& features, const Vector& weights);

/// sqrt(x^T W x).
double weighted_norm(const Vector& x, const Vector& weights);

/// ||M||_W = largest singular value of W^{1/2} M W^{-1/2}.
double induced_norm(const Matrix& m, const Vector& weights);

/// Largest eigenvalue of (A + A^T) / 2.
double symmetric_max_eigenvalue(const Matrix& a);

/// ||V_theta - Pi T V_theta||_D with Pi the D-weighted projection and T the
/// one-step Bellman operator. Precomputes everything that does not depend on
/// theta.
class MspbeEvaluator {
 public:
  MspbeEvaluator(const MarkovRewardProcess& mrp, const FeatureMap& features);
  double operator()(const Vector& theta) const;
  const Vector& d_pi() const { return d_; }

 private:
  Matrix phi_;
  Matrix bellman_p_;  // gamma P
  Vector reward_;
  Matrix projection_;
  Vector d_;
};

double mspbe(const Vector& theta, const MarkovRewardProcess& mrp,
             const FeatureMap& features);

inline constexpr long kDefaultSeriesCap = 100'000;

/**
 * Discerning lambda-return operator
 *   F^{-1} sum_n lambda^n (P^n (I - lambda P) F 1) o
 *          (sum_{t<=n} (gamma P)^t r + (gamma P)^{n+1} V)
 * with the series cut once lambda^n ||P^n (I - lambda P) f||_inf < 1e-14.
 * Throws std::runtime_error if series_cap terms are not enough.
 */
Vector dtd_operator(const Vector& v, const MarkovRewardProcess& mrp,
                    const Vector& f, double lambda,
                    long series_cap = kDefaultSeriesCap);

struct LinearSystem {
  Matrix a;
  Vector b;
};

/// A = Phi^T F D (I - gamma lambda P)^{-1} F (gamma P - I) Phi,
/// b = Phi^T F D (I - gamma lambda P)^{-1} F r.
LinearSystem compute_A_b(const MarkovRewardProcess& mrp,
                         const FeatureMap& features, const Vector& f,
                         double lambda, const Vector& d);
LinearSystem compute_A_b(const MarkovRewardProcess& mrp,
                         const FeatureMap& features, const Vector& f,
                         double lambda);

/// theta* = -A^{-1} b. Throws std::domain_error if A is singular.
Vector fixed_point(const LinearSystem& system);

/// Terms of the contraction condition. `applicable` is false where the bound
/// degenerates (condition (ii) with lambda == 1 or gamma == 1).
struct ContractionReport {
  bool applicable = true;
  bool holds = false;
  double margin = 0.0;
  double norm_f = 0.0;          // ||F||_Lambda
  double sigma_min_f = 0.0;     // smallest singular value of F
  double norm_one = 0.0;        // ||1||_Lambda
  double norm_resolvent = 0.0;  // ||I - lambda P||_Lambda
  double bound = 0.0;           // right-hand side of condition (i)
  std::optional<double> kappa;
  double r_max = 0.0;
  double kappa_penalty = 0.0;   // subtracted from the bound under (ii)
};

/// Condition (i), or (ii) when kappa is given. r_max = max|r| + 3 max sigma.
ContractionReport contraction_condition(const MarkovRewardProcess& mrp,
                                        const FeatureMap& features,
                                        const Vector& f, double lambda,
                                        std::optional<double> kappa = std::nullopt);
ContractionReport contraction_condition(const MarkovRewardProcess& mrp,
                                        const Vector& f, double lambda,
                                        const Vector& d,
                                        std::optional<double> kappa = std::nullopt);

/// Largest ||op(V1) - op(V2)||_W / ||V1 - V2||_W over `pairs` random
/// Gaussian pairs.
double sampled_lipschitz(const std::function<Vector(const Vector&)>& op,
                         const Vector& weights, int pairs, Rng& rng);

struct PerSample {
  State state;
  double target;
  double value;
};

struct PerEquivalence {
  double lhs = 0.0;
  double rhs = 0.0;
  Vector q;  // priority of each sample
  double c = 0.0;
};

/// Uniform f^2-weighted squared loss versus priority-q sampled plain loss
/// scaled by c.
PerEquivalence per_equivalence(std::span<const PerSample> dataset,
                               const Vector& f);

}  // namespace dtd
