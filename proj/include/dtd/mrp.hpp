#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include <Eigen/Dense>

namespace dtd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Non-terminal states are indexed 0..n-1; kTerminal marks the absorbing exit.
using State = int;
inline constexpr State kTerminal = -1;

using Rng = std::mt19937_64;

/// Seeds an independent generator for (seed, stream). Streams with distinct
/// ids never share state, so adding a consumer does not shift another's draws.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/**
 * Finite Markov reward process with the policy already folded in.
 *
 * Rows of the transition matrix may be sub-stochastic; the missing mass is the
 * probability of exiting to the terminal state. The optional transition reward
 * table (n x (n+1), last column = exit) fixes how the expected reward is
 * realized per transition; without it every transition out of s pays
 * expected_reward(s).
 */
class MarkovRewardProcess {
 public:
  MarkovRewardProcess(Matrix transition, Vector expected_reward,
                      Vector reward_noise_std, Vector initial_dist,
                      double discount,
                      std::optional<Matrix> transition_reward = std::nullopt);

  int n_states() const { return static_cast<int>(transition_.rows()); }
  const Matrix& transition() const { return transition_; }
  const Vector& expected_reward() const { return expected_reward_; }
  const Vector& reward_noise_std() const { return reward_noise_std_; }
  const Vector& initial_dist() const { return initial_dist_; }
  double discount() const { return discount_; }
  const std::optional<Matrix>& transition_reward() const {
    return transition_reward_;
  }

  /// 1 - row sum, clamped at zero.
  Vector exit_probability() const;
  bool episodic() const;

  /// Transition matrix with exit mass redirected to the initial distribution.
  Matrix restart_transition() const;

 private:
  Matrix transition_;
  Vector expected_reward_;
  Vector reward_noise_std_;
  Vector initial_dist_;
  double discount_;
  std::optional<Matrix> transition_reward_;
};

/// |S| x K feature matrix; rows are feature vectors. Columns must be
/// linearly independent.
class FeatureMap {
 public:
  explicit FeatureMap(Matrix phi);

  int n_states() const { return static_cast<int>(phi_.rows()); }
  int n_features() const { return static_cast<int>(phi_.cols()); }
  const Matrix& phi() const { return phi_; }

  /// Zero vector for kTerminal.
  Vector features(State s) const;
  double value(State s, const Vector& theta) const;

 private:
  Matrix phi_;
};

struct ExactSolution {
  Vector d_pi;
  Vector true_value;
};

struct Environment {
  MarkovRewardProcess mrp;
  FeatureMap features;
};

struct Transition {
  State state;
  double reward;
  State next;
};

/// True iff the restart chain is irreducible and aperiodic (primitive).
bool restart_chain_is_primitive(const MarkovRewardProcess& mrp);

/// Stationary distribution of the restart chain. Throws std::domain_error if
/// the restart chain is reducible or periodic.
Vector stationary_distribution(const MarkovRewardProcess& mrp);

/// Solves (I - gamma P) v = r. Throws std::domain_error if singular.
Vector true_value(const MarkovRewardProcess& mrp);

ExactSolution exact_solution(const MarkovRewardProcess& mrp);

State sample_initial_state(const MarkovRewardProcess& mrp, Rng& rng);
Transition sample_transition(const MarkovRewardProcess& mrp, State state,
                             Rng& rng);

enum class InitialState { Left, Middle, Right };

Environment make_random_walk(int n_states, InitialState init);

/// Ten-state walk with uniform transitions and start state, constant
/// reward level and per-state Gaussian noise 0.1, 0.2, ..., 1.0.
Environment make_noisy_chain(double reward_level);

/// Thirteen states 12..0, start at 12, four hat features peaking at 12, 8, 4, 0.
Environment make_boyan_chain();

enum class FeatureKind { Tabular, Inverted, Dependent };

FeatureMap make_feature_map(FeatureKind kind, int n_states);

/// Smallest singular value of phi.
double smallest_singular_value(const Matrix& m);

}  // namespace dtd
