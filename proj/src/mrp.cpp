#include "dtd/mrp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dtd {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kInitialSumTol = 1e-12;

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

MarkovRewardProcess::MarkovRewardProcess(Matrix transition,
                                         Vector expected_reward,
                                         Vector reward_noise_std,
                                         Vector initial_dist, double discount,
                                         std::optional<Matrix> transition_reward)
    : transition_(std::move(transition)),
      expected_reward_(std::move(expected_reward)),
      reward_noise_std_(std::move(reward_noise_std)),
      initial_dist_(std::move(initial_dist)),
      discount_(discount),
      transition_reward_(std::move(transition_reward)) {
  const auto n = transition_.rows();
  require(n > 0, "MRP needs at least one state");
  require(transition_.cols() == n, "transition matrix must be square");
  require(expected_reward_.size() == n, "expected_reward has wrong length");
  require(reward_noise_std_.size() == n, "reward_noise_std has wrong length");
  require(initial_dist_.size() == n, "initial_dist has wrong length");
  require(all_finite(transition_) && all_finite(expected_reward_) &&
              all_finite(reward_noise_std_) && all_finite(initial_dist_),
          "MRP entries must be finite");
  require(discount_ >= 0.0 && discount_ <= 1.0, "discount must lie in [0, 1]");
  require((transition_.array() >= 0.0).all(),
          "transition probabilities must be nonnegative");
  for (Eigen::Index i = 0; i < n; ++i) {
    require(transition_.row(i).sum() <= 1.0 + kRowSumTol,
            "transition row " + std::to_string(i) + " sums above 1");
  }
  require((initial_dist_.array() >= 0.0).all(),
          "initial_dist entries must be nonnegative");
  require(std::abs(initial_dist_.sum() - 1.0) <= kInitialSumTol,
          "initial_dist must sum to 1");
  require((reward_noise_std_.array() >= 0.0).all(),
          "reward_noise_std entries must be nonnegative");

  if (transition_reward_) {
    const Matrix& table = *transition_reward_;
    require(table.rows() == n && table.cols() == n + 1,
            "transition_reward must be n x (n+1)");
    require(all_finite(table), "transition_reward entries must be finite");
    const Vector exit = exit_probability();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double implied =
          transition_.row(i).dot(table.row(i).head(n)) + exit(i) * table(i, n);
      require(std::abs(implied - expected_reward_(i)) <= 1e-9,
              "transition_reward disagrees with expected_reward at state " +
                  std::to_string(i));
    }
  }
}

Vector MarkovRewardProcess::exit_probability() const {
  Vector exit = Vector::Ones(n_states()) - transition_.rowwise().sum();
  return exit.cwiseMax(0.0);
}

bool MarkovRewardProcess::episodic() const {
  return (exit_probability().array() > kRowSumTol).any();
}

Matrix MarkovRewardProcess::restart_transition() const {
  return transition_ + exit_probability() * initial_dist_.transpose();
}

FeatureMap::FeatureMap(Matrix phi) : phi_(std::move(phi)) {
  require(phi_.rows() > 0 && phi_.cols() > 0, "feature matrix is empty");
  require(phi_.allFinite(), "feature entries must be finite");
  require(phi_.cols() <= phi_.rows(),
          "more features than states cannot be linearly independent");
  require(smallest_singular_value(phi_) > 1e-10,
          "feature columns are not linearly independent");
}

Vector FeatureMap::features(State s) const {
  if (s == kTerminal) return Vector::Zero(n_features());
  if (s < 0 || s >= n_states()) throw std::out_of_range("state out of range");
  return phi_.row(s).transpose();
}

double FeatureMap::value(State s, const Vector& theta) const {
  if (s == kTerminal) return 0.0;
  if (s < 0 || s >= n_states()) throw std::out_of_range("state out of range");
  return phi_.row(s).dot(theta);
}

double smallest_singular_value(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  return s.size() == 0 ? 0.0 : s(s.size() - 1);
}

bool restart_chain_is_primitive(const MarkovRewardProcess& mrp) {
  // A nonnegative matrix is primitive iff some power is strictly positive,
  // and Wielandt's bound (n-1)^2 + 1 caps the exponent needed. Once a power
  // is positive all higher powers are, so repeated squaring suffices.
  const int n = mrp.n_states();
  using BoolMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;
  BoolMatrix pattern = (mrp.restart_transition().array() > 0.0).cast<int>();
  const long bound = static_cast<long>(n - 1) * (n - 1) + 1;
  long exponent = 1;
  while (exponent < bound) {
    BoolMatrix sq = pattern * pattern;
    pattern = (sq.array() > 0).cast<int>();
    exponent *= 2;
  }
  return (pattern.array() > 0).all();
}

Vector stationary_distribution(const MarkovRewardProcess& mrp) {
  if (!restart_chain_is_primitive(mrp)) {
    throw std::domain_error(
        "restart chain is reducible or periodic; no unique positive "
        "stationary distribution");
  }
  const int n = mrp.n_states();
  const Matrix p = mrp.restart_transition();

  // d^T (P - I) = 0 with one balance equation swapped for sum(d) = 1.
  Matrix system = p.transpose() - Matrix::Identity(n, n);
  system.row(n - 1).setOnes();
  Vector rhs = Vector::Zero(n);
  rhs(n - 1) = 1.0;
  Vector d = system.fullPivLu().solve(rhs);

  auto residual = [&](const Vector& x) {
    return (p.transpose() * x - x).cwiseAbs().maxCoeff();
  };
  if (!d.allFinite() || residual(d) > 1e-12 || (d.array() <= 0.0).any()) {
    d = Vector::Constant(n, 1.0 / n);
    constexpr long kCap = 1'000'000;
    long it = 0;
    for (; it < kCap; ++it) {
      Vector next = p.transpose() * d;
      next /= next.sum();
      const double change = (next - d).cwiseAbs().maxCoeff();
      d = std::move(next);
      if (change < 1e-13) break;
    }
    if (it == kCap) {
      throw std::domain_error("power iteration did not converge");
    }
  }
  return d;
}

Vector true_value(const MarkovRewardProcess& mrp) {
  const int n = mrp.n_states();
  const Matrix system =
      Matrix::Identity(n, n) - mrp.discount() * mrp.transition();
  Eigen::FullPivLU<Matrix> lu(system);
  if (!lu.isInvertible()) {
    throw std::domain_error(
        "I - gamma P is singular (undiscounted chain without terminal exit)");
  }
  return lu.solve(mrp.expected_reward());
}

ExactSolution exact_solution(const MarkovRewardProcess& mrp) {
  return ExactSolution{stationary_distribution(mrp), true_value(mrp)};
}

State sample_initial_state(const MarkovRewardProcess& mrp, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  const Vector& rho = mrp.initial_dist();
  double acc = 0.0;
  State last_positive = 0;
  for (State s = 0; s < mrp.n_states(); ++s) {
    if (rho(s) <= 0.0) continue;
    last_positive = s;
    acc += rho(s);
    if (u < acc) return s;
  }
  return last_positive;
}

Transition sample_transition(const MarkovRewardProcess& mrp, State state,
                             Rng& rng) {
  if (state < 0 || state >= mrp.n_states()) {
    throw std::out_of_range("sample_transition: state out of range");
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  const int n = mrp.n_states();
  State next = kTerminal;
  double acc = 0.0;
  for (State j = 0; j < n; ++j) {
    acc += mrp.transition()(state, j);
    if (u < acc) {
      next = j;
      break;
    }
  }
  // Rows that sum to one but lose the last ulp to rounding must not exit.
  if (next == kTerminal && mrp.exit_probability()(state) <= kRowSumTol) {
    for (State j = n - 1; j >= 0; --j) {
      if (mrp.transition()(state, j) > 0.0) {
        next = j;
        break;
      }
    }
  }

  double reward = mrp.expected_reward()(state);
  if (const auto& table = mrp.transition_reward()) {
    reward = (*table)(state, next == kTerminal ? n : next);
  }
  const double sigma = mrp.reward_noise_std()(state);
  if (sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, sigma);
    reward += noise(rng);
  }
  return Transition{state, reward, next};
}

Environment make_random_walk(int n_states, InitialState init) {
  if (n_states < 2) throw std::invalid_argument("random walk needs >= 2 states");
  const int n = n_states;
  Matrix p = Matrix::Zero(n, n);
  Matrix rewards = Matrix::Zero(n, n + 1);
  for (int s = 0; s < n; ++s) {
    if (s > 0) p(s, s - 1) = 0.5;
    if (s < n - 1) p(s, s + 1) = 0.5;
  }
  // +1 only on the step into the right terminal.
  rewards(n - 1, n) = 1.0;
  Vector expected = Vector::Zero(n);
  expected(n - 1) = 0.5;

  Vector rho = Vector::Zero(n);
  switch (init) {
    case InitialState::Left: rho(0) = 1.0; break;
    case InitialState::Middle: rho(n / 2) = 1.0; break;
    case InitialState::Right: rho(n - 1) = 1.0; break;
  }
  MarkovRewardProcess mrp(std::move(p), std::move(expected), Vector::Zero(n),
                          std::move(rho), 1.0, std::move(rewards));
  return Environment{std::move(mrp), make_feature_map(FeatureKind::Tabular, n)};
}

Environment make_noisy_chain(double reward_level) {
  constexpr int n = 10;
  Matrix p = Matrix::Zero(n, n);
  Vector sigma(n);
  for (int s = 0; s < n; ++s) {
    if (s > 0) p(s, s - 1) = 0.5;
    if (s < n - 1) p(s, s + 1) = 0.5;
    sigma(s) = 0.1 * (s + 1);
  }
  MarkovRewardProcess mrp(std::move(p), Vector::Constant(n, reward_level),
                          std::move(sigma), Vector::Constant(n, 1.0 / n), 1.0);
  return Environment{std::move(mrp), make_feature_map(FeatureKind::Tabular, n)};
}

Environment make_boyan_chain() {
  constexpr int n = 13;
  Matrix p = Matrix::Zero(n, n);
  Vector r = Vector::Zero(n);
  for (int k = 2; k < n; ++k) {
    p(k, k - 1) = 0.5;
    p(k, k - 2) = 0.5;
    r(k) = -3.0;
  }
  p(1, 0) = 1.0;
  r(1) = -2.0;
  // State 0 exits with probability one and reward 0.
  Vector rho = Vector::Zero(n);
  rho(12) = 1.0;

  Matrix phi = Matrix::Zero(n, 4);
  const double centres[4] = {12.0, 8.0, 4.0, 0.0};
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < 4; ++j) {
      phi(k, j) = std::max(0.0, 1.0 - std::abs(k - centres[j]) / 4.0);
    }
  }
  MarkovRewardProcess mrp(std::move(p), std::move(r), Vector::Zero(n),
                          std::move(rho), 1.0);
  return Environment{std::move(mrp), FeatureMap(std::move(phi))};
}

FeatureMap make_feature_map(FeatureKind kind, int n_states) {
  if (n_states < 1) throw std::invalid_argument("n_states must be positive");
  switch (kind) {
    case FeatureKind::Tabular:
      return FeatureMap(Matrix::Identity(n_states, n_states));
    case FeatureKind::Inverted: {
      if (n_states != 5) {
        throw std::invalid_argument("inverted features are defined for 5 states");
      }
      Matrix phi = Matrix::Constant(5, 5, 0.5);
      phi.diagonal().setZero();
      return FeatureMap(std::move(phi));
    }
    case FeatureKind::Dependent: {
      if (n_states != 5) {
        throw std::invalid_argument(
            "dependent features are defined for 5 states");
      }
      const double a = 1.0 / std::sqrt(2.0);
      const double b = 1.0 / std::sqrt(3.0);
      Matrix phi(5, 3);
      phi << 1, 0, 0,
             a, a, 0,
             b, b, b,
             0, a, a,
             0, 0, 1;
      return FeatureMap(std::move(phi));
    }
  }
  throw std::invalid_argument("unknown feature kind");
}

}  // namespace dtd
