#include "dtd/learners.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dtd {

namespace {

double state_value(const FeatureMap& features, State s, const Vector& theta) {
  return s == kTerminal ? 0.0 : features.phi().row(s).dot(theta);
}

void check_transition(const FeatureMap& features, const Transition& tr) {
  if (tr.state < 0 || tr.state >= features.n_states()) {
    throw std::out_of_range("transition source state out of range");
  }
  if (tr.next != kTerminal && (tr.next < 0 || tr.next >= features.n_states())) {
    throw std::out_of_range("transition next state out of range");
  }
  if (!std::isfinite(tr.reward)) {
    throw std::domain_error("non-finite reward");
  }
}

double td_error(const FeatureMap& features, double gamma, const Transition& tr,
                const Vector& theta) {
  const double delta = tr.reward + gamma * state_value(features, tr.next, theta) -
                       state_value(features, tr.state, theta);
  if (!std::isfinite(delta)) throw std::domain_error("non-finite TD error");
  return delta;
}

}  // namespace

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::TD: return "TD";
    case Algorithm::DTD: return "DTD";
    case Algorithm::ETD: return "ETD";
    case Algorithm::PTD: return "PTD";
    case Algorithm::TDW: return "TDW";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "TD" || name == "td") return Algorithm::TD;
  if (name == "DTD" || name == "dtd") return Algorithm::DTD;
  if (name == "ETD" || name == "etd") return Algorithm::ETD;
  if (name == "PTD" || name == "ptd") return Algorithm::PTD;
  if (name == "TDW" || name == "tdw") return Algorithm::TDW;
  throw std::invalid_argument("unknown algorithm: " + std::string(name));
}

void AlgoConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("lambda must lie in [0, 1]");
  }
  if (!(alpha.initial > 0.0 && std::isfinite(alpha.initial))) {
    throw std::invalid_argument("alpha must be positive");
  }
  if (alpha.decay_steps < 0.0) {
    throw std::invalid_argument("alpha decay_steps must be nonnegative");
  }
  emphasis.validate();
  if (algorithm == Algorithm::DTD) {
    const bool zero_constant = emphasis.kind == EmphasisKind::Constant && emphasis.constant == 0.0;
    const bool zero_entry = emphasis.kind == EmphasisKind::Table &&
                            std::find(emphasis.table.begin(), emphasis.table.end(), 0.0) !=
                                emphasis.table.end();
    if (zero_constant || zero_entry) {
      throw std::invalid_argument("DTD emphasis must be strictly positive");
    }
  }
}

LearnerState LearnerState::zeros(int n_features) {
  LearnerState s;
  s.theta = Vector::Zero(n_features);
  s.trace = Vector::Zero(n_features);
  return s;
}

void LearnerState::begin_episode() {
  trace.setZero();
  followon = 0.0;
}

void dtd_step(const FeatureMap& features, double gamma, const Transition& tr,
              double f_value, LearnerState& state, const AlgoConfig& config) {
  check_transition(features, tr);
  if (!(f_value > 0.0) || !std::isfinite(f_value)) {
    throw std::domain_error("emphasis must be positive and finite");
  }
  const double alpha = config.alpha.at(state.step_count);
  state.trace = gamma * config.lambda * state.trace +
                f_value * features.phi().row(tr.state).transpose();
  const double delta = td_error(features, gamma, tr, state.theta);
  state.theta += (alpha * delta * f_value) * state.trace;
  ++state.step_count;
}

void td_lambda_step(const FeatureMap& features, double gamma,
                    const Transition& tr, LearnerState& state,
                    const AlgoConfig& config) {
  check_transition(features, tr);
  const double alpha = config.alpha.at(state.step_count);
  state.trace = gamma * config.lambda * state.trace +
                features.phi().row(tr.state).transpose();
  const double delta = td_error(features, gamma, tr, state.theta);
  state.theta += (alpha * delta) * state.trace;
  ++state.step_count;
}

void etd_step(const FeatureMap& features, double gamma, const Transition& tr,
              LearnerState& state, const AlgoConfig& config) {
  check_transition(features, tr);
  const double alpha = config.alpha.at(state.step_count);
  state.followon = gamma * state.followon + 1.0;
  const double emphasis =
      config.lambda + (1.0 - config.lambda) * state.followon;
  state.trace = gamma * config.lambda * state.trace +
                emphasis * features.phi().row(tr.state).transpose();
  const double delta = td_error(features, gamma, tr, state.theta);
  state.theta += (alpha * delta) * state.trace;
  ++state.step_count;
}

void ptd_step(const FeatureMap& features, double gamma, const Transition& tr,
              double beta_value, LearnerState& state, const AlgoConfig& config) {
  check_transition(features, tr);
  if (!(beta_value >= 0.0 && beta_value <= 1.0)) {
    throw std::domain_error("preference must lie in [0, 1]");
  }
  const double alpha = config.alpha.at(state.step_count);
  state.trace = gamma * config.lambda * (1.0 - beta_value) * state.trace +
                beta_value * features.phi().row(tr.state).transpose();
  const double delta = td_error(features, gamma, tr, state.theta);
  state.theta += (alpha * delta) * state.trace;
  ++state.step_count;
}

void tdw_step(const FeatureMap& features, double gamma, const Transition& tr,
              double w_value, LearnerState& state, const AlgoConfig& config) {
  check_transition(features, tr);
  if (!(w_value >= 0.0) || !std::isfinite(w_value)) {
    throw std::domain_error("weight must be nonnegative and finite");
  }
  const double alpha = config.alpha.at(state.step_count);
  state.trace = gamma * config.lambda * state.trace +
                w_value * features.phi().row(tr.state).transpose();
  const double delta = td_error(features, gamma, tr, state.theta);
  state.theta += (alpha * delta) * state.trace;
  ++state.step_count;
}

void learner_step(const FeatureMap& features, double gamma,
                  const Transition& tr, double emphasis_value,
                  LearnerState& state, const AlgoConfig& config) {
  switch (config.algorithm) {
    case Algorithm::TD:
      td_lambda_step(features, gamma, tr, state, config);
      return;
    case Algorithm::DTD:
      dtd_step(features, gamma, tr, emphasis_value, state, config);
      return;
    case Algorithm::ETD:
      etd_step(features, gamma, tr, state, config);
      return;
    case Algorithm::PTD:
      ptd_step(features, gamma, tr, emphasis_value, state, config);
      return;
    case Algorithm::TDW:
      tdw_step(features, gamma, tr, emphasis_value, state, config);
      return;
  }
}

long run_episode(const MarkovRewardProcess& mrp, const FeatureMap& features,
                 const AlgoConfig& config, EmphasisState& emphasis,
                 LearnerState& state, Rng& rng, long step_budget,
                 const StepObserver& observer) {
  if (step_budget < 0) throw std::invalid_argument("negative step budget");
  if (step_budget == 0) return 0;
  if (features.n_states() != mrp.n_states()) {
    throw std::invalid_argument("feature map does not match the MRP");
  }
  state.begin_episode();
  const double gamma = mrp.discount();
  const bool counts = emphasis.kind == EmphasisKind::CountInverse;
  const bool adaptive = emphasis.kind == EmphasisKind::AbsExpectedTdError;

  State s = sample_initial_state(mrp, rng);
  long used = 0;
  while (used < step_budget) {
    if (counts) update_counts(s, emphasis);
    if (adaptive) refresh_adaptive(emphasis, mrp, features, state.theta);
    const Transition tr = sample_transition(mrp, s, rng);
    learner_step(features, gamma, tr, emphasis.at(s), state, config);
    ++used;
    if (observer) observer(state);
    if (tr.next == kTerminal) break;
    s = tr.next;
  }
  return used;
}

}  // namespace dtd
