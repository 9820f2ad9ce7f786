#pragma once

#include <functional>
#include <string_view>

#include "dtd/emphasis.hpp"
#include "dtd/mrp.hpp"

namespace dtd {

enum class Algorithm { TD, DTD, ETD, PTD, TDW };

std::string_view to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view name);

/// alpha_t = initial / (1 + t / decay_steps); decay_steps == 0 keeps it
/// constant. Any decay_steps > 0 satisfies the Robbins-Monro conditions.
struct StepSize {
  double initial = 0.1;
  double decay_steps = 0.0;

  double at(long step) const {
    return decay_steps > 0.0 ? initial / (1.0 + step / decay_steps) : initial;
  }
  bool robbins_monro() const { return decay_steps > 0.0; }
};

struct AlgoConfig {
  Algorithm algorithm = Algorithm::TD;
  double lambda = 0.0;
  StepSize alpha;
  /// Emphasis for DTD, weight w for TDW, preference beta for PTD.
  EmphasisSpec emphasis;

  void validate() const;
  bool uses_emphasis() const {
    return algorithm == Algorithm::DTD || algorithm == Algorithm::PTD ||
           algorithm == Algorithm::TDW;
  }
};

struct LearnerState {
  Vector theta;
  Vector trace;
  /// Follow-on trace (ETD only), holds F_{t-1}.
  double followon = 0.0;
  long step_count = 0;

  static LearnerState zeros(int n_features);
  void begin_episode();
};

/// Linear DTD(lambda) step:
///   e <- gamma lambda e + f(S) phi(S)
///   delta <- R + gamma v(S') - v(S)
///   theta <- theta + alpha delta e f(S)
void dtd_step(const FeatureMap& features, double gamma, const Transition& tr,
              double f_value, LearnerState& state, const AlgoConfig& config);

void td_lambda_step(const FeatureMap& features, double gamma,
                    const Transition& tr, LearnerState& state,
                    const AlgoConfig& config);

/// On-policy emphatic TD with unit interest: F <- gamma F + 1,
/// M <- lambda + (1 - lambda) F, e <- gamma lambda e + M phi(S).
void etd_step(const FeatureMap& features, double gamma, const Transition& tr,
              LearnerState& state, const AlgoConfig& config);

/// Preferential TD: e <- gamma lambda (1 - beta) e + beta phi(S).
void ptd_step(const FeatureMap& features, double gamma, const Transition& tr,
              double beta_value, LearnerState& state, const AlgoConfig& config);

/// Selective-weight TD(lambda, w): DTD's trace without the trailing f(S)
/// on the parameter update.
void tdw_step(const FeatureMap& features, double gamma, const Transition& tr,
              double w_value, LearnerState& state, const AlgoConfig& config);

/// Dispatches on config.algorithm; emphasis_value is ignored by TD and ETD.
void learner_step(const FeatureMap& features, double gamma,
                  const Transition& tr, double emphasis_value,
                  LearnerState& state, const AlgoConfig& config);

/// Called after every environment step with the updated learner.
using StepObserver = std::function<void(const LearnerState&)>;

/**
 * Runs one episode from S0 ~ rho0 until termination or until step_budget
 * transitions have been consumed, whichever comes first. The trace (and
 * follow-on) are reset first. Before each update the adaptive emphasis is
 * refreshed from the current theta and count emphasis records the visit.
 * Returns the number of transitions used.
 */
long run_episode(const MarkovRewardProcess& mrp, const FeatureMap& features,
                 const AlgoConfig& config, EmphasisState& emphasis,
                 LearnerState& state, Rng& rng, long step_budget,
                 const StepObserver& observer = {});

}  // namespace dtd
