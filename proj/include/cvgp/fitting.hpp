// Per-trial open-constant optimization, the K-trial control variable
// experiment, and the equation-freezing rule.
#pragma once

#include <cstdint>
#include <vector>

#include "cvgp/expr.hpp"
#include "cvgp/oracle.hpp"

namespace cvgp {

struct FitterConfig {
  int restarts = 4;          // first restart is warm-started from slot values
  int max_iters = 500;       // simplex iterations per restart
  double init_lo = -1.0;     // random restart initialization range
  double init_hi = 1.0;
  double tol = 1e-8;         // convergence tolerance on the MSE spread
  double early_exit_mse = 1e-12;  // skip remaining restarts below this MSE
};

/// Fitted constants (aligned with open_constants order) and the trial's
/// fitness, NegMSE at the optimum.
struct TrialOutcome {
  std::vector<double> constants;
  double fitness = 0.0;
};

struct ExperimentOutcome {
  std::vector<TrialOutcome> trials;
  std::vector<uint64_t> slot_tags;  // node tags of the fitted slots at fit time

  int num_trials() const { return static_cast<int>(trials.size()); }
  bool aligned_with(const ExpressionTree& expr) const;
};

/// Minimizes batch MSE over the expression's fittable constants with a
/// multi-restart Nelder-Mead simplex; expressions without fittable constants
/// are scored directly. Non-finite fits yield a -inf fitness sentinel, never
/// an exception.
TrialOutcome fit_constants(const ExpressionTree& expr, const TrialBatch& batch,
                           const FitterConfig& cfg, uint64_t seed);

/// Independent fit per trial; does not mutate the expression.
ExperimentOutcome cv_experiment(const ExpressionTree& expr,
                                const VariablePartition& part,
                                const std::vector<TrialBatch>& trials,
                                const FitterConfig& cfg, uint64_t seed);

/// Scalar fitness used for GP selection: median of the per-trial NegMSE.
double scalar_fitness(const ExperimentOutcome& outcome);

/// Freezing rule: when every trial's MSE is at most fit_thresh, all operator
/// and variable nodes freeze; each fitted constant freezes stand-alone at the
/// mean of its fits when the cross-trial variance is at most var_thresh, and
/// becomes an expandable summary slot otherwise. Otherwise nothing changes.
void freeze_equation(ExpressionTree& expr, const ExperimentOutcome& outcome,
                     double fit_thresh = 0.01, double var_thresh = 0.001);

}  // namespace cvgp
