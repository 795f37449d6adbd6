// Goodness-of-fit metrics and ground-truth recovery checking.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cvgp/expr.hpp"
#include "cvgp/oracle.hpp"

namespace cvgp {

struct MetricReport {
  double mse = 0.0;
  double neg_mse = 0.0;
  double nmse = 0.0;
  double rmse = 0.0;
  double nrmse = 0.0;
  double inv_nrmse = 0.0;  // 1 / NRMSE
  double sigma_y = 0.0;    // sqrt of the biased (1/n) target variance
  int n = 0;
};

/// All six metrics over equal-length prediction/target vectors. Throws on a
/// length mismatch, n < 2, or degenerate (constant) targets.
MetricReport compute_metrics(std::span<const double> pred, std::span<const double> y);

/// RL-style reward variant 1 / (1 + NRMSE), kept separate from the
/// InvNRMSE metric above.
double reward_inv_nrmse(const MetricReport& report);

struct QuantileSummary {
  double min = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, max = 0.0;
};

/// Five-number summary with linear interpolation on the sorted values.
QuantileSummary summarize_quantiles(std::vector<double> values);

/// Equivalence check used for recovery rates: light normalization
/// (constant folding, flattening and sorting of commutative chains) with a
/// numerical-equivalence fallback over domain-sampled points; candidate
/// constants get one re-fit against noiseless truth samples first.
bool recovered(const ExpressionTree& candidate, const ExpressionTree& truth,
               const SampleRange& domain, uint64_t seed);

}  // namespace cvgp
