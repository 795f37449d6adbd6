// Data oracle: hidden ground-truth expression answering control-variable
// trial queries with (noisy) observations.
#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "cvgp/expr.hpp"
#include "cvgp/rng.hpp"

namespace cvgp {

/// Sampling domain for variable values: uniform over two bands placed
/// symmetrically around zero, keeping inv() arguments away from the pole.
struct SampleRange {
  double neg_lo = -3.0;
  double neg_hi = -0.3;
  double pos_lo = 0.3;
  double pos_hi = 3.0;

  double draw(Rng& rng) const;
};

struct VariablePartition {
  explicit VariablePartition(int num_vars) : free_(num_vars, false) {}

  static VariablePartition all_controlled(int num_vars) {
    return VariablePartition(num_vars);
  }
  static VariablePartition all_free(int num_vars) {
    VariablePartition p(num_vars);
    for (int i = 0; i < num_vars; ++i) p.free_[i] = true;
    return p;
  }

  int num_vars() const { return static_cast<int>(free_.size()); }
  bool is_free(int v) const { return free_.at(v); }
  void release(int v) { free_.at(v) = true; }
  std::vector<int> controlled() const;
  std::vector<int> free() const;

 private:
  std::vector<bool> free_;
};

/// One trial's data: controlled coordinates fixed batch-wide, free
/// coordinates random per row. Stored column-major for batch evaluation.
struct TrialBatch {
  std::map<int, double> controlled_values;     // variable index -> fixed value
  std::vector<std::vector<double>> cols;       // cols[var][row]
  std::vector<double> y;

  int batch_size() const { return static_cast<int>(y.size()); }
  int num_vars() const { return static_cast<int>(cols.size()); }
  std::vector<double> row(int i) const;
};

struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class DataOracle {
 public:
  DataOracle(ExpressionTree truth, int num_vars, double noise_sigma,
             SampleRange range, uint64_t master_seed);

  const ExpressionTree& truth() const { return truth_; }
  int num_vars() const { return num_vars_; }
  double noise_sigma() const { return sigma_; }
  const SampleRange& range() const { return range_; }
  uint64_t master_seed() const { return seed_; }

 private:
  ExpressionTree truth_;
  int num_vars_;
  double sigma_;
  SampleRange range_;
  uint64_t seed_;
};

/// Throws if the truth still has fittable constant slots. num_vars < 0 infers
/// the count from the truth's variables.
DataOracle make_oracle(ExpressionTree truth, double noise_sigma, uint64_t seed,
                       int num_vars = -1, SampleRange range = {});

/// One trial with explicitly chosen controlled values. Rows where the truth
/// evaluates non-finite are resampled; more than 1000 consecutive failures
/// for a row raise OracleError.
TrialBatch make_trial(const DataOracle& oracle, const VariablePartition& part,
                      const std::map<int, double>& controlled_values,
                      int batch_size, uint64_t trial_seed);

/// K trials with freshly drawn controlled values (shared within a trial,
/// varying across trials). Deterministic given (oracle seed, stage_seed, k).
std::vector<TrialBatch> gen_trial_data(const DataOracle& oracle,
                                       const VariablePartition& part, int num_trials,
                                       int batch_size, uint64_t stage_seed);

}  // namespace cvgp
