#include "cvgp/oracle.hpp"

#include <cmath>

namespace cvgp {

namespace {
constexpr uint64_t kCtrlStream = 0x6374726cULL;   // "ctrl"
constexpr uint64_t kRowStream = 0x726f7773ULL;    // "rows"
constexpr uint64_t kNoiseStream = 0x6e6f6973ULL;  // "nois"
constexpr int kMaxRowRejections = 1000;
}  // namespace

double SampleRange::draw(Rng& rng) const {
  double neg_len = neg_hi - neg_lo;
  double pos_len = pos_hi - pos_lo;
  double u = uniform(rng, 0.0, neg_len + pos_len);
  return u < neg_len ? neg_lo + u : pos_lo + (u - neg_len);
}

std::vector<int> VariablePartition::controlled() const {
  std::vector<int> out;
  for (int i = 0; i < num_vars(); ++i)
    if (!free_[i]) out.push_back(i);
  return out;
}

std::vector<int> VariablePartition::free() const {
  std::vector<int> out;
  for (int i = 0; i < num_vars(); ++i)
    if (free_[i]) out.push_back(i);
  return out;
}

std::vector<double> TrialBatch::row(int i) const {
  std::vector<double> out(cols.size());
  for (size_t v = 0; v < cols.size(); ++v) out[v] = cols[v][i];
  return out;
}

DataOracle::DataOracle(ExpressionTree truth, int num_vars, double noise_sigma,
                       SampleRange range, uint64_t master_seed)
    : truth_(std::move(truth)),
      num_vars_(num_vars),
      sigma_(noise_sigma),
      range_(range),
      seed_(master_seed) {
  if (num_vars_ < 1) throw std::invalid_argument("oracle needs at least one variable");
  if (sigma_ < 0) throw std::invalid_argument("noise sigma must be nonnegative");
  if (max_var_index(truth_) >= num_vars_)
    throw std::invalid_argument("truth references a variable outside the oracle");
  if (!open_constants(truth_).empty())
    throw std::invalid_argument("oracle truth must not contain open constant slots");
}

DataOracle make_oracle(ExpressionTree truth, double noise_sigma, uint64_t seed,
                       int num_vars, SampleRange range) {
  if (num_vars < 0) num_vars = std::max(1, max_var_index(truth) + 1);
  return DataOracle(std::move(truth), num_vars, noise_sigma, range, seed);
}

TrialBatch make_trial(const DataOracle& oracle, const VariablePartition& part,
                      const std::map<int, double>& controlled_values,
                      int batch_size, uint64_t trial_seed) {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (part.num_vars() != oracle.num_vars())
    throw std::invalid_argument("partition size does not match oracle");
  for (int v : part.controlled())
    if (!controlled_values.count(v))
      throw std::invalid_argument("missing controlled value for a controlled variable");

  const int m = oracle.num_vars();
  const int n = batch_size;
  TrialBatch batch;
  batch.controlled_values = controlled_values;
  batch.cols.assign(m, std::vector<double>(n));
  batch.y.resize(n);

  for (const auto& [v, val] : controlled_values)
    std::fill(batch.cols[v].begin(), batch.cols[v].end(), val);

  std::vector<int> free_vars = part.free();
  Rng rng = make_rng({oracle.master_seed(), trial_seed, kRowStream});
  for (int r = 0; r < n; ++r)
    for (int v : free_vars) batch.cols[v][r] = oracle.range().draw(rng);

  EvalProgram prog(oracle.truth());
  std::vector<char> bad(n, 0);
  std::vector<int> attempts(n, 0);
  for (;;) {
    prog.run(batch.cols, batch.y);
    int remaining = 0;
    for (int r = 0; r < n; ++r) {
      bad[r] = !std::isfinite(batch.y[r]);
      if (bad[r]) {
        if (++attempts[r] > kMaxRowRejections)
          throw OracleError("oracle: truth non-finite after 1000 resampling attempts");
        ++remaining;
      }
    }
    if (remaining == 0) break;
    for (int r = 0; r < n; ++r)
      if (bad[r])
        for (int v : free_vars) batch.cols[v][r] = oracle.range().draw(rng);
  }

  if (oracle.noise_sigma() > 0) {
    Rng noise_rng = make_rng({oracle.master_seed(), trial_seed, kNoiseStream});
    std::normal_distribution<double> gauss(0.0, oracle.noise_sigma());
    for (int r = 0; r < n; ++r) batch.y[r] += gauss(noise_rng);
  }
  return batch;
}

std::vector<TrialBatch> gen_trial_data(const DataOracle& oracle,
                                       const VariablePartition& part, int num_trials,
                                       int batch_size, uint64_t stage_seed) {
  if (num_trials < 2)
    throw std::invalid_argument("control variable experiments need at least 2 trials");
  std::vector<TrialBatch> trials;
  trials.reserve(num_trials);
  for (int k = 0; k < num_trials; ++k) {
    uint64_t trial_seed = mix_seed({stage_seed, static_cast<uint64_t>(k)});
    Rng ctrl_rng = make_rng({oracle.master_seed(), trial_seed, kCtrlStream});
    std::map<int, double> controlled;
    for (int v : part.controlled()) controlled[v] = oracle.range().draw(ctrl_rng);
    trials.push_back(make_trial(oracle, part, controlled, batch_size, trial_seed));
  }
  return trials;
}

}  // namespace cvgp
