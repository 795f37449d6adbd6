// Experiment harness shared by the C API and the test suites: a run takes a
// fully resolved configuration, executes one engine on one truth, and
// returns stage reports plus hall-of-fame entries scored on held-out data.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cvgp/bench.hpp"
#include "cvgp/cvgp.hpp"
#include "cvgp/metrics.hpp"

namespace cvgp {

struct RunConfig {
  std::string engine = "cvgp";  // "cvgp" (one variable per stage) or "gp"
  std::string truth_text;
  int num_vars = 0;  // 0: inferred from the truth
  std::vector<Op> operators = {Op::Add, Op::Sub, Op::Mul, Op::Inv};
  double sigma = 0.0;
  uint64_t master_seed = 0;

  GPParams gp;  // library is stage-managed, leave empty
  int num_trials = 10;
  int batch_size = 256;
  int test_size = 256;
  double fit_thresh = 0.01;
  double var_thresh = 0.001;
  FitterConfig fitter;
  SampleRange range;
  std::vector<int> variable_order;  // 0-based; empty: numerical order
  int threads = 1;
};

struct HofReport {
  std::string expr;
  double fitness = 0.0;
  int nodes = 0;
  bool recovered = false;
  MetricReport test;
};

struct RunResult {
  std::vector<StageReport> stages;
  std::vector<HofReport> hof;
  double wall_ms = 0.0;
};

RunResult run_search(const RunConfig& config);

std::string ops_to_string(const std::vector<Op>& ops);       // "inv,+,-,*"
std::vector<Op> ops_from_string(const std::string& spec);

RunConfig run_config_from_json(const nlohmann::json& j);     // strict keys
nlohmann::json run_config_to_json(const RunConfig& config);
nlohmann::json run_result_to_json(const RunResult& result);

// -- bench manifests ----------------------------------------------------------

struct BenchGenConfig {
  std::vector<Op> operand_set = {Op::Add, Op::Sub, Op::Mul, Op::Inv};
  int a = 2, b = 1, c = 1;
  double sigma = 0.0;
  int count = 10;
  uint64_t base_seed = 0;
};

BenchGenConfig bench_config_from_json(const nlohmann::json& j);

/// One JSON line per generated truth; every line is census-validated against
/// the requested (a, b, c).
std::string bench_manifest_jsonl(const BenchGenConfig& config);

// -- report tables -------------------------------------------------------------

struct ReportTables {
  std::string quantiles_csv;
  std::string recovery_csv;
};

/// Aggregates per-run summary objects (one JSON object each) into the NMSE
/// quantile table and the recovery-rate table, keyed by
/// (operands, a, b, c, sigma, engine).
ReportTables build_report(const std::vector<nlohmann::json>& summaries);

/// CSV field helpers shared with the CLI output paths.
std::string csv_quote(const std::string& field);
std::string format_number(double v);

}  // namespace cvgp
