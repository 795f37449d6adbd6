// Outer loop: release variables stage by stage, run GP with the
// stage-restricted library, freeze what fits, return the hall of fame.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cvgp/gp.hpp"
#include "cvgp/oracle.hpp"

namespace cvgp {

struct CvgpConfig {
  GPParams gp;                      // library filled per stage
  std::vector<Op> operators;        // base operand set O_p
  int num_trials = 10;              // K
  int batch_size = 256;
  double fit_thresh = 0.01;
  double var_thresh = 0.001;
  std::vector<int> variable_order;  // 0-based; defaults to 0..m-1
  FitterConfig fitter;
  uint64_t master_seed = 0;
  int threads = 1;
};

struct StageReport {
  int stage = 0;                 // 1-based
  std::vector<int> freed_vars;   // variables released at this stage
  double best_fitness = 0.0;
  std::string best_expr;
  int members_frozen = 0;        // members whose structure froze this stage
  int slots_standalone = 0;      // constant slot census over the pool
  int slots_expandable = 0;
  double wall_ms = 0.0;
};

struct CvgpResult {
  Population population;  // hall_of_fame holds the final H
  std::vector<StageReport> stages;
};

NodeLibrary stage_library(const std::vector<Op>& base_ops,
                          const std::vector<int>& freed_vars);

/// One entry per stage; each stage releases the listed variables.
std::vector<std::vector<int>> single_release_schedule(const std::vector<int>& order);
std::vector<std::vector<int>> joint_release_schedule(int num_vars);

/// Runs the staged search over the given release schedule. The plain-GP
/// ablation is the same loop with a single stage releasing every variable.
CvgpResult cvgp_run(const DataOracle& oracle, const CvgpConfig& config,
                    const std::vector<std::vector<int>>& schedule,
                    const GenObserver& observer = {});

}  // namespace cvgp
