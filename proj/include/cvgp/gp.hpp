// Genetic-programming inner loop: mutation restricted to non-frozen nodes
// with a stage-limited node library, subtree crossover, selection with a
// diversity fraction, hall-of-fame maintenance.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cvgp/expr.hpp"
#include "cvgp/fitting.hpp"
#include "cvgp/oracle.hpp"
#include "cvgp/rng.hpp"

namespace cvgp {

/// Node library available to tree generation: operators plus terminals.
/// A constant leaf is always allowed.
struct NodeLibrary {
  std::vector<Op> ops;
  std::vector<int> vars;  // 0-based variable indices
};

struct GPParams {
  int pool_size = 100;
  int generations = 100;
  int hof_size = 10;
  double p_mutate = 0.5;
  double p_mate = 0.5;
  NodeLibrary library;
  int max_nodes = 50;      // offspring over the cap are rejected, parent kept
  int init_depth = 4;      // grow depth for initial pool trees
  int mutate_depth = 3;    // grow depth for mutation subtrees
};

struct Member {
  ExpressionTree tree;
  ExperimentOutcome outcome;
  double fitness = 0.0;
  uint64_t birth = 0;
};

struct HofEntry {
  ExpressionTree tree;
  std::string text;
  double fitness = 0.0;
  int nodes = 0;
  uint64_t birth = 0;
};

struct Population {
  std::vector<Member> members;
  std::vector<HofEntry> hall_of_fame;  // fitness desc, then smaller, then older
  uint64_t next_birth = 0;
};

/// Random tree by the grow method, depth capped at max_depth.
ExpressionTree random_tree(const NodeLibrary& lib, int max_depth, Rng& rng);

/// Replaces a uniformly chosen non-frozen subtree with a freshly grown one;
/// a fully frozen tree comes back as an unchanged clone.
ExpressionTree mutate(const ExpressionTree& expr, const NodeLibrary& lib, Rng& rng,
                      int subtree_depth = 3);

/// One-point subtree crossover at non-frozen nodes; clones come back
/// unchanged when either parent has no non-frozen node.
std::pair<ExpressionTree, ExpressionTree> mate(const ExpressionTree& a,
                                               const ExpressionTree& b, Rng& rng);

/// Keeps the top ~90% by fitness (ties: smaller tree, then older) plus a
/// random 10% of the remainder. Pools at or below M are kept whole.
std::vector<Member> selection(std::vector<Member> pool, int target_size, Rng& rng);

Population create_init_pool(int pool_size, const NodeLibrary& lib, uint64_t seed,
                            int init_depth = 4);

/// How members are evaluated: data source, partition and fitter settings.
struct EvalContext {
  const DataOracle* oracle = nullptr;
  VariablePartition part{1};
  int num_trials = 10;
  int batch_size = 256;
  FitterConfig fitter;
  int threads = 1;
};

using GenObserver = std::function<void(int generation, const Population&)>;

/// Runs the generation loop in place. Every member must carry a current
/// outcome on entry; the hall of fame is rebuilt from the incoming pool.
void gp_run(Population& pop, const EvalContext& ctx, const GPParams& params,
            uint64_t run_seed, const GenObserver& observer = {});

/// Refits one member on fresh trial data and stores outcome, fitness and the
/// per-trial mean of each fitted constant (as warm start for later fits).
void refit_member(Member& member, const EvalContext& ctx, uint64_t event_seed);

}  // namespace cvgp
