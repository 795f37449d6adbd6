#include "cvgp/cvgp.hpp"

#include <chrono>
#include <set>

#include "cvgp/parallel.hpp"

namespace cvgp {

namespace {
constexpr uint64_t kInitStream = 21;
constexpr uint64_t kStageStream = 22;
constexpr uint64_t kRefitStream = 23;
constexpr uint64_t kGpStream = 24;
}  // namespace

NodeLibrary stage_library(const std::vector<Op>& base_ops,
                          const std::vector<int>& freed_vars) {
  return NodeLibrary{base_ops, freed_vars};
}

std::vector<std::vector<int>> single_release_schedule(const std::vector<int>& order) {
  std::vector<std::vector<int>> schedule;
  schedule.reserve(order.size());
  for (int v : order) schedule.push_back({v});
  return schedule;
}

std::vector<std::vector<int>> joint_release_schedule(int num_vars) {
  std::vector<int> all(num_vars);
  for (int i = 0; i < num_vars; ++i) all[i] = i;
  return {all};
}

CvgpResult cvgp_run(const DataOracle& oracle, const CvgpConfig& config,
                    const std::vector<std::vector<int>>& schedule,
                    const GenObserver& observer) {
  const int m = oracle.num_vars();
  if (m < 1) throw std::invalid_argument("cvgp_run: need at least one variable");
  if (schedule.empty()) throw std::invalid_argument("cvgp_run: empty schedule");
  {
    std::set<int> seen;
    for (const auto& group : schedule)
      for (int v : group) {
        if (v < 0 || v >= m) throw std::invalid_argument("cvgp_run: bad variable index");
        if (!seen.insert(v).second)
          throw std::invalid_argument("cvgp_run: variable released twice");
      }
    if (static_cast<int>(seen.size()) != m)
      throw std::invalid_argument("cvgp_run: schedule must release every variable");
  }

  CvgpResult result;
  // Line 2: init pool; no variable has been released yet, so the initial
  // trees draw from operators and constants only.
  Population pop = create_init_pool(config.gp.pool_size,
                                    NodeLibrary{config.operators, {}},
                                    mix_seed({config.master_seed, kInitStream}),
                                    config.gp.init_depth);

  VariablePartition part = VariablePartition::all_controlled(m);
  std::vector<int> freed;

  for (size_t s = 0; s < schedule.size(); ++s) {
    auto t0 = std::chrono::steady_clock::now();
    uint64_t stage_seed =
        mix_seed({config.master_seed, kStageStream, static_cast<uint64_t>(s)});

    for (int v : schedule[s]) {
      part.release(v);  // Line 4
      freed.push_back(v);
    }

    EvalContext ctx;
    ctx.oracle = &oracle;
    ctx.part = part;
    ctx.num_trials = config.num_trials;
    ctx.batch_size = config.batch_size;
    ctx.fitter = config.fitter;
    ctx.threads = config.threads;

    // Lines 6-9: the partition changed, so every member is re-fitted on
    // fresh stage data before GP runs.
    const int n = static_cast<int>(pop.members.size());
    parallel_for(n, config.threads, [&](int i) {
      refit_member(pop.members[i], ctx,
                   mix_seed({stage_seed, kRefitStream, static_cast<uint64_t>(i)}));
    });

    // Line 10: GP with the accumulated stage library.
    GPParams params = config.gp;
    params.library = stage_library(config.operators, freed);
    gp_run(pop, ctx, params, mix_seed({stage_seed, kGpStream}), observer);

    // Lines 12-14: freeze what fits.
    StageReport report;
    report.stage = static_cast<int>(s) + 1;
    report.freed_vars = schedule[s];
    for (Member& member : pop.members) {
      bool was_frozen = member.tree.root()->frozen;
      freeze_equation(member.tree, member.outcome, config.fit_thresh, config.var_thresh);
      if (!was_frozen && member.tree.root()->frozen) ++report.members_frozen;
      for_each_node(member.tree, [&](const Node& node) {
        if (!node.is_const()) return;
        if (node.status == SlotStatus::FrozenStandalone) ++report.slots_standalone;
        if (node.status == SlotStatus::ExpandableSummary) ++report.slots_expandable;
      });
    }

    if (!pop.hall_of_fame.empty()) {
      report.best_fitness = pop.hall_of_fame.front().fitness;
      report.best_expr = pop.hall_of_fame.front().text;
    }
    report.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    result.stages.push_back(std::move(report));
  }

  result.population = std::move(pop);
  return result;
}

}  // namespace cvgp
