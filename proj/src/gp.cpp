#include "cvgp/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cvgp/parallel.hpp"

namespace cvgp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// stream labels
constexpr uint64_t kInitStream = 1;
constexpr uint64_t kGenStream = 2;
constexpr uint64_t kMutDecide = 3;
constexpr uint64_t kMutEvent = 4;
constexpr uint64_t kMatePair = 5;
constexpr uint64_t kMateEvent = 6;
constexpr uint64_t kSelect = 7;
constexpr uint64_t kGrow = 8;
constexpr uint64_t kData = 9;
constexpr uint64_t kFit = 10;

NodePtr grow(const NodeLibrary& lib, int depth_left, Rng& rng) {
  const int num_terminals = static_cast<int>(lib.vars.size()) + 1;  // + const
  const int num_ops = static_cast<int>(lib.ops.size());
  int choice;
  if (depth_left <= 1 || num_ops == 0) {
    choice = std::uniform_int_distribution<int>(0, num_terminals - 1)(rng);
  } else {
    choice = std::uniform_int_distribution<int>(0, num_ops + num_terminals - 1)(rng);
  }
  if (choice < num_ops && depth_left > 1) {
    Op op = lib.ops[choice];
    NodePtr a = grow(lib, depth_left - 1, rng);
    NodePtr b = op_arity(op) == 2 ? grow(lib, depth_left - 1, rng) : nullptr;
    return Node::make_op(op, std::move(a), std::move(b));
  }
  int t = depth_left <= 1 || num_ops == 0 ? choice : choice - num_ops;
  if (t == 0) return Node::make_const(uniform(rng, -1.0, 1.0), SlotStatus::Open);
  return Node::make_var(lib.vars[t - 1]);
}

bool rank_before(double fa, int na, uint64_t ba, double fb, int nb, uint64_t bb) {
  if (fa != fb) return fa > fb;
  if (na != nb) return na < nb;
  return ba < bb;
}

void hof_insert(Population& pop, const Member& member, int hof_size) {
  auto& hof = pop.hall_of_fame;
  int nodes = node_count(member.tree);
  if (static_cast<int>(hof.size()) == hof_size && hof_size > 0) {
    const HofEntry& last = hof.back();
    if (!rank_before(member.fitness, nodes, member.birth, last.fitness, last.nodes,
                     last.birth))
      return;
  }
  std::string text = serialize(member.tree);
  for (auto& e : hof) {
    if (e.text == text) {
      if (member.fitness > e.fitness) {
        e.fitness = member.fitness;
        e.birth = member.birth;
      }
      return;
    }
  }
  hof.push_back({member.tree, std::move(text), member.fitness, nodes, member.birth});
  std::sort(hof.begin(), hof.end(), [](const HofEntry& a, const HofEntry& b) {
    return rank_before(a.fitness, a.nodes, a.birth, b.fitness, b.nodes, b.birth);
  });
  if (static_cast<int>(hof.size()) > hof_size) hof.resize(hof_size);
}

void hof_rebuild(Population& pop, int hof_size) {
  pop.hall_of_fame.clear();
  for (const Member& m : pop.members) hof_insert(pop, m, hof_size);
}

}  // namespace

ExpressionTree random_tree(const NodeLibrary& lib, int max_depth, Rng& rng) {
  return ExpressionTree(grow(lib, max_depth, rng));
}

ExpressionTree mutate(const ExpressionTree& expr, const NodeLibrary& lib, Rng& rng,
                      int subtree_depth) {
  ExpressionTree out = expr;
  auto links = collect_links(out, [](const Node& n) { return !n.frozen; });
  if (links.empty()) return out;
  size_t pick = std::uniform_int_distribution<size_t>(0, links.size() - 1)(rng);
  *links[pick] = grow(lib, subtree_depth, rng);
  return out;
}

std::pair<ExpressionTree, ExpressionTree> mate(const ExpressionTree& a,
                                               const ExpressionTree& b, Rng& rng) {
  ExpressionTree ca = a, cb = b;
  auto la = collect_links(ca, [](const Node& n) { return !n.frozen; });
  auto lb = collect_links(cb, [](const Node& n) { return !n.frozen; });
  if (la.empty() || lb.empty()) return {std::move(ca), std::move(cb)};
  size_t ia = std::uniform_int_distribution<size_t>(0, la.size() - 1)(rng);
  size_t ib = std::uniform_int_distribution<size_t>(0, lb.size() - 1)(rng);
  std::swap(*la[ia], *lb[ib]);
  return {std::move(ca), std::move(cb)};
}

std::vector<Member> selection(std::vector<Member> pool, int target_size, Rng& rng) {
  if (pool.empty()) throw std::invalid_argument("selection: empty pool");
  const int n = static_cast<int>(pool.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    const Member &a = pool[x], &b = pool[y];
    return rank_before(a.fitness, node_count(a.tree), a.birth, b.fitness,
                       node_count(b.tree), b.birth);
  });
  if (n <= target_size) {
    std::vector<Member> out;
    out.reserve(n);
    for (int i : order) out.push_back(std::move(pool[i]));
    return out;
  }
  const int top = (9 * target_size + 9) / 10;  // ceil(0.9 M)
  const int random_picks = target_size - top;
  std::vector<Member> out;
  out.reserve(target_size);
  for (int i = 0; i < top; ++i) out.push_back(std::move(pool[order[i]]));
  std::vector<int> rest(order.begin() + top, order.end());
  for (int i = 0; i < random_picks; ++i) {
    size_t pick = std::uniform_int_distribution<size_t>(0, rest.size() - 1)(rng);
    out.push_back(std::move(pool[rest[pick]]));
    rest.erase(rest.begin() + pick);
  }
  return out;
}

Population create_init_pool(int pool_size, const NodeLibrary& lib, uint64_t seed,
                            int init_depth) {
  if (pool_size < 2) throw std::invalid_argument("pool size must be >= 2");
  Population pop;
  pop.members.reserve(pool_size);
  for (int i = 0; i < pool_size; ++i) {
    Rng rng = make_rng({seed, kInitStream, static_cast<uint64_t>(i)});
    Member m;
    m.tree = random_tree(lib, init_depth, rng);
    m.fitness = -kInf;
    m.birth = static_cast<uint64_t>(i);
    pop.members.push_back(std::move(m));
  }
  pop.next_birth = static_cast<uint64_t>(pool_size);
  return pop;
}

void refit_member(Member& member, const EvalContext& ctx, uint64_t event_seed) {
  auto trials = gen_trial_data(*ctx.oracle, ctx.part, ctx.num_trials, ctx.batch_size,
                               mix_seed({event_seed, kData}));
  member.outcome = cv_experiment(member.tree, ctx.part, trials, ctx.fitter,
                                 mix_seed({event_seed, kFit}));
  member.fitness = scalar_fitness(member.outcome);

  // mean fitted value per slot becomes the warm start for later fits
  auto slots = open_constants(member.tree);
  const size_t k = member.outcome.trials.size();
  for (size_t j = 0; j < slots.size(); ++j) {
    double mean = 0.0;
    for (const auto& t : member.outcome.trials) mean += t.constants[j];
    mean /= k;
    if (std::isfinite(mean)) slots[j]->value = mean;
  }
}

void gp_run(Population& pop, const EvalContext& ctx, const GPParams& params,
            uint64_t run_seed, const GenObserver& observer) {
  if (!ctx.oracle) throw std::invalid_argument("gp_run: missing oracle");
  const int n = static_cast<int>(pop.members.size());
  if (n == 0) throw std::invalid_argument("gp_run: empty pool");

  hof_rebuild(pop, params.hof_size);
  if (observer) observer(0, pop);

  for (int gen = 1; gen <= params.generations; ++gen) {
    uint64_t gen_seed = mix_seed({run_seed, kGenStream, static_cast<uint64_t>(gen)});

    // mutation pass (Lines 4-11)
    std::vector<char> mutated(n, 0);
    std::vector<ExpressionTree> candidates(n);
    {
      Rng decide = make_rng({gen_seed, kMutDecide});
      std::vector<char> chosen(n, 0);
      for (int i = 0; i < n; ++i) chosen[i] = unit(decide) < params.p_mutate;
      parallel_for(n, ctx.threads, [&](int i) {
        if (!chosen[i]) return;
        uint64_t ev = mix_seed({gen_seed, kMutEvent, static_cast<uint64_t>(i)});
        Rng grow_rng = make_rng({ev, kGrow});
        ExpressionTree cand =
            mutate(pop.members[i].tree, params.library, grow_rng, params.mutate_depth);
        if (node_count(cand) > params.max_nodes) return;  // reject, keep parent
        candidates[i] = std::move(cand);
        mutated[i] = 1;
      });
      parallel_for(n, ctx.threads, [&](int i) {
        if (!mutated[i]) return;
        pop.members[i].tree = std::move(candidates[i]);
        refit_member(pop.members[i], ctx,
                     mix_seed({gen_seed, kMutEvent, static_cast<uint64_t>(i)}));
      });
      for (int i = 0; i < n; ++i)
        if (mutated[i]) pop.members[i].birth = pop.next_birth++;
    }

    // mating pass (Lines 12-19): adjacent pairs after a shuffle
    {
      Rng pair_rng = make_rng({gen_seed, kMatePair});
      std::vector<int> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), pair_rng);
      const int num_pairs = n / 2;
      std::vector<char> paired(num_pairs, 0);
      for (int p = 0; p < num_pairs; ++p) paired[p] = unit(pair_rng) < params.p_mate;

      std::vector<char> replaced(n, 0);
      parallel_for(num_pairs, ctx.threads, [&](int p) {
        if (!paired[p]) return;
        int i = perm[2 * p], j = perm[2 * p + 1];
        uint64_t ev = mix_seed({gen_seed, kMateEvent, static_cast<uint64_t>(p)});
        Rng cross_rng = make_rng({ev, kGrow});
        auto [c1, c2] = mate(pop.members[i].tree, pop.members[j].tree, cross_rng);
        bool ok1 = node_count(c1) <= params.max_nodes;
        bool ok2 = node_count(c2) <= params.max_nodes;
        if (!ok1 && !ok2) return;
        if (ok1) {
          pop.members[i].tree = std::move(c1);
          refit_member(pop.members[i], ctx, mix_seed({ev, 1}));
          replaced[i] = 1;
        }
        if (ok2) {
          pop.members[j].tree = std::move(c2);
          refit_member(pop.members[j], ctx, mix_seed({ev, 2}));
          replaced[j] = 1;
        }
      });
      for (int i = 0; i < n; ++i)
        if (replaced[i]) pop.members[i].birth = pop.next_birth++;
    }

    // hall-of-fame update (Line 20) and selection (Line 21)
    for (const Member& m : pop.members) hof_insert(pop, m, params.hof_size);
    Rng select_rng = make_rng({gen_seed, kSelect});
    pop.members = selection(std::move(pop.members), params.pool_size, select_rng);

    if (observer) observer(gen, pop);
  }
}

}  // namespace cvgp
