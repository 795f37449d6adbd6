#include "cvgp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cvgp/fitting.hpp"

namespace cvgp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr uint64_t kRefitData = 31;
constexpr uint64_t kRefitRun = 32;
constexpr uint64_t kCompare = 33;
constexpr int kComparePoints = 100;
constexpr double kCompareTol = 1e-6;
constexpr double kConstTol = 1e-6;
}  // namespace

MetricReport compute_metrics(std::span<const double> pred, std::span<const double> y) {
  if (pred.size() != y.size())
    throw std::invalid_argument("compute_metrics: length mismatch");
  const size_t n = y.size();
  if (n < 2) throw std::invalid_argument("compute_metrics: need at least 2 samples");

  double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= n;  // biased variance, exactly as defined
  if (var == 0.0) throw std::invalid_argument("compute_metrics: degenerate targets");

  double mse = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double d = y[i] - pred[i];
    mse += d * d;
  }
  mse /= n;

  MetricReport r;
  r.n = static_cast<int>(n);
  r.sigma_y = std::sqrt(var);
  r.mse = mse;
  r.neg_mse = -mse;
  r.nmse = mse / var;
  r.rmse = std::sqrt(mse);
  r.nrmse = r.rmse / r.sigma_y;
  r.inv_nrmse = r.nrmse > 0 ? 1.0 / r.nrmse : kInf;
  return r;
}

double reward_inv_nrmse(const MetricReport& report) {
  return 1.0 / (1.0 + report.nrmse);
}

QuantileSummary summarize_quantiles(std::vector<double> values) {
  if (values.empty())
    throw std::invalid_argument("summarize_quantiles: empty input");
  std::sort(values.begin(), values.end());
  auto at = [&](double q) {
    double h = q * (values.size() - 1);
    size_t lo = static_cast<size_t>(h);
    size_t hi = std::min(lo + 1, values.size() - 1);
    double frac = h - lo;
    return values[lo] + frac * (values[hi] - values[lo]);
  };
  return {values.front(), at(0.25), at(0.5), at(0.75), values.back()};
}

// -- recovery ----------------------------------------------------------------

namespace {

// n-ary view used only for comparison
struct NormNode {
  Node::Kind kind;
  Op op{};
  int var = 0;
  double value = 0.0;
  std::vector<NormNode> kids;
  std::string shape;  // serialization with constant values elided
};

double fold_op(Op op, const std::vector<double>& args) {
  switch (op) {
    case Op::Add: return args[0] + args[1];
    case Op::Sub: return args[0] - args[1];
    case Op::Mul: return args[0] * args[1];
    case Op::Inv: return std::isfinite(args[0]) ? 1.0 / args[0] : kInf;
    case Op::Sin: return std::sin(args[0]);
    case Op::Cos: return std::cos(args[0]);
  }
  return kInf;
}

std::string shape_key(const NormNode& n) {
  switch (n.kind) {
    case Node::Kind::Variable: return "x" + std::to_string(n.var);
    case Node::Kind::Constant: return "C";
    case Node::Kind::Operator: {
      std::string s = "(" + std::string(op_spec(n.op).name);
      for (const auto& k : n.kids) s += " " + k.shape;
      return s + ")";
    }
  }
  return "?";
}

NormNode normalize_rec(const Node* node) {
  NormNode out;
  out.kind = node->kind;
  switch (node->kind) {
    case Node::Kind::Variable:
      out.var = node->var;
      break;
    case Node::Kind::Constant:
      out.value = node->value;
      break;
    case Node::Kind::Operator: {
      out.op = node->op;
      std::vector<NormNode> kids;
      for (int i = 0; i < node->arity(); ++i)
        kids.push_back(normalize_rec(node->child[i].get()));

      // constant folding
      bool all_const = std::all_of(kids.begin(), kids.end(), [](const NormNode& k) {
        return k.kind == Node::Kind::Constant;
      });
      if (all_const) {
        std::vector<double> args;
        for (const auto& k : kids) args.push_back(k.value);
        double v = fold_op(node->op, args);
        if (std::isfinite(v)) {
          out.kind = Node::Kind::Constant;
          out.value = v;
          out.shape = shape_key(out);
          return out;
        }
      }

      if (node->op == Op::Add || node->op == Op::Mul) {
        // flatten same-op chains, merge constant operands, sort
        std::vector<NormNode> flat;
        double folded = node->op == Op::Add ? 0.0 : 1.0;
        bool have_const = false;
        for (auto& k : kids) {
          if (k.kind == Node::Kind::Operator && k.op == node->op) {
            for (auto& g : k.kids) {
              if (g.kind == Node::Kind::Constant) {
                folded = node->op == Op::Add ? folded + g.value : folded * g.value;
                have_const = true;
              } else {
                flat.push_back(std::move(g));
              }
            }
          } else if (k.kind == Node::Kind::Constant) {
            folded = node->op == Op::Add ? folded + k.value : folded * k.value;
            have_const = true;
          } else {
            flat.push_back(std::move(k));
          }
        }
        if (have_const) {
          NormNode c;
          c.kind = Node::Kind::Constant;
          c.value = folded;
          c.shape = "C";
          flat.push_back(std::move(c));
        }
        std::sort(flat.begin(), flat.end(), [](const NormNode& a, const NormNode& b) {
          if (a.shape != b.shape) return a.shape < b.shape;
          if (a.kind == Node::Kind::Constant && b.kind == Node::Kind::Constant)
            return a.value < b.value;
          return false;
        });
        out.kids = std::move(flat);
      } else {
        out.kids = std::move(kids);
      }
      break;
    }
  }
  out.shape = shape_key(out);
  return out;
}

bool norm_equal(const NormNode& a, const NormNode& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Node::Kind::Variable:
      return a.var == b.var;
    case Node::Kind::Constant:
      return std::fabs(a.value - b.value) <=
             kConstTol * (1.0 + std::max(std::fabs(a.value), std::fabs(b.value)));
    case Node::Kind::Operator: {
      if (a.op != b.op || a.kids.size() != b.kids.size()) return false;
      for (size_t i = 0; i < a.kids.size(); ++i)
        if (!norm_equal(a.kids[i], b.kids[i])) return false;
      return true;
    }
  }
  return false;
}

}  // namespace

bool recovered(const ExpressionTree& candidate, const ExpressionTree& truth,
               const SampleRange& domain, uint64_t seed) {
  if (candidate.empty() || truth.empty())
    throw std::invalid_argument("recovered: empty expression");

  if (norm_equal(normalize_rec(candidate.root()), normalize_rec(truth.root())))
    return true;

  const int m = std::max({1, max_var_index(candidate) + 1, max_var_index(truth) + 1});

  // numerical path: re-fit every candidate constant on noiseless truth
  // samples, then compare pointwise over the domain
  ExpressionTree cand = candidate;
  bool has_consts = false;
  for_each_node(cand, [&](Node& n) {
    if (n.is_const()) {
      n.status = SlotStatus::Open;
      n.frozen = false;
      has_consts = true;
    }
  });

  DataOracle noiseless(truth, m, 0.0, domain, mix_seed({seed, kRefitData}));
  if (has_consts) {
    try {
      TrialBatch fit_batch = make_trial(noiseless, VariablePartition::all_free(m), {},
                                        256, mix_seed({seed, kRefitRun}));
      FitterConfig cfg;
      auto outcome = fit_constants(cand, fit_batch, cfg, mix_seed({seed, kRefitRun, 1}));
      auto slots = open_constants(cand);
      if (outcome.constants.size() == slots.size())
        for (size_t i = 0; i < slots.size(); ++i) slots[i]->value = outcome.constants[i];
    } catch (const OracleError&) {
      return false;  // could not draw comparison data off the truth's singularities
    }
  }

  Rng rng = make_rng({seed, kCompare});
  std::vector<double> point(m);
  int checked = 0, guard = 0;
  while (checked < kComparePoints) {
    if (++guard > 100 * kComparePoints) return false;
    for (int v = 0; v < m; ++v) point[v] = domain.draw(rng);
    double t = evaluate(truth, point);
    if (!std::isfinite(t)) continue;  // off the truth's domain, resample
    double c = evaluate(cand, point);
    if (!std::isfinite(c)) return false;
    if (std::fabs(c - t) > kCompareTol * (1.0 + std::fabs(t))) return false;
    ++checked;
  }
  return true;
}

}  // namespace cvgp
