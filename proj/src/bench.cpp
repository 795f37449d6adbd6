#include "cvgp/bench.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "cvgp/rng.hpp"

namespace cvgp {

namespace {

constexpr double kCoeffDeadZone = 0.05;
constexpr int kCoverageAttempts = 10000;

struct Factor {
  int var = 0;
  std::optional<Op> unary;
};

double draw_coefficient(Rng& rng) {
  for (;;) {
    double v = uniform(rng, -1.0, 1.0);
    if (std::fabs(v) >= kCoeffDeadZone) return v;
  }
}

NodePtr factor_node(const Factor& f) {
  NodePtr v = Node::make_var(f.var);
  return f.unary ? Node::make_op(*f.unary, std::move(v)) : std::move(v);
}

void validate(const BenchmarkConfig& cfg) {
  if (cfg.a < 1) throw std::invalid_argument("bench: a must be >= 1");
  if (cfg.b < 0 || cfg.c < 0) throw std::invalid_argument("bench: b, c must be >= 0");
  if (cfg.b + cfg.c < 1) throw std::invalid_argument("bench: need at least one term");
  if (cfg.b + 2 * cfg.c < cfg.a)
    throw std::invalid_argument("bench: b + 2c < a cannot cover every variable");
  auto has = [&](Op op) {
    return std::find(cfg.operand_set.begin(), cfg.operand_set.end(), op) !=
           cfg.operand_set.end();
  };
  if (!has(Op::Add) || !has(Op::Mul))
    throw std::invalid_argument("bench: operand set must contain + and *");
}

}  // namespace

ExpressionTree gen_truth(const BenchmarkConfig& cfg) {
  validate(cfg);
  Rng rng = make_rng({cfg.seed});

  std::vector<Op> unaries;
  for (Op op : cfg.operand_set)
    if (op_arity(op) == 1) unaries.push_back(op);

  auto draw_factor = [&](std::optional<int> exclude) {
    Factor f;
    do {
      f.var = std::uniform_int_distribution<int>(0, cfg.a - 1)(rng);
    } while (cfg.a >= 2 && exclude && f.var == *exclude);
    if (!unaries.empty() && unit(rng) < 0.5)
      f.unary = unaries[std::uniform_int_distribution<size_t>(0, unaries.size() - 1)(rng)];
    return f;
  };

  // draw term shapes until every variable is covered
  std::vector<Factor> singles;
  std::vector<std::pair<Factor, Factor>> crosses;
  bool covered = false;
  for (int attempt = 0; attempt < kCoverageAttempts && !covered; ++attempt) {
    singles.clear();
    crosses.clear();
    std::vector<char> seen(cfg.a, 0);
    for (int i = 0; i < cfg.b; ++i) {
      singles.push_back(draw_factor(std::nullopt));
      seen[singles.back().var] = 1;
    }
    for (int i = 0; i < cfg.c; ++i) {
      Factor f1 = draw_factor(std::nullopt);
      Factor f2 = draw_factor(f1.var);
      seen[f1.var] = seen[f2.var] = 1;
      crosses.emplace_back(f1, f2);
    }
    covered = std::all_of(seen.begin(), seen.end(), [](char s) { return s != 0; });
  }
  if (!covered)
    throw std::runtime_error("bench: failed to cover every variable");

  std::vector<NodePtr> terms;
  for (const auto& [f1, f2] : crosses) {
    NodePtr product = Node::make_op(Op::Mul, factor_node(f1), factor_node(f2));
    terms.push_back(Node::make_op(
        Op::Mul, Node::make_const(draw_coefficient(rng), SlotStatus::FrozenStandalone),
        std::move(product)));
  }
  for (const Factor& f : singles)
    terms.push_back(Node::make_op(
        Op::Mul, Node::make_const(draw_coefficient(rng), SlotStatus::FrozenStandalone),
        factor_node(f)));
  terms.push_back(Node::make_const(draw_coefficient(rng), SlotStatus::FrozenStandalone));

  NodePtr sum = std::move(terms[0]);
  for (size_t i = 1; i < terms.size(); ++i)
    sum = Node::make_op(Op::Add, std::move(sum), std::move(terms[i]));
  return ExpressionTree(std::move(sum));
}

namespace {

bool as_factor(const Node* n, std::set<int>& vars) {
  if (n->kind == Node::Kind::Variable) {
    vars.insert(n->var);
    return true;
  }
  if (n->kind == Node::Kind::Operator && n->arity() == 1 &&
      n->child[0]->kind == Node::Kind::Variable) {
    vars.insert(n->child[0]->var);
    return true;
  }
  return false;
}

void flatten_add(const Node* n, std::vector<const Node*>& terms) {
  if (n->kind == Node::Kind::Operator && n->op == Op::Add) {
    flatten_add(n->child[0].get(), terms);
    flatten_add(n->child[1].get(), terms);
  } else {
    terms.push_back(n);
  }
}

}  // namespace

TermCensus term_census(const ExpressionTree& expr) {
  if (expr.empty()) throw std::invalid_argument("term_census: empty expression");
  std::vector<const Node*> terms;
  flatten_add(expr.root(), terms);

  TermCensus census;
  int constants = 0;
  for (const Node* t : terms) {
    if (t->is_const()) {
      ++constants;
      continue;
    }
    if (t->kind != Node::Kind::Operator || t->op != Op::Mul || !t->child[0]->is_const())
      throw std::invalid_argument("term_census: term is not coefficient * factor(s)");
    const Node* body = t->child[1].get();
    if (as_factor(body, census.variables)) {
      ++census.singular;
    } else if (body->kind == Node::Kind::Operator && body->op == Op::Mul &&
               as_factor(body->child[0].get(), census.variables) &&
               as_factor(body->child[1].get(), census.variables)) {
      ++census.cross;
    } else {
      throw std::invalid_argument("term_census: unrecognized term shape");
    }
  }
  if (constants > 1)
    throw std::invalid_argument("term_census: multiple bare constants");
  return census;
}

}  // namespace cvgp
