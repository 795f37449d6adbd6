#include "cvgp/expr.hpp"

#include <atomic>
#include <cassert>
#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>

namespace cvgp {

namespace {

constexpr OperatorSpec kOps[] = {
    {Op::Add, "+", 2}, {Op::Sub, "-", 2}, {Op::Mul, "*", 2},
    {Op::Inv, "inv", 1}, {Op::Sin, "sin", 1}, {Op::Cos, "cos", 1},
};

std::atomic<uint64_t> g_tag_counter{1};

}  // namespace

const OperatorSpec& op_spec(Op op) { return kOps[static_cast<int>(op)]; }

std::optional<Op> op_from_name(std::string_view name) {
  for (const auto& s : kOps)
    if (name == s.name) return s.op;
  return std::nullopt;
}

uint64_t detail::fresh_tag() {
  return g_tag_counter.fetch_add(1, std::memory_order_relaxed);
}

NodePtr Node::make_op(Op op, NodePtr a, NodePtr b) {
  auto n = std::make_unique<Node>();
  n->kind = Kind::Operator;
  n->op = op;
  n->tag = detail::fresh_tag();
  n->child[0] = std::move(a);
  n->child[1] = std::move(b);
  assert((op_arity(op) == 2) == (n->child[1] != nullptr));
  return n;
}

NodePtr Node::make_var(int index) {
  assert(index >= 0);
  auto n = std::make_unique<Node>();
  n->kind = Kind::Variable;
  n->var = index;
  n->tag = detail::fresh_tag();
  return n;
}

NodePtr Node::make_const(double value, SlotStatus status) {
  auto n = std::make_unique<Node>();
  n->kind = Kind::Constant;
  n->value = value;
  n->status = status;
  n->frozen = (status == SlotStatus::FrozenStandalone);
  n->tag = detail::fresh_tag();
  return n;
}

NodePtr Node::clone() const {
  auto n = std::make_unique<Node>();
  n->kind = kind;
  n->op = op;
  n->var = var;
  n->value = value;
  n->status = status;
  n->frozen = frozen;
  n->tag = tag;
  if (child[0]) n->child[0] = child[0]->clone();
  if (child[1]) n->child[1] = child[1]->clone();
  return n;
}

// -- traversal ---------------------------------------------------------------

namespace {

template <typename NodeT, typename Fn>
void walk(NodeT* n, Fn&& fn) {
  if (!n) return;
  fn(*n);
  walk(n->child[0].get(), fn);
  walk(n->child[1].get(), fn);
}

void collect_links_rec(NodePtr& link, const std::function<bool(const Node&)>& pred,
                       std::vector<NodePtr*>& out) {
  if (!link) return;
  if (pred(*link)) out.push_back(&link);
  collect_links_rec(link->child[0], pred, out);
  collect_links_rec(link->child[1], pred, out);
}

}  // namespace

void for_each_node(const ExpressionTree& t, const std::function<void(const Node&)>& fn) {
  walk(t.root(), fn);
}

void for_each_node(ExpressionTree& t, const std::function<void(Node&)>& fn) {
  walk(t.root(), fn);
}

std::vector<NodePtr*> collect_links(ExpressionTree& t,
                                    const std::function<bool(const Node&)>& pred) {
  std::vector<NodePtr*> out;
  collect_links_rec(t.root_link(), pred, out);
  return out;
}

int node_count(const ExpressionTree& t) {
  int n = 0;
  for_each_node(t, [&](const Node&) { ++n; });
  return n;
}

namespace {
int depth_rec(const Node* n) {
  if (!n) return 0;
  return 1 + std::max(depth_rec(n->child[0].get()), depth_rec(n->child[1].get()));
}
}  // namespace

int depth(const ExpressionTree& t) { return depth_rec(t.root()); }

int max_var_index(const ExpressionTree& t) {
  int mx = -1;
  for_each_node(t, [&](const Node& n) {
    if (n.kind == Node::Kind::Variable) mx = std::max(mx, n.var);
  });
  return mx;
}

std::vector<Node*> open_constants(ExpressionTree& t) {
  std::vector<Node*> out;
  for_each_node(t, [&](Node& n) {
    if (n.fittable()) out.push_back(&n);
  });
  return out;
}

std::vector<const Node*> open_constants(const ExpressionTree& t) {
  std::vector<const Node*> out;
  for_each_node(t, [&](const Node& n) {
    if (n.fittable()) out.push_back(&n);
  });
  return out;
}

void freeze_structure(ExpressionTree& t) {
  for_each_node(t, [](Node& n) {
    if (n.kind != Node::Kind::Constant) n.frozen = true;
  });
}

namespace {
bool nodes_equal(const Node* a, const Node* b) {
  if (!a || !b) return a == b;
  if (a->kind != b->kind || a->frozen != b->frozen) return false;
  switch (a->kind) {
    case Node::Kind::Operator:
      if (a->op != b->op) return false;
      break;
    case Node::Kind::Variable:
      if (a->var != b->var) return false;
      break;
    case Node::Kind::Constant:
      if (a->status != b->status) return false;
      // bit-level comparison so that NaN-valued slots still compare equal
      if (std::memcmp(&a->value, &b->value, sizeof(double)) != 0) return false;
      break;
  }
  return nodes_equal(a->child[0].get(), b->child[0].get()) &&
         nodes_equal(a->child[1].get(), b->child[1].get());
}
}  // namespace

bool structurally_equal(const ExpressionTree& a, const ExpressionTree& b) {
  return nodes_equal(a.root(), b.root());
}

// -- evaluation --------------------------------------------------------------

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double apply_unary(Op op, double a) {
  switch (op) {
    case Op::Inv:
      // keep non-finite inputs non-finite; IEEE would give inv(inf) == 0
      return std::isfinite(a) ? 1.0 / a : kNaN;
    case Op::Sin:
      return std::sin(a);
    case Op::Cos:
      return std::cos(a);
    default:
      return kNaN;
  }
}

double eval_rec(const Node* n, std::span<const double> point) {
  switch (n->kind) {
    case Node::Kind::Variable:
      if (n->var < 0 || static_cast<size_t>(n->var) >= point.size())
        throw std::invalid_argument("evaluation point shorter than variable index");
      return point[n->var];
    case Node::Kind::Constant:
      return n->value;
    case Node::Kind::Operator: {
      double a = eval_rec(n->child[0].get(), point);
      if (op_arity(n->op) == 1) return apply_unary(n->op, a);
      double b = eval_rec(n->child[1].get(), point);
      switch (n->op) {
        case Op::Add: return a + b;
        case Op::Sub: return a - b;
        case Op::Mul: return a * b;
        default: return kNaN;
      }
    }
  }
  return kNaN;
}

}  // namespace

double evaluate(const ExpressionTree& t, std::span<const double> point) {
  if (t.empty()) throw std::invalid_argument("evaluate: empty tree");
  return eval_rec(t.root(), point);
}

EvalProgram::EvalProgram(const ExpressionTree& t) {
  if (t.empty()) throw std::invalid_argument("EvalProgram: empty tree");

  // Pre-order pass fixes slot ordinals to match open_constants.
  std::vector<const Node*> slots;
  for_each_node(t, [&](const Node& n) {
    if (n.fittable()) slots.push_back(&n);
  });

  int stack = 0;
  std::function<void(const Node*)> emit = [&](const Node* n) {
    switch (n->kind) {
      case Node::Kind::Variable:
        code_.push_back({kLoadVar, n->var});
        num_vars_ = std::max(num_vars_, n->var + 1);
        ++stack;
        break;
      case Node::Kind::Constant: {
        int idx = static_cast<int>(consts_.size());
        consts_.push_back(n->value);
        if (n->fittable()) {
          auto it = std::find(slots.begin(), slots.end(), n);
          assert(it != slots.end());
          size_t ord = static_cast<size_t>(it - slots.begin());
          if (slot_to_const_.size() <= ord) slot_to_const_.resize(ord + 1, -1);
          slot_to_const_[ord] = idx;
        }
        code_.push_back({kLoadConst, idx});
        ++stack;
        break;
      }
      case Node::Kind::Operator:
        emit(n->child[0].get());
        if (n->child[1]) emit(n->child[1].get());
        code_.push_back({static_cast<uint8_t>(n->op), 0});
        stack -= n->arity() - 1;
        break;
    }
    max_stack_ = std::max(max_stack_, stack);
  };
  emit(t.root());
  stack_.resize(max_stack_);
}

void EvalProgram::set_slots(std::span<const double> vs) {
  assert(static_cast<int>(vs.size()) == num_slots());
  for (size_t i = 0; i < vs.size(); ++i) consts_[slot_to_const_[i]] = vs[i];
}

void EvalProgram::run(const std::vector<std::vector<double>>& cols,
                      std::span<double> out) {
  const size_t n = out.size();
  for (auto& buf : stack_) buf.resize(n);
  int sp = 0;
  for (const Instr& ins : code_) {
    switch (ins.code) {
      case kLoadVar: {
        const std::vector<double>& src = cols[ins.arg];
        std::copy(src.begin(), src.begin() + n, stack_[sp].begin());
        ++sp;
        break;
      }
      case kLoadConst:
        std::fill(stack_[sp].begin(), stack_[sp].end(), consts_[ins.arg]);
        ++sp;
        break;
      default: {
        Op op = static_cast<Op>(ins.code);
        if (op_arity(op) == 1) {
          double* a = stack_[sp - 1].data();
          switch (op) {
            case Op::Inv:
              for (size_t i = 0; i < n; ++i) a[i] = std::isfinite(a[i]) ? 1.0 / a[i] : kNaN;
              break;
            case Op::Sin:
              for (size_t i = 0; i < n; ++i) a[i] = std::sin(a[i]);
              break;
            default:
              for (size_t i = 0; i < n; ++i) a[i] = std::cos(a[i]);
              break;
          }
        } else {
          double* a = stack_[sp - 2].data();
          const double* b = stack_[sp - 1].data();
          switch (op) {
            case Op::Add:
              for (size_t i = 0; i < n; ++i) a[i] += b[i];
              break;
            case Op::Sub:
              for (size_t i = 0; i < n; ++i) a[i] -= b[i];
              break;
            default:
              for (size_t i = 0; i < n; ++i) a[i] *= b[i];
              break;
          }
          --sp;
        }
        break;
      }
    }
  }
  assert(sp == 1);
  std::copy(stack_[0].begin(), stack_[0].end(), out.begin());
}

// -- text format -------------------------------------------------------------

std::string detail::format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

ParseError::ParseError(const std::string& msg, size_t off)
    : std::runtime_error(msg + " (offset " + std::to_string(off) + ")"), offset(off) {}

namespace {

const char* status_name(SlotStatus s) {
  switch (s) {
    case SlotStatus::Open: return "open";
    case SlotStatus::FrozenStandalone: return "frozen";
    case SlotStatus::ExpandableSummary: return "summary";
  }
  return "?";
}

std::optional<SlotStatus> status_from_name(std::string_view s) {
  if (s == "open") return SlotStatus::Open;
  if (s == "frozen") return SlotStatus::FrozenStandalone;
  if (s == "summary") return SlotStatus::ExpandableSummary;
  return std::nullopt;
}

void serialize_rec(const Node* n, std::string& out) {
  switch (n->kind) {
    case Node::Kind::Variable:
      out += 'x';
      out += std::to_string(n->var + 1);
      if (n->frozen) out += '!';
      break;
    case Node::Kind::Constant:
      out += "C<";
      out += detail::format_double(n->value);
      out += ',';
      out += status_name(n->status);
      out += '>';
      break;
    case Node::Kind::Operator:
      out += '(';
      out += op_spec(n->op).name;
      if (n->frozen) out += '!';
      for (int i = 0; i < n->arity(); ++i) {
        out += ' ';
        serialize_rec(n->child[i].get(), out);
      }
      out += ')';
      break;
  }
}

struct Cursor {
  std::string_view s;
  size_t pos = 0;

  void skip_ws() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t' || s[pos] == '\n' || s[pos] == '\r'))
      ++pos;
  }
  bool eof() const { return pos >= s.size(); }
  char peek() const { return s[pos]; }

  std::string_view atom() {
    size_t start = pos;
    while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])) &&
           s[pos] != '(' && s[pos] != ')')
      ++pos;
    return s.substr(start, pos - start);
  }
};

bool parse_full_double(std::string_view sv, double& out) {
  const char* first = sv.data();
  const char* last = sv.data() + sv.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc{} && res.ptr == last;
}

NodePtr parse_leaf(std::string_view tok, size_t at) {
  if (tok.rfind("C<", 0) == 0) {
    if (tok.back() != '>') throw ParseError("unterminated constant", at);
    std::string_view body = tok.substr(2, tok.size() - 3);
    size_t comma = body.rfind(',');
    if (comma == std::string_view::npos)
      throw ParseError("constant must be C<value,status>", at);
    double v;
    if (!parse_full_double(body.substr(0, comma), v))
      throw ParseError("bad constant value", at);
    auto st = status_from_name(body.substr(comma + 1));
    if (!st) throw ParseError("unknown constant status", at);
    return Node::make_const(v, *st);
  }
  if (tok.size() >= 2 && tok[0] == 'x' && std::isdigit(static_cast<unsigned char>(tok[1]))) {
    bool frozen = tok.back() == '!';
    std::string_view digits = tok.substr(1, tok.size() - 1 - (frozen ? 1 : 0));
    int idx = 0;
    auto res = std::from_chars(digits.data(), digits.data() + digits.size(), idx);
    if (res.ec != std::errc{} || res.ptr != digits.data() + digits.size())
      throw ParseError("bad variable index", at);
    if (idx < 1) throw ParseError("variable indices are 1-based", at);
    auto n = Node::make_var(idx - 1);
    n->frozen = frozen;
    return n;
  }
  double v;
  if (parse_full_double(tok, v)) return Node::make_const(v, SlotStatus::FrozenStandalone);
  throw ParseError("unexpected token '" + std::string(tok) + "'", at);
}

NodePtr parse_expr(Cursor& c) {
  c.skip_ws();
  if (c.eof()) throw ParseError("unexpected end of input", c.pos);
  if (c.peek() == ')') throw ParseError("unexpected ')'", c.pos);
  if (c.peek() == '(') {
    ++c.pos;
    c.skip_ws();
    size_t at = c.pos;
    std::string_view tok = c.atom();
    if (tok.empty()) throw ParseError("expected operator", at);
    bool frozen = tok.back() == '!';
    std::string_view name = frozen ? tok.substr(0, tok.size() - 1) : tok;
    auto op = op_from_name(name);
    if (!op) throw ParseError("unknown operator '" + std::string(name) + "'", at);
    NodePtr a = parse_expr(c);
    NodePtr b;
    if (op_arity(*op) == 2) b = parse_expr(c);
    c.skip_ws();
    if (c.eof() || c.peek() != ')') throw ParseError("expected ')'", c.pos);
    ++c.pos;
    auto n = Node::make_op(*op, std::move(a), std::move(b));
    n->frozen = frozen;
    return n;
  }
  size_t at = c.pos;
  std::string_view tok = c.atom();
  return parse_leaf(tok, at);
}

}  // namespace

std::string serialize(const ExpressionTree& t) {
  if (t.empty()) throw std::invalid_argument("serialize: empty tree");
  std::string out;
  serialize_rec(t.root(), out);
  return out;
}

ExpressionTree parse(std::string_view text) {
  Cursor c{text};
  NodePtr root = parse_expr(c);
  c.skip_ws();
  if (!c.eof()) throw ParseError("trailing input", c.pos);
  return ExpressionTree(std::move(root));
}

}  // namespace cvgp
