// Symbolic expression trees: construction, evaluation, traversal, freezing
// and the canonical prefix text format.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cvgp {

enum class Op : uint8_t { Add, Sub, Mul, Inv, Sin, Cos };

struct OperatorSpec {
  Op op;
  const char* name;
  int arity;
};

const OperatorSpec& op_spec(Op op);
std::optional<Op> op_from_name(std::string_view name);
inline int op_arity(Op op) { return op_spec(op).arity; }

/// Lifecycle of a constant leaf. Open constants are fitted per trial;
/// summary slots stay fittable and are the leaves mutation may expand into
/// subtrees; frozen stand-alone constants never change again.
enum class SlotStatus : uint8_t { Open, FrozenStandalone, ExpandableSummary };

struct Node;
using NodePtr = std::unique_ptr<Node>;

struct Node {
  enum class Kind : uint8_t { Operator, Variable, Constant };

  Kind kind;
  Op op{Op::Add};            // Kind::Operator
  int var = 0;               // Kind::Variable, 0-based index
  double value = 0.0;        // Kind::Constant
  SlotStatus status = SlotStatus::Open;
  bool frozen = false;
  uint64_t tag = 0;          // stable identity, preserved by clone
  NodePtr child[2];          // child[1] unused for unary ops, both for leaves

  static NodePtr make_op(Op op, NodePtr a, NodePtr b = nullptr);
  static NodePtr make_var(int index);
  static NodePtr make_const(double value, SlotStatus status = SlotStatus::Open);

  NodePtr clone() const;
  int arity() const { return kind == Kind::Operator ? op_arity(op) : 0; }
  bool is_const() const { return kind == Kind::Constant; }
  bool fittable() const {
    return kind == Kind::Constant && status != SlotStatus::FrozenStandalone;
  }
};

/// Value-semantics expression tree; copying deep-clones.
class ExpressionTree {
 public:
  ExpressionTree() = default;
  explicit ExpressionTree(NodePtr root) : root_(std::move(root)) {}
  ExpressionTree(const ExpressionTree& other)
      : root_(other.root_ ? other.root_->clone() : nullptr) {}
  ExpressionTree& operator=(const ExpressionTree& other) {
    if (this != &other) root_ = other.root_ ? other.root_->clone() : nullptr;
    return *this;
  }
  ExpressionTree(ExpressionTree&&) noexcept = default;
  ExpressionTree& operator=(ExpressionTree&&) noexcept = default;

  bool empty() const { return !root_; }
  Node* root() { return root_.get(); }
  const Node* root() const { return root_.get(); }
  /// Owning link of the root; engine-side mutation hooks replace subtrees
  /// through owning links.
  NodePtr& root_link() { return root_; }

 private:
  NodePtr root_;
};

// -- traversal ---------------------------------------------------------------

void for_each_node(const ExpressionTree& t, const std::function<void(const Node&)>& fn);
void for_each_node(ExpressionTree& t, const std::function<void(Node&)>& fn);

/// Owning links of nodes satisfying `pred`, in pre-order (root link first).
std::vector<NodePtr*> collect_links(ExpressionTree& t,
                                    const std::function<bool(const Node&)>& pred);

int node_count(const ExpressionTree& t);
int depth(const ExpressionTree& t);  // single leaf has depth 1
int max_var_index(const ExpressionTree& t);  // -1 when no variables

/// Fittable constant slots (status open or expandable-summary) in pre-order,
/// so fitted-value vectors align across trials.
std::vector<Node*> open_constants(ExpressionTree& t);
std::vector<const Node*> open_constants(const ExpressionTree& t);

/// Marks every operator and variable node frozen. Constant slots are left to
/// freeze_equation, which owns their classification.
void freeze_structure(ExpressionTree& t);

bool structurally_equal(const ExpressionTree& a, const ExpressionTree& b);

// -- evaluation --------------------------------------------------------------

/// Total arithmetic evaluation: never traps, non-finite results are in-band.
/// A non-finite child makes the parent non-finite (inv guards against
/// inv(inf) collapsing back to a finite value).
double evaluate(const ExpressionTree& t, std::span<const double> point);

/// Post-order compiled form of a tree for batch evaluation; holds the
/// fittable slot values so a constant fitter can patch and re-run cheaply.
/// Slot ordinals follow open_constants order.
class EvalProgram {
 public:
  explicit EvalProgram(const ExpressionTree& t);

  int num_slots() const { return static_cast<int>(slot_to_const_.size()); }
  int num_vars() const { return num_vars_; }
  void set_slot(int slot, double v) { consts_[slot_to_const_[slot]] = v; }
  void set_slots(std::span<const double> vs);

  /// `cols` is column-major input data (cols[var][row]); writes one value per
  /// row into `out`.
  void run(const std::vector<std::vector<double>>& cols, std::span<double> out);

 private:
  struct Instr {
    uint8_t code;  // Op values, or kLoadVar / kLoadConst
    int32_t arg;
  };
  static constexpr uint8_t kLoadVar = 100;
  static constexpr uint8_t kLoadConst = 101;

  std::vector<Instr> code_;
  std::vector<double> consts_;
  std::vector<int> slot_to_const_;
  int num_vars_ = 0;
  int max_stack_ = 0;
  std::vector<std::vector<double>> stack_;
};

// -- text format -------------------------------------------------------------
//
// Canonical prefix notation:
//   expression := variable | constant | "(" op expression... ")"
//   variable   := "x" index ["!"]          index is 1-based; "!" marks frozen
//   op         := one of + - * inv sin cos, with optional "!" suffix
//   constant   := "C<" value "," status ">"   status: open | frozen | summary
// Bare numeric literals are accepted on input as frozen stand-alone
// constants; serialization always writes the annotated form.

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, size_t offset);
  size_t offset;
};

std::string serialize(const ExpressionTree& t);
ExpressionTree parse(std::string_view text);

namespace detail {
std::string format_double(double v);  // shortest round-trip form
uint64_t fresh_tag();
}  // namespace detail

}  // namespace cvgp
