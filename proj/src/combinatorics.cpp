#include "cvgp/combinatorics.hpp"

#include <stdexcept>

namespace cvgp {

namespace {

constexpr int64_t kEnumerationGuard = 10'000'000;

// The three binary operators of the tree model; o selects a prefix.
constexpr Op kBinaryOps[] = {Op::Add, Op::Sub, Op::Mul};

void check_lmo(int l, int m, int o) {
  if (l < 1 || l % 2 == 0)
    throw std::invalid_argument("node count l must be odd and positive");
  if (m < 0) throw std::invalid_argument("m must be nonnegative");
  if (o < 1) throw std::invalid_argument("o must be positive");
}

}  // namespace

BigInt binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  BigInt num = 1;
  for (int i = 0; i < k; ++i) {
    num *= n - i;
    num /= i + 1;  // exact at every step: product of j consecutive ints is divisible by j!
  }
  return num;
}

BigInt catalan(int k) {
  if (k < 0) throw std::invalid_argument("catalan: negative argument");
  return binomial(2 * k, k) / (k + 1);
}

SpaceCount count_exact(int l, int m, int o) {
  check_lmo(l, m, o);
  SpaceCount out;
  out.l = l;
  out.m = m;
  out.o = o;
  BigInt cumulative = 0;
  for (int size = 1; size <= l; size += 2) {
    int internal = (size - 1) / 2;
    int leaves = (size + 1) / 2;
    BigInt a = catalan(internal) * boost::multiprecision::pow(BigInt(m + 1), leaves) *
               boost::multiprecision::pow(BigInt(o), internal);
    cumulative += a;
    if (size == l) out.a_l = a;
  }
  out.s_l = cumulative;
  return out;
}

namespace {

// Enumerates every tree with exactly `size` nodes, invoking emit on each.
// Trees are rebuilt bottom-up through the continuations, so no size class is
// ever materialized in memory.
void enum_exact(int size, int m, int o,
                const std::function<void(NodePtr)>& emit) {
  if (size == 1) {
    emit(Node::make_const(0.0, SlotStatus::Open));
    for (int v = 0; v < m; ++v) emit(Node::make_var(v));
    return;
  }
  for (int left = 1; left <= size - 2; left += 2) {
    int right = size - 1 - left;
    enum_exact(left, m, o, [&](NodePtr lhs) {
      // the left subtree is cloned per (op, right) combination
      enum_exact(right, m, o, [&](NodePtr rhs) {
        for (int k = 0; k < o; ++k)
          emit(Node::make_op(kBinaryOps[k], lhs->clone(), rhs->clone()));
      });
    });
  }
}

}  // namespace

void enumerate_all(int l, int m, int o,
                   const std::function<void(const ExpressionTree&)>& emit) {
  check_lmo(l, m, o);
  if (o > 3)
    throw std::invalid_argument("enumeration supports at most 3 binary operators");
  SpaceCount total = count_exact(l, m, o);
  if (total.s_l > kEnumerationGuard)
    throw std::invalid_argument("enumeration guard exceeded (S(l) > 1e7)");
  for (int size = 1; size <= l; size += 2)
    enum_exact(size, m, o, [&](NodePtr n) { emit(ExpressionTree(std::move(n))); });
}

}  // namespace cvgp
