// Exact search-space cardinalities for all-binary expression trees, plus the
// brute-force enumerator serving as the counting oracle.
#pragma once

#include <functional>

#include <boost/multiprecision/cpp_int.hpp>

#include "cvgp/expr.hpp"

namespace cvgp {

using BigInt = boost::multiprecision::cpp_int;

BigInt binomial(int n, int k);
BigInt catalan(int k);

struct SpaceCount {
  int l = 0;   // node count (odd)
  int m = 0;   // number of variables
  int o = 0;   // number of binary operators
  BigInt a_l;  // trees with exactly l nodes
  BigInt s_l;  // trees with at most l nodes
};

/// A(l) = C_{(l-1)/2} (m+1)^{(l+1)/2} o^{(l-1)/2} and the cumulative S(l).
/// l must be odd (all-binary operator model).
SpaceCount count_exact(int l, int m, int o);

/// Emits every distinct tree with at most l nodes exactly once, in
/// node-count order (sizes 1, 3, 5, ...). Constants appear as one abstract
/// const leaf. Guarded: throws when S(l) exceeds 10^7.
void enumerate_all(int l, int m, int o,
                   const std::function<void(const ExpressionTree&)>& emit);

}  // namespace cvgp
