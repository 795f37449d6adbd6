// Random ground-truth generator for the (a, b, c) benchmark families:
// a variables, b coefficient-scaled singular terms, c cross terms, plus one
// additive constant.
#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "cvgp/expr.hpp"

namespace cvgp {

struct BenchmarkConfig {
  std::vector<Op> operand_set;
  int a = 1;           // number of independent variables
  int b = 1;           // singular terms
  int c = 0;           // cross terms
  double sigma = 0.0;  // noise level recorded for the oracle
  uint64_t seed = 0;
};

/// Generated truths are sums in a fixed normal form: cross terms, then
/// singular terms, then the additive constant; every coefficient magnitude
/// lies in [0.05, 1) and all a variables appear at least once.
ExpressionTree gen_truth(const BenchmarkConfig& config);

struct TermCensus {
  int singular = 0;
  int cross = 0;
  std::set<int> variables;  // 0-based
};

/// Counts terms of an expression in generator normal form; throws on
/// anything else.
TermCensus term_census(const ExpressionTree& expr);

}  // namespace cvgp
