#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mcqn {

// minimize cᵀx subject to row relations (A x <= / = / >= rhs) and finite box
// bounds lo <= x <= hi.  Dense two-phase tableau simplex with an anti-cycling
// fallback; intended for the small structured programs built by the matrix
// checkers, not for large-scale use.
struct lp_problem {
  Eigen::VectorXd c;
  Eigen::MatrixXd A;          // m×n, may have zero rows
  Eigen::VectorXd rhs;        // m
  std::vector<int> relation;  // per row: -1 (<=), 0 (=), +1 (>=)
  Eigen::VectorXd lo, hi;     // n, finite
};

enum class lp_status { optimal, infeasible, unbounded, stalled };

struct lp_result {
  lp_status status = lp_status::stalled;
  double objective = 0;
  Eigen::VectorXd x;
};

[[nodiscard]] lp_result lp_solve(const lp_problem& p);

}  // namespace mcqn
