#pragma once

#include <Eigen/Dense>

namespace mcqn {

// Solve w = M z + q, w >= 0, z >= 0, <w, z> = 0.  Lemke pivoting with a unit
// covering vector; a projected Gauss-Seidel sweep is the fallback when
// pivoting ray-terminates or cycles (convergent for the M-matrix and
// positive-definite cases that arise as reflection matrices here).
struct lcp_result {
  Eigen::VectorXd z, w;
  bool ok = false;
  double complementarity = 0;  // max_i |z_i w_i|
};

[[nodiscard]] lcp_result solve_lcp(const Eigen::MatrixXd& M, const Eigen::VectorXd& q);

}  // namespace mcqn
