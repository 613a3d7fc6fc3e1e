#include "mcqn/lcp.hpp"

#include <cmath>
#include <vector>

namespace mcqn {
namespace {

constexpr double kPivotEps = 1e-11;

lcp_result finish(const Eigen::MatrixXd& M, const Eigen::VectorXd& q, Eigen::VectorXd z) {
  lcp_result res;
  z = z.cwiseMax(0.0);
  res.z = std::move(z);
  res.w = M * res.z + q;
  res.complementarity = 0;
  bool feasible = true;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    res.complementarity = std::max(res.complementarity, std::abs(res.z[i] * res.w[i]));
    if (res.w[i] < -1e-9 || res.z[i] < 0) feasible = false;
  }
  res.ok = feasible && res.complementarity <= 1e-8 * std::max(1.0, q.cwiseAbs().maxCoeff());
  return res;
}

lcp_result lemke(const Eigen::MatrixXd& M, const Eigen::VectorXd& q) {
  const int n = static_cast<int>(q.size());
  if (q.minCoeff() >= 0) return finish(M, q, Eigen::VectorXd::Zero(n));

  // columns: w_0..w_{n-1}, z_0..z_{n-1}, z0, rhs
  Eigen::MatrixXd tab(n, 2 * n + 2);
  tab.leftCols(n) = Eigen::MatrixXd::Identity(n, n);
  tab.middleCols(n, n) = -M;
  tab.col(2 * n) = -Eigen::VectorXd::Ones(n);
  tab.col(2 * n + 1) = q;
  std::vector<int> basis(n);
  for (int i = 0; i < n; ++i) basis[i] = i;

  auto pivot = [&](int r, int c) {
    tab.row(r) /= tab(r, c);
    for (int i = 0; i < n; ++i)
      if (i != r && tab(i, c) != 0) tab.row(i) -= tab(i, c) * tab.row(r);
  };

  int r0 = 0;
  for (int i = 1; i < n; ++i)
    if (tab(i, 2 * n + 1) < tab(r0, 2 * n + 1)) r0 = i;
  pivot(r0, 2 * n);
  int leaving = basis[r0];
  basis[r0] = 2 * n;
  int entering = leaving < n ? leaving + n : leaving - n;

  for (int iter = 0; iter < 1000 * n + 1000; ++iter) {
    int row = -1;
    double best = 0;
    for (int i = 0; i < n; ++i) {
      const double piv = tab(i, entering);
      if (piv <= kPivotEps) continue;
      const double ratio = tab(i, 2 * n + 1) / piv;
      if (row < 0 || ratio < best - kPivotEps ||
          (ratio < best + kPivotEps &&
           (basis[i] == 2 * n || (basis[row] != 2 * n && basis[i] < basis[row])))) {
        row = i;
        best = ratio;
      }
    }
    if (row < 0) break;  // unbounded ray
    pivot(row, entering);
    leaving = basis[row];
    basis[row] = entering;
    if (leaving == 2 * n) {
      Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < n; ++i)
        if (basis[i] >= n && basis[i] < 2 * n) z[basis[i] - n] = tab(i, 2 * n + 1);
      return finish(M, q, std::move(z));
    }
    entering = leaving < n ? leaving + n : leaving - n;
  }
  lcp_result fail;
  fail.ok = false;
  return fail;
}

lcp_result gauss_seidel(const Eigen::MatrixXd& M, const Eigen::VectorXd& q) {
  const int n = static_cast<int>(q.size());
  for (int i = 0; i < n; ++i)
    if (!(M(i, i) > 0)) {
      lcp_result fail;
      return fail;
    }
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  for (int sweep = 0; sweep < 200000; ++sweep) {
    double change = 0;
    for (int i = 0; i < n; ++i) {
      const double wi = q[i] + M.row(i).dot(z);
      const double zi = std::max(0.0, z[i] - wi / M(i, i));
      change = std::max(change, std::abs(zi - z[i]));
      z[i] = zi;
    }
    if (change < 1e-14 * std::max(1.0, z.cwiseAbs().maxCoeff())) break;
  }
  return finish(M, q, std::move(z));
}

}  // namespace

lcp_result solve_lcp(const Eigen::MatrixXd& M, const Eigen::VectorXd& q) {
  lcp_result res = lemke(M, q);
  if (res.ok) return res;
  return gauss_seidel(M, q);
}

}  // namespace mcqn
