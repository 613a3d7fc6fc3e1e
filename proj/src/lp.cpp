#include "mcqn/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mcqn/errors.hpp"

namespace mcqn {
namespace {

constexpr double kPivotEps = 1e-11;
constexpr double kCostEps = 1e-9;
constexpr double kFeasEps = 1e-7;
constexpr int kMaxIter = 200000;
constexpr int kStallLimit = 64;

// Full-tableau minimizing simplex.  T is (m+1)×(N+1): m data rows, objective
// row last; column N holds rhs / negated objective.  banned columns never
// enter (used to retire artificials after phase 1).
class tableau {
 public:
  tableau(int m, int ncols) : m_(m), n_(ncols), t_(m + 1, ncols + 1), basis_(m, -1) {
    t_.setZero();
  }

  double& at(int i, int j) { return t_(i, j); }
  [[nodiscard]] double rhs(int i) const { return t_(i, n_); }
  [[nodiscard]] double objective() const { return -t_(m_, n_); }
  [[nodiscard]] int basis(int i) const { return basis_[i]; }
  void set_basis(int i, int j) { basis_[i] = j; }
  void ban(int j) { banned_.push_back(j); }

  void pivot(int row, int col) {
    t_.row(row) /= t_(row, col);
    for (int i = 0; i <= m_; ++i) {
      if (i == row) continue;
      const double f = t_(i, col);
      if (f != 0) t_.row(i) -= f * t_.row(row);
    }
    basis_[row] = col;
  }

  // returns optimal/unbounded/stalled
  lp_status run() {
    std::vector<bool> is_banned(n_, false);
    for (int j : banned_) is_banned[j] = true;
    int stall = 0;
    double last_obj = objective();
    bool bland = false;
    for (int it = 0; it < kMaxIter; ++it) {
      int col = -1;
      if (!bland) {
        double best = -kCostEps;
        for (int j = 0; j < n_; ++j)
          if (!is_banned[j] && t_(m_, j) < best) {
            best = t_(m_, j);
            col = j;
          }
      } else {
        for (int j = 0; j < n_; ++j)
          if (!is_banned[j] && t_(m_, j) < -kCostEps) {
            col = j;
            break;
          }
      }
      if (col < 0) return lp_status::optimal;
      int row = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m_; ++i) {
        if (t_(i, col) <= kPivotEps) continue;
        const double ratio = t_(i, n_) / t_(i, col);
        if (ratio < best_ratio - 1e-12 ||
            (ratio < best_ratio + 1e-12 && (row < 0 || basis_[i] < basis_[row]))) {
          best_ratio = ratio;
          row = i;
        }
      }
      if (row < 0) return lp_status::unbounded;
      pivot(row, col);
      const double obj = objective();
      if (obj < last_obj - 1e-12) {
        last_obj = obj;
        stall = 0;
      } else if (++stall > kStallLimit) {
        bland = true;
      }
    }
    return lp_status::stalled;
  }

  int m_, n_;
  Eigen::MatrixXd t_;
  std::vector<int> basis_;
  std::vector<int> banned_;
};

}  // namespace

lp_result lp_solve(const lp_problem& p) {
  const int n = static_cast<int>(p.c.size());
  const int m0 = static_cast<int>(p.rhs.size());
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(p.lo[i]) || !std::isfinite(p.hi[i]) || p.lo[i] > p.hi[i] + 1e-12)
      throw_error(errc::solver_failure, "lp bounds must be finite and ordered");

  // shift x = lo + y, y in [0, span]; upper bounds become explicit rows
  const Eigen::VectorXd span = p.hi - p.lo;
  const int m = m0 + n;  // structural rows + bound rows
  // column layout: y (n) | row slacks/surplus (m) | artificials (assigned below)
  int next_col = n + m;
  std::vector<int> artificial_col(m, -1);
  std::vector<double> row_rhs(m);
  std::vector<int> row_rel(m);
  Eigen::MatrixXd rowsA = Eigen::MatrixXd::Zero(m, n);
  for (int i = 0; i < m0; ++i) {
    rowsA.row(i) = p.A.row(i);
    row_rhs[i] = p.rhs[i] - p.A.row(i).dot(p.lo);
    row_rel[i] = p.relation[i];
  }
  for (int i = 0; i < n; ++i) {
    rowsA(m0 + i, i) = 1;
    row_rhs[m0 + i] = span[i];
    row_rel[m0 + i] = -1;
  }
  for (int i = 0; i < m; ++i) {
    if (row_rhs[i] < 0) {  // normalize rhs >= 0
      rowsA.row(i) = -rowsA.row(i);
      row_rhs[i] = -row_rhs[i];
      row_rel[i] = -row_rel[i];
    }
    // a slack/surplus column exists for every inequality; an artificial is
    // needed when the slack cannot serve as the initial basic variable
    if (row_rel[i] == 0 || row_rel[i] == 1) artificial_col[i] = next_col++;
  }
  const int ncols = next_col;

  tableau tb(m, ncols);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) tb.at(i, j) = rowsA(i, j);
    if (row_rel[i] != 0) tb.at(i, n + i) = row_rel[i] == -1 ? 1.0 : -1.0;
    tb.at(i, ncols) = row_rhs[i];
    if (artificial_col[i] >= 0) {
      tb.at(i, artificial_col[i]) = 1;
      tb.set_basis(i, artificial_col[i]);
    } else {
      tb.set_basis(i, n + i);
    }
  }

  // phase 1: minimize sum of artificials
  bool any_artificial = false;
  for (int i = 0; i < m; ++i)
    if (artificial_col[i] >= 0) {
      any_artificial = true;
      tb.at(m, artificial_col[i]) = 1;
    }
  if (any_artificial) {
    for (int i = 0; i < m; ++i)
      if (artificial_col[i] >= 0) tb.t_.row(m) -= tb.t_.row(i);
    const lp_status st = tb.run();
    if (st != lp_status::optimal) return {lp_status::stalled, 0, {}};
    if (tb.objective() > kFeasEps) return {lp_status::infeasible, 0, {}};
    // retire artificials; pivot basic ones out where possible
    for (int i = 0; i < m; ++i) {
      if (tb.basis(i) < n + m) continue;
      int col = -1;
      for (int j = 0; j < n + m && col < 0; ++j)
        if (std::abs(tb.at(i, j)) > 1e-8) col = j;
      if (col >= 0) tb.pivot(i, col);
    }
    for (int i = 0; i < m; ++i)
      if (artificial_col[i] >= 0) tb.ban(artificial_col[i]);
  }

  // phase 2: true objective
  tb.t_.row(m).setZero();
  for (int j = 0; j < n; ++j) tb.at(m, j) = p.c[j];
  for (int i = 0; i < m; ++i) {
    const int bj = tb.basis(i);
    if (bj < n && p.c[bj] != 0) tb.t_.row(m) -= p.c[bj] * tb.t_.row(i);
    if (bj >= n + m) tb.t_.row(m) -= tb.at(m, bj) * tb.t_.row(i);
  }
  const lp_status st = tb.run();
  if (st != lp_status::optimal) return {st, 0, {}};

  lp_result res;
  res.status = lp_status::optimal;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(ncols);
  for (int i = 0; i < m; ++i) y[tb.basis(i)] = tb.rhs(i);
  res.x.resize(n);
  for (int i = 0; i < n; ++i) res.x[i] = p.lo[i] + std::clamp(y[i], 0.0, span[i]);
  res.objective = p.c.dot(res.x);
  return res;
}

}  // namespace mcqn
