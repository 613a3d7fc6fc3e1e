#include "mcqn/ht.hpp"

#include <cmath>
#include <limits>

#include "mcqn/errors.hpp"
#include "mcqn/lp.hpp"
#include "mcqn/transforms.hpp"

namespace mcqn {
namespace {

constexpr double kIdentityTol = 1e-10;

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& A, const std::vector<int>& rows,
                          const std::vector<int>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < cols.size(); ++j) out(i, j) = A(rows[i], cols[j]);
  return out;
}

}  // namespace

Eigen::MatrixXd input_matrix(const network_spec& net) {
  const int K = net.num_classes();
  const auto ps = build_priority(net);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(K, K);
  for (int k = 0; k < K; ++k)
    if (ps.k_plus[k] >= 0) B(k, ps.k_plus[k]) = 1;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(K, K);
  return (I - net.routing.transpose()) * net.service_rate().asDiagonal() * (I - B);
}

ht_analysis analyze(const ht_family& family) {
  const network_spec& net = family.base;
  const auto ps = build_priority(net);
  const auto ts = solve_traffic(net);

  ht_analysis an;
  an.L_classes = ps.lowest;
  an.H_classes = ps.high_classes();
  an.A = input_matrix(net);
  an.A_L = submatrix(an.A, an.L_classes, an.L_classes);
  an.A_H = submatrix(an.A, an.H_classes, an.H_classes);
  an.A_LH = submatrix(an.A, an.L_classes, an.H_classes);
  an.A_HL = submatrix(an.A, an.H_classes, an.L_classes);

  const int L = static_cast<int>(an.L_classes.size());
  const int H = static_cast<int>(an.H_classes.size());
  if (H > 0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(an.A_H);
    if (!lu.isInvertible()) throw_error(errc::ah_singular, "high-priority block is singular");
    an.srbm.R = an.A_L - an.A_LH * lu.solve(an.A_HL);
    Eigen::FullPivLU<Eigen::MatrixXd> luT(an.A_H.transpose());
    an.theta_map = -luT.solve(an.A_LH.transpose());
    // ⟨columns⟩ must satisfy A_LHᵀ θ_L + A_Hᵀ θ_H = 0
    const double resid =
        (an.A_LH.transpose() + an.A_H.transpose() * an.theta_map).cwiseAbs().maxCoeff();
    if (!(resid < kIdentityTol))
      throw_error(errc::ah_singular, "theta lifting residual " + std::to_string(resid));
  } else {
    an.srbm.R = an.A_L;
    an.theta_map = Eigen::MatrixXd::Zero(0, L);
  }

  an.srbm.b = family.b;

  // Σ by polarization of q restricted to the lifted subspace
  auto q_of = [&](const Eigen::VectorXd& theta_L) {
    return q_form(net, ts.alpha, lift_theta(an, theta_L));
  };
  an.srbm.Sigma.resize(L, L);
  Eigen::VectorXd diag_q(L);
  for (int i = 0; i < L; ++i) {
    diag_q[i] = q_of(Eigen::VectorXd::Unit(L, i));
    an.srbm.Sigma(i, i) = diag_q[i];
  }
  for (int i = 0; i < L; ++i)
    for (int j = i + 1; j < L; ++j) {
      const double qij = q_of(Eigen::VectorXd::Unit(L, i) + Eigen::VectorXd::Unit(L, j));
      an.srbm.Sigma(i, j) = an.srbm.Sigma(j, i) = 0.5 * (qij - diag_q[i] - diag_q[j]);
    }
  // polarization must reproduce q exactly (quadratic form)
  for (int trial = 0; trial < 3; ++trial) {
    Eigen::VectorXd th(L);
    for (int i = 0; i < L; ++i) th[i] = -0.3 - 0.17 * ((trial * L + i) % 5);
    const double lhs = th.dot(an.srbm.Sigma * th);
    const double rhs = q_of(th);
    if (std::abs(lhs - rhs) > kIdentityTol * std::max(1.0, std::abs(rhs)))
      throw_error(errc::solver_failure, "covariance polarization mismatch");
  }
  return an;
}

Eigen::VectorXd lift_theta(const ht_analysis& an, const Eigen::VectorXd& theta_L) {
  const int K = static_cast<int>(an.A.rows());
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(K);
  for (size_t i = 0; i < an.L_classes.size(); ++i) theta[an.L_classes[i]] = theta_L[i];
  if (!an.H_classes.empty()) {
    const Eigen::VectorXd th_H = an.theta_map * theta_L;
    for (size_t i = 0; i < an.H_classes.size(); ++i) theta[an.H_classes[i]] = th_H[i];
  }
  return theta;
}

completely_s_result check_completely_S(const Eigen::MatrixXd& M) {
  const int L = static_cast<int>(M.rows());
  if (L > 12) throw_error(errc::dimension_too_large, "completely-S check limited to 12 faces");
  completely_s_result res;
  res.pass = true;
  res.min_delta = std::numeric_limits<double>::infinity();
  for (int mask = 1; mask < (1 << L); ++mask) {
    std::vector<int> idx;
    for (int i = 0; i < L; ++i)
      if (mask & (1 << i)) idx.push_back(i);
    const int n = static_cast<int>(idx.size());
    // vars: u (n) in [0,1], δ in [-1,1]; maximize δ s.t. M_S u - δ e >= 0
    lp_problem p;
    p.c = Eigen::VectorXd::Zero(n + 1);
    p.c[n] = -1;
    p.A = Eigen::MatrixXd::Zero(n, n + 1);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) p.A(i, j) = M(idx[i], idx[j]);
      p.A(i, n) = -1;
    }
    p.rhs = Eigen::VectorXd::Zero(n);
    p.relation.assign(n, +1);
    p.lo = Eigen::VectorXd::Zero(n + 1);
    p.hi = Eigen::VectorXd::Ones(n + 1);
    p.lo[n] = -1;
    const auto sol = lp_solve(p);
    if (sol.status != lp_status::optimal)
      throw_error(errc::solver_failure, "completely-S subproblem did not solve");
    const double delta = -sol.objective;
    if (delta < res.min_delta) res.min_delta = delta;
    if (delta <= 1e-9 && res.pass) {
      res.pass = false;
      res.failing_subset = idx;
    }
  }
  return res;
}

bool check_M_matrix(const Eigen::MatrixXd& M) {
  const int L = static_cast<int>(M.rows());
  for (int i = 0; i < L; ++i) {
    if (!(M(i, i) > 0)) return false;
    for (int j = 0; j < L; ++j)
      if (i != j && M(i, j) > 1e-12) return false;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible()) return false;
  const Eigen::MatrixXd inv = lu.inverse();
  return (inv.array() >= -1e-10).all();
}

tight_result check_tight(const Eigen::MatrixXd& R, const Eigen::VectorXd& b) {
  const int L = static_cast<int>(R.rows());
  if (L > 12) throw_error(errc::dimension_too_large, "tight-system check limited to 12 faces");
  const int masks = 1 << L;

  // canonical variables: x_A for each A; x_A^{(j)} only for j ∉ A
  // (x_A^{(j)} with j ∈ A aliases x_{A\{j}}^{(j)})
  std::vector<int> var_x(masks, -1);
  std::vector<std::vector<int>> var_xj(masks, std::vector<int>(L, -1));
  int nvars = 0;
  for (int A = 0; A < masks; ++A) var_x[A] = nvars++;
  for (int A = 0; A < masks; ++A)
    for (int j = 0; j < L; ++j)
      if (!(A & (1 << j))) var_xj[A][j] = nvars++;
  auto canon = [&](int A, int j) {
    return (A & (1 << j)) ? var_xj[A & ~(1 << j)][j] : var_xj[A][j];
  };

  struct entry {
    int row, col;
    double v;
  };
  std::vector<entry> trips;
  std::vector<int> relation;
  int nrows = 0;
  auto add_entry = [&](int row, int col, double v) { trips.push_back({row, col, v}); };
  // equalities: Σ_j b_j R_ij (x_A^{(j)} - x_A) = 0, i ∈ A
  for (int A = 1; A < masks; ++A) {
    for (int i = 0; i < L; ++i) {
      if (!(A & (1 << i))) continue;
      const int row = nrows++;
      relation.push_back(0);
      double xcoef = 0;
      for (int j = 0; j < L; ++j) {
        const double w = b[j] * R(i, j);
        if (w == 0) continue;
        add_entry(row, canon(A, j), w);
        xcoef -= w;
      }
      add_entry(row, var_x[A], xcoef);
    }
  }
  // covering monotonicity: value at A >= value at A ∪ {i}
  for (int A = 0; A < masks; ++A) {
    for (int i = 0; i < L; ++i) {
      if (A & (1 << i)) continue;
      const int A2 = A | (1 << i);
      {
        const int row = nrows++;
        relation.push_back(+1);
        add_entry(row, var_x[A], 1);
        add_entry(row, var_x[A2], -1);
      }
      for (int j = 0; j < L; ++j) {
        const int c1 = canon(A, j), c2 = canon(A2, j);
        if (c1 == c2) continue;
        const int row = nrows++;
        relation.push_back(+1);
        add_entry(row, c1, 1);
        add_entry(row, c2, -1);
      }
    }
  }

  lp_problem p;
  p.A = Eigen::MatrixXd::Zero(nrows, nvars);
  for (const auto& t : trips) p.A(t.row, t.col) += t.v;
  p.rhs = Eigen::VectorXd::Zero(nrows);
  p.relation = relation;
  p.lo = Eigen::VectorXd::Zero(nvars);
  p.hi = Eigen::VectorXd::Ones(nvars);
  // x_∅ = x_∅^{(j)} = 1
  p.lo[var_x[0]] = 1;
  for (int j = 0; j < L; ++j) p.lo[var_xj[0][j]] = 1;

  auto var_name = [&](int v) {
    for (int A = 0; A < masks; ++A) {
      if (var_x[A] == v) {
        std::string s = "x{";
        for (int i = 0; i < L; ++i)
          if (A & (1 << i)) s += std::to_string(i + 1) + ",";
        if (s.back() == ',') s.pop_back();
        return s + "}";
      }
      for (int j = 0; j < L; ++j)
        if (var_xj[A][j] == v) {
          std::string s = "x^(" + std::to_string(j + 1) + "){";
          for (int i = 0; i < L; ++i)
            if (A & (1 << i)) s += std::to_string(i + 1) + ",";
          if (s.back() == ',') s.pop_back();
          return s + "}";
        }
    }
    return std::string("?");
  };

  tight_result res;
  res.tight = true;
  res.min_value = 1;
  for (int v = 0; v < nvars; ++v) {
    p.c = Eigen::VectorXd::Zero(nvars);
    p.c[v] = 1;  // minimize x_v; the all-ones point makes every maximum 1
    const auto sol = lp_solve(p);
    if (sol.status != lp_status::optimal)
      throw_error(errc::solver_failure, "tight-system subproblem did not solve");
    if (sol.objective < res.min_value) {
      res.min_value = sol.objective;
      res.witness = var_name(v);
    }
  }
  res.tight = res.min_value >= 1 - 1e-9;
  if (res.tight) res.witness.clear();
  return res;
}

region_result verify_2s5c_region(const network_spec& net, const Eigen::VectorXd& theta_L) {
  if (net.num_classes() != 5 || net.num_stations != 2)
    throw_error(errc::bad_normalization, "region check applies to the five-class line");
  const Eigen::VectorXd& m = net.mean_service;
  const double m1 = m[0], m3 = m[2], m4 = m[3], mu5 = 1.0 / m[4];
  const double th1 = theta_L[0], th4 = theta_L[1];
  region_result res;
  res.theta = Eigen::VectorXd::Zero(5);
  if (!(mu5 * m4 > 1))
    throw_error(errc::bad_normalization, "region requires m5 < m4");
  const double lo = m4 - (mu5 * m4 - 1) / (m1 * mu5);
  const bool neg = th1 < 0 && th4 < 0;
  const double ratio = neg ? th4 / th1 : 0;
  res.inside = neg && ratio > lo && ratio < m4;
  const double th5 = (m4 * th1 - th4) / (mu5 * m4 - 1);
  const double th2 = th1 - m1 * mu5 * th5;
  const double th3 = th4 + m3 * mu5 * th5;
  res.theta << th1, th2, th3, th4, th5;
  return res;
}

}  // namespace mcqn
