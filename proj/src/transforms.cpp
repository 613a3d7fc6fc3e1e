#include "mcqn/transforms.hpp"

#include <cmath>
#include <limits>

#include "mcqn/errors.hpp"

namespace mcqn {
namespace {

constexpr double kResidTol = 1e-12;
constexpr int kMaxIter = 200;

}  // namespace

double solve_clock(const distribution_model& dist, double x, double t) {
  if (x == 0) return 0;
  if (t == 0 && x < 0 && dist.kind() == dist_kind::lognormal)
    throw_error(errc::no_convergence,
                "untruncated transform diverges for negative exponents (unbounded support)");
  const double target = std::exp(-x);

  // bracket [lo, hi] with g(lo) >= target >= g(hi), g decreasing
  double lo, hi;
  if (x > 0) {
    lo = 0;
    hi = std::max(x, 0.5);
    for (int i = 0;; ++i) {
      if (dist.mgf_truncated(hi, t) <= target) break;
      hi *= 2;
      if (i > 200) throw_error(errc::no_convergence, "failed to bracket root from above");
    }
  } else {
    hi = 0;
    lo = std::min(x, -0.25);
    for (int i = 0;; ++i) {
      const double g = dist.mgf_truncated(lo, t);
      if (!std::isfinite(g) || g >= target) break;
      lo *= 2;
      if (i > 200) throw_error(errc::no_convergence, "failed to bracket root from below");
    }
  }

  double y = x + 0.5 * dist.scv() * x * x;  // second-order initial guess
  if (!(y > lo && y < hi)) y = 0.5 * (lo + hi);
  for (int it = 0; it < kMaxIter; ++it) {
    const double g = dist.mgf_truncated(y, t);
    if (std::isfinite(g)) {
      const double resid = std::exp(x) * g - 1;
      if (std::abs(resid) < kResidTol) return y;
      if (g >= target)
        lo = std::max(lo, y);
      else
        hi = std::min(hi, y);
      const double gd = dist.mgf_truncated_d(y, t);
      double next = y - (g - target) / gd;
      if (!std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
      y = next;
    } else {
      lo = std::max(lo, y);
      y = 0.5 * (lo + hi);
    }
  }
  throw_error(errc::no_convergence, "clock equation did not converge for x=" + std::to_string(x));
}

double solve_eta(const distribution_model& interarrival, double theta_k, double t) {
  return solve_clock(interarrival, theta_k, t);
}

double xs_argument(const network_spec& net, int k, const Eigen::VectorXd& theta) {
  const int K = net.num_classes();
  double acc = 0, row = 0;
  for (int l = 0; l < K; ++l) {
    const double p = net.routing(k, l);
    row += p;
    if (p > 0) acc += p * std::exp(theta[l]);
  }
  acc += std::max(0.0, 1 - row);  // exit carries exponent 0
  return -theta[k] + std::log(acc);
}

double solve_xi(const network_spec& net, int k, const Eigen::VectorXd& theta, double t) {
  return solve_clock(net.service_dist[k], xs_argument(net, k, theta), t);
}

expansions taylor_expansions(const network_spec& net, const Eigen::VectorXd& theta) {
  const int K = net.num_classes();
  expansions e;
  e.eta_bar = Eigen::VectorXd::Zero(K);
  e.eta_tilde = Eigen::VectorXd::Zero(K);
  e.xi_bar.resize(K);
  e.xi_tilde.resize(K);
  for (int k = 0; k < K; ++k) {
    if (net.is_external(k)) {
      e.eta_bar[k] = theta[k];
      e.eta_tilde[k] = 0.5 * net.interarrival_dist[k].scv() * theta[k] * theta[k];
    }
    double p_th = 0, p_th2 = 0;
    for (int l = 0; l < K; ++l) {
      p_th += net.routing(k, l) * theta[l];
      p_th2 += net.routing(k, l) * theta[l] * theta[l];
    }
    e.xi_bar[k] = -theta[k] + p_th;
    e.xi_tilde[k] =
        0.5 * (p_th2 - p_th * p_th + net.service_dist[k].scv() * e.xi_bar[k] * e.xi_bar[k]);
  }
  return e;
}

double q_form(const network_spec& net, const Eigen::VectorXd& alpha, const Eigen::VectorXd& theta) {
  const auto e = taylor_expansions(net, theta);
  double q = 0;
  for (int k = 0; k < net.num_classes(); ++k) {
    if (net.is_external(k)) q += net.arrival_rate[k] * e.eta_tilde[k];
    q += alpha[k] * e.xi_tilde[k];
  }
  return q;
}

scaled_exponents solve_scaled(const network_spec& net, const Eigen::VectorXd& theta, double r,
                              double eps0) {
  if (!(r > 0)) throw_error(errc::bad_rates, "scaled exponents need r > 0");
  const double t = std::pow(r, 1 - eps0);
  const int K = net.num_classes();
  scaled_exponents out;
  out.eta = Eigen::VectorXd::Zero(K);
  out.xi.resize(K);
  const Eigen::VectorXd th = r * theta;
  for (int k = 0; k < K; ++k) {
    if (net.is_external(k)) out.eta[k] = solve_eta(net.interarrival_dist[k], th[k], t);
    out.xi[k] = solve_xi(net, k, th, t);
  }
  return out;
}

std::vector<expansion_residual_row> expansion_residual(const network_spec& net,
                                                       const Eigen::VectorXd& theta,
                                                       const std::vector<double>& r_values,
                                                       double eps0) {
  std::vector<expansion_residual_row> rows;
  rows.reserve(r_values.size());
  for (double r : r_values) {
    const auto sol = solve_scaled(net, theta, r, eps0);
    const auto star = taylor_expansions(net, r * theta);
    const Eigen::VectorXd eta_star = star.eta_star();
    const Eigen::VectorXd xi_star = star.xi_star();
    double ee = 0, xe = 0;
    for (int k = 0; k < net.num_classes(); ++k) {
      if (net.is_external(k)) ee = std::max(ee, std::abs(sol.eta[k] - eta_star[k]));
      xe = std::max(xe, std::abs(sol.xi[k] - xi_star[k]));
    }
    rows.push_back({r, ee / (r * r), xe / (r * r)});
  }
  return rows;
}

}  // namespace mcqn
