#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mcqn/network.hpp"

namespace mcqn {

// Root of E[exp(-y (T ∧ 1/t))] = e^{-x} in y.  Unique on the transform's
// finite domain; solved to |e^{x} E[...] - 1| < 1e-12 by safeguarded Newton.
// t = 0 means no truncation; throws no_convergence when the untruncated
// transform cannot reach e^{-x} (unbounded support, x < 0, t = 0).
[[nodiscard]] double solve_clock(const distribution_model& dist, double x, double t);

// η_k(θ_k, t): the arrival-side exponent, root of e^{θ_k} E[e^{-η (T ∧ 1/t)}] = 1.
[[nodiscard]] double solve_eta(const distribution_model& interarrival, double theta_k, double t);

// ξ_k(θ, t): the service-side exponent for class k.  Reduces to the scalar
// problem at x_s(θ) = -θ_k + log Σ_{ℓ} P̄_{kℓ} e^{θ_ℓ} where the sum runs over
// routing targets plus the exit with weight 1 - Σ_ℓ P_{kℓ} at exponent 0.
[[nodiscard]] double xs_argument(const network_spec& net, int k, const Eigen::VectorXd& theta);
[[nodiscard]] double solve_xi(const network_spec& net, int k, const Eigen::VectorXd& theta,
                              double t);

// Second-order expansions.  star = bar + tilde:
//   η̄_k = θ_k                        η̃_k = ½ c²_{e,k} θ_k²
//   ξ̄_k = -θ_k + Σ_ℓ P_{kℓ} θ_ℓ      ξ̃_k = ½(Σ_ℓ P_{kℓ}θ_ℓ² - (Σ_ℓ P_{kℓ}θ_ℓ)²
//                                            + c²_{s,k} ξ̄_k²)
struct expansions {
  Eigen::VectorXd eta_bar, eta_tilde;  // zero outside E
  Eigen::VectorXd xi_bar, xi_tilde;
  [[nodiscard]] Eigen::VectorXd eta_star() const { return eta_bar + eta_tilde; }
  [[nodiscard]] Eigen::VectorXd xi_star() const { return xi_bar + xi_tilde; }
};
[[nodiscard]] expansions taylor_expansions(const network_spec& net, const Eigen::VectorXd& theta);

// q(θ) = Σ_{k∈E} λ_k η̃_k(θ) + Σ_k α_k ξ̃_k(θ): the quadratic form whose
// restriction to the lifted θ_L subspace defines the diffusion covariance.
[[nodiscard]] double q_form(const network_spec& net, const Eigen::VectorXd& alpha,
                            const Eigen::VectorXd& theta);

// Scaled truncated exponents at (rθ, r^{1-eps0}).
struct scaled_exponents {
  Eigen::VectorXd eta;  // η_k(rθ_k, r^{1-eps0}), zero outside E
  Eigen::VectorXd xi;   // ξ_k(rθ, r^{1-eps0})
};
[[nodiscard]] scaled_exponents solve_scaled(const network_spec& net, const Eigen::VectorXd& theta,
                                            double r, double eps0);

// |η_k(rθ_k, r^{1-eps0}) - η*_k(rθ_k)| / r² and the ξ analogue, maximized
// over classes; one row per r.
struct expansion_residual_row {
  double r;
  double eta_err;
  double xi_err;
};
[[nodiscard]] std::vector<expansion_residual_row> expansion_residual(
    const network_spec& net, const Eigen::VectorXd& theta, const std::vector<double>& r_values,
    double eps0);

inline constexpr double kDefaultEps0 = 0.4;

}  // namespace mcqn
