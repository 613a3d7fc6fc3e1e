#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mcqn/ht.hpp"
#include "mcqn/stats.hpp"

namespace mcqn {

struct srbm_options {
  double step = -1;     // <= 0: 1e-3 / max(1, ||R b||_inf)
  double horizon = 1e5;
  double warmup = -1;   // < 0: 10% of horizon
  int batches = 32;
  uint64_t seed = 1;
};

// Euler-LCP discretization of the reflected diffusion with data (R, Σ, b):
//   G   = W + drift·h + (2Σ)^{1/2}·√h·ξ,   drift = -R b
//   W'  = G + R·ΔY with ΔY >= 0 minimal, W' >= 0, ΔY_ℓ·W'_ℓ = 0 per step.
// The noise covariance 2Σh makes the scheme consistent with the stationary
// adjoint relation below (1-d stationary mean Σ/(Rb)).
struct srbm_stats {
  double step = 0;
  double total_time = 0;  // post-warmup
  Eigen::VectorXd mean_w, mean_w_se;
  Eigen::VectorXd push_rate, push_rate_se;  // ΔY_ℓ per unit time; → b_ℓ exactly
  Eigen::VectorXd total_push;               // Σ ΔY_ℓ over the retained path
  double max_complementarity = 0;           // max over steps of ΔY_ℓ·W'_ℓ
  double min_w = 0;                         // most negative retained component
  std::vector<Eigen::VectorXd> theta_grid;
  std::vector<estimate> phi;                    // E[e^{⟨θ,W⟩}] per θ
  std::vector<std::vector<estimate>> phi_face;  // [θ][ℓ]: ΔY_ℓ-weighted face MGF
};

// Throws bad_rates on invalid data (Σ not SPD, b not positive, shape
// mismatch) and lcp_failure when a reflection step has no complementary
// solution.
[[nodiscard]] srbm_stats simulate_srbm(const srbm_data& data, const srbm_options& opt,
                                       std::vector<Eigen::VectorXd> theta_grid = {});

struct srbm_residual_row {
  Eigen::VectorXd theta;
  double residual;
  double std_error;
};

// Stationary adjoint relation of the reflected diffusion evaluated on the
// simulated estimates:
//   ⟨θ, Σθ⟩ φ̂(θ) + Σ_ℓ b_ℓ ⟨θ, R^{(ℓ)}⟩ (φ̂_ℓ(θ) - φ̂(θ))
// which is 0 for the exact stationary law; the residual bundles Monte-Carlo
// and discretization error.  Throws no_boundary_mass when a face was never
// pushed and θ is nonzero.
[[nodiscard]] std::vector<srbm_residual_row> srbm_bar_residual(const srbm_stats& stats,
                                                               const srbm_data& data);

}  // namespace mcqn
