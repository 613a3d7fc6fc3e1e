#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mcqn/network.hpp"

namespace mcqn {

// Reflected-diffusion data: reflection matrix R (columns are the push
// directions), covariance Σ of the quadratic form ⟨θ,Σθ⟩, boundary rates b;
// the drift is -R b.
struct srbm_data {
  Eigen::MatrixXd R;
  Eigen::MatrixXd Sigma;
  Eigen::VectorXd b;
};

struct ht_analysis {
  std::vector<int> L_classes;  // lowest-priority class per station, station order
  std::vector<int> H_classes;  // ascending class index
  Eigen::MatrixXd A;           // (I-Pᵀ) diag(μ) (I-B)
  Eigen::MatrixXd A_L, A_LH, A_HL, A_H;
  Eigen::MatrixXd theta_map;   // θ_H = theta_map θ_L
  srbm_data srbm;
};

// A = (I-Pᵀ) diag(μ) (I-B) with B_{k,k+} = 1 (k+ = next-higher-priority
// class); rows of B sum to 1 except for top-priority classes.
[[nodiscard]] Eigen::MatrixXd input_matrix(const network_spec& net);

// Full pipeline on the critical base: R as the Schur complement of A_H,
// Σ by polarization of q on the lifted subspace, b from the family.
// Throws ah_singular when A_H is not invertible.
[[nodiscard]] ht_analysis analyze(const ht_family& family);

// Embed θ_L into the K-dimensional θ with θ_H = theta_map θ_L.
[[nodiscard]] Eigen::VectorXd lift_theta(const ht_analysis& an, const Eigen::VectorXd& theta_L);

struct completely_s_result {
  bool pass = false;
  double min_delta = 0;              // worst subset's optimal δ
  std::vector<int> failing_subset;   // empty when pass
};
// M is completely-S iff every principal submatrix M_S admits u in [0,1]^S
// with M_S u >= δ e for some δ > 0 (LP per subset).
[[nodiscard]] completely_s_result check_completely_S(const Eigen::MatrixXd& M);

// nonpositive off-diagonal, positive diagonal, inverse exists and is
// entrywise >= -1e-10
[[nodiscard]] bool check_M_matrix(const Eigen::MatrixXd& M);

struct tight_result {
  bool tight = false;
  double min_value = 1;   // smallest optimum over all variables
  std::string witness;    // variable attaining it when not tight
};
// Definition: the linear system over x_A, x_A^{(j)} (A ⊆ L, j ∈ L) with
//   Σ_j b_j R_ij (x_A^{(j)} - x_A) = 0  (i ∈ A),   x ∈ [0,1],
//   monotone decreasing in A along covering pairs, x_A^{(j)} = x_{A\{j}}^{(j)}
//   for j ∈ A, and x_∅ = x_∅^{(j)} = 1
// has the all-ones vector as its unique solution.  Uniqueness is certified by
// minimizing every variable (the all-ones point is always feasible, so each
// maximum is 1).  Throws dimension_too_large for L > 12.
[[nodiscard]] tight_result check_tight(const Eigen::MatrixXd& R, const Eigen::VectorXd& b);

struct region_result {
  bool inside = false;
  Eigen::VectorXd theta;  // full 5-vector (θ₂, θ₃, θ₅ derived)
};
// Admissible (θ₁,θ₄) directions for the two-station five-class line:
// both negative with m₄ - (μ₅m₄-1)/(m₁μ₅) < θ₄/θ₁ < m₄; the lifted
// coordinates are θ₅ = (m₄θ₁-θ₄)/(μ₅m₄-1), θ₂ = θ₁ - m₁μ₅θ₅,
// θ₃ = θ₄ + m₃μ₅θ₅, all negative inside the region.
[[nodiscard]] region_result verify_2s5c_region(const network_spec& net,
                                               const Eigen::VectorXd& theta_L);

}  // namespace mcqn
