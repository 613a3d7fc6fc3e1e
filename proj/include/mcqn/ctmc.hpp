#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <vector>

#include "mcqn/network.hpp"

namespace mcqn {

// Finite truncation of the exponential-network jobcount chain.  Arrivals into
// a class at its cap are lost; an internal transfer into a full class exits
// instead, so the generator remains conservative.  Requires every
// distribution in the network to be exponential.
class ctmc_model {
 public:
  ctmc_model(const network_spec& net, std::vector<int> caps);

  // πQ = 0, Σπ = 1; direct sparse LU below the size threshold, otherwise
  // BiCGSTAB with an incomplete-LU preconditioner, then a uniformized power
  // iteration as last resort.  Throws solver_failure if the residual target
  // is missed.
  void solve();

  [[nodiscard]] size_t num_states() const { return num_states_; }
  [[nodiscard]] double residual() const { return residual_; }
  [[nodiscard]] const Eigen::VectorXd& pi() const { return pi_; }
  [[nodiscard]] const network_spec& net() const { return net_; }
  [[nodiscard]] const priority_structure& priority() const { return ps_; }
  [[nodiscard]] const std::vector<int>& caps() const { return caps_; }

  void decode(size_t idx, std::vector<int>& z) const;

  [[nodiscard]] double expect(const std::function<double(const std::vector<int>&)>& f) const;
  [[nodiscard]] double prob(const std::function<bool(const std::vector<int>&)>& pred) const;

  // P(some Z_k at its cap): how much of the state space the truncation touches
  [[nodiscard]] double truncation_mass() const;

  [[nodiscard]] double beta(int k) const;      // P(Z_{H(k)} = 0)
  [[nodiscard]] double mean_z(int k) const;
  [[nodiscard]] double second_moment_z(int k) const;
  [[nodiscard]] Eigen::VectorXd marginal(int k, int zmax) const;  // P(Z_k = 0..zmax)

  // E[exp(⟨θ_L, Z_L⟩ + ⟨θ_H, Z_H ∧ 1/s⟩)] with θ the full K-vector; s = 0
  // means no cap.  conditional variant restricts to {Z_{H(k)} = 0} and
  // divides by its probability.
  [[nodiscard]] double phi(const Eigen::VectorXd& theta, double s) const;
  [[nodiscard]] double phi_given_idle(const Eigen::VectorXd& theta, double s, int k) const;

 private:
  network_spec net_;
  priority_structure ps_;
  std::vector<int> caps_;
  std::vector<size_t> stride_;
  size_t num_states_ = 0;
  Eigen::SparseMatrix<double, Eigen::RowMajor> Q_;
  Eigen::VectorXd pi_;
  double residual_ = 1;
};

}  // namespace mcqn
