#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "mcqn/distribution.hpp"

namespace mcqn {

// Directions (λ*, m*) defining the critically-loaded family around a base
// network: λ^(r) = λ - r λ*, m^(r) = m - r m*.
struct ht_directions {
  Eigen::VectorXd lambda_star;
  Eigen::VectorXd m_star;
};

// Open multiclass network under a per-station strict preemptive-resume
// priority discipline.  Classes are 0-based in code (1-based in files).
// priority_rank: within a station, rank 1 is served first; ranks must be
// distinct per station but need not be contiguous.
struct network_spec {
  int num_stations = 0;
  std::vector<int> station_of;               // s(k), 0-based
  std::vector<int> priority_rank;
  Eigen::MatrixXd routing;                   // P, K×K substochastic
  Eigen::VectorXd arrival_rate;              // λ_k >= 0; E = {k : λ_k > 0}
  Eigen::VectorXd mean_service;              // m_k > 0
  std::vector<distribution_model> service_dist;
  std::vector<distribution_model> interarrival_dist;  // meaningful for k ∈ E
  std::optional<ht_directions> heavy_traffic;

  [[nodiscard]] int num_classes() const { return static_cast<int>(station_of.size()); }
  [[nodiscard]] bool is_external(int k) const { return arrival_rate[k] > 0; }
  [[nodiscard]] Eigen::VectorXd service_rate() const {
    return mean_service.cwiseInverse();
  }
};

// Derived priority bookkeeping.
//   H(k): classes at s(k) with rank <= rank(k), including k.
//   k+  : next-higher-priority class at s(k) (lowest rank among H(k)\{k});
//         -1 for top classes.
//   k-  : next-lower-priority class at s(k); -1 for lowest classes.
//   lowest: per station, the lowest-priority class; these form the set L.
struct priority_structure {
  std::vector<std::vector<int>> station_classes;  // per station, rank order, served-first first
  std::vector<std::vector<int>> H;                // H(k), sorted by class index
  std::vector<int> k_plus;
  std::vector<int> k_minus;
  std::vector<int> lowest;        // size J; L in station order
  std::vector<bool> is_lowest;    // size K
  std::vector<bool> is_top;       // k ∈ K₁ (highest at its station)
  Eigen::MatrixXd constituency;   // C, J×K, C(j,k) = 1(s(k)=j)

  [[nodiscard]] std::vector<int> high_classes() const {
    std::vector<int> h;
    for (int k = 0; k < static_cast<int>(is_lowest.size()); ++k)
      if (!is_lowest[k]) h.push_back(k);
    return h;
  }
};

struct traffic_solution {
  Eigen::VectorXd alpha;  // α = λ + Pᵀα
  Eigen::VectorXd gamma;  // γ_k = α_k m_k
  Eigen::VectorXd rho;    // per station, ρ_j = Σ_{s(k)=j} γ_k
  Eigen::VectorXd beta;   // β_k = 1 - Σ_{ℓ∈H(k)} γ_ℓ
};

// Critically loaded base plus directions; instantiate_at(r) yields the
// pre-limit network with ρ^(r) = e - r c + r² C diag(m*) α*.
struct ht_family {
  network_spec base;             // ρ(base) = e
  Eigen::VectorXd alpha_star;    // (I-Pᵀ)⁻¹ λ*
  Eigen::VectorXd c_station;     // c = C[diag(m*)α + diag(m)α*] > 0
  Eigen::VectorXd b;             // b_ℓ = c_{s(ℓ)}, indexed by L in station order
};

// Throws error with codes non_open_network / non_strict_priority / bad_rates.
void validate_spec(const network_spec& net);

[[nodiscard]] priority_structure build_priority(const network_spec& net);

// Highest-priority nonempty class at a station, -1 when the station is idle.
[[nodiscard]] int serving_class(const priority_structure& ps, int station,
                                const std::vector<int>& z);

// α residual enforced below 1e-10; requires validate_spec to pass.
[[nodiscard]] traffic_solution solve_traffic(const network_spec& net);

// Requires net.heavy_traffic, critical base load (|ρ_j - 1| <= 1e-10), and
// c > 0; throws bad_rates / bad_normalization otherwise.
[[nodiscard]] ht_family make_family(const network_spec& net);

// λ^(r) = λ - rλ*, m^(r) = m - rm*; throws negative_rate if any rate leaves
// its admissible range.
[[nodiscard]] network_spec instantiate_at(const ht_family& family, double r);

// The two-station five-class line with route 1→2→3→4→5→out, station
// membership {1,3,5} / {2,4}, and priority order (5,3,1) / (2,4).
// Service means m must satisfy the usual load constraints for stability when
// instantiated below critical load.
[[nodiscard]] network_spec make_two_station_five_class(
    const Eigen::VectorXd& m, const std::vector<distribution_model>& service_dist,
    const distribution_model& interarrival, double lambda1);

// Same network wrapped as a critical family: λ* = e₁, m* = 0, λ₁ = 1/(m₁+m₃+m₅)
// normalized so both stations are critical requires m₁+m₃+m₅ = m₂+m₄.
[[nodiscard]] network_spec make_two_station_five_class_critical(
    const Eigen::VectorXd& m, const std::vector<distribution_model>& service_dist,
    const distribution_model& interarrival);

// Single-station M/GI/1-type class (K=1) with λ^(r) = 1 - r at unit service.
[[nodiscard]] network_spec make_single_class_critical(const distribution_model& interarrival,
                                                      const distribution_model& service);

// Two classes at one station, class 1 has priority over class 2; Poisson
// arrivals to both, exponential service.  loads are the per-class ρ values.
[[nodiscard]] network_spec make_priority_two_class(double rho1, double rho2,
                                                   const Eigen::VectorXd& m);

}  // namespace mcqn
