#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "mcqn/network.hpp"
#include "mcqn/stats.hpp"

namespace mcqn {

// X = (Z, R_e, R_s).  R_e[k] = +inf for classes without external arrivals.
// R_s[k] is the remaining service of the lead class-k job; when Z_k = 0 it
// holds the full requirement of the next job to enter service.  Clocks run
// at unit rate: R_e always, R_s[k] iff Z_k > 0 and Z_{H+(k)} = 0.
struct sim_state {
  std::vector<int> z;
  Eigen::VectorXd re;
  Eigen::VectorXd rs;
};

enum class event_kind { external_arrival, service_completion };

struct event_record {
  event_kind kind = event_kind::external_arrival;
  int cls = -1;
  double time = 0;
  sim_state pre, post;  // X(t-) has the triggering clock at 0; X(t) is fresh
  int routed_to = -1;   // completions: destination class, -1 = exit
};

// Time-integrated exp(affine) functional of the state:
//   exponent(x) = Σ_k z_coeff_k·min(z_k, z_cap_k)
//               + Σ_{k∈E} e_coeff_k·min(λ_k·R_e_k, clock_cap)
//               + Σ_k     s_coeff_k·min(μ_k·R_s_k, clock_cap)
// Between events the exponent is piecewise affine in t (running clocks
// decrease at unit rate; a capped product adds one breakpoint when it
// crosses clock_cap), so each interval integrates in closed form.
struct mgf_query {
  Eigen::VectorXd z_coeff, z_cap;  // z_cap entry inf = uncapped
  Eigen::VectorXd e_coeff, s_coeff;
  double clock_cap = std::numeric_limits<double>::infinity();
};

// E[exp(⟨θ, Z⟩)], no truncation, no clock terms.
[[nodiscard]] mgf_query plain_mgf_query(int num_classes, const Eigen::VectorXd& theta);

// Event-average functional; evaluated at every event, averaged per
// (kind, class) counting process.
using palm_functional = std::function<double(const event_record&)>;

enum class clock_side { interarrival, service };

// Time-average of R^n·1(R >= c) for the chosen residual clock.  The service
// side accumulates only while the class is in service (its clock runs), the
// interarrival side always.
struct tail_request {
  clock_side side = clock_side::interarrival;
  int cls = 0;
  int power = 0;
  double cutoff = 0;
};

struct sim_options {
  double horizon = 1e5;  // total simulated time
  double warmup = -1;    // absolute; negative = 10% of horizon
  int batches = 32;
  uint64_t seed = 1;
  int log_first_events = 0;  // retain this many event records post-warmup
};

struct palm_table {
  std::vector<estimate> arrival, completion;  // indexed by class
};

struct steady_stats {
  double total_time = 0;  // post-warmup span
  double window = 0;
  size_t total_events = 0;
  std::vector<size_t> arrival_count, completion_count;  // per class
  Eigen::VectorXd lambda_hat, lambda_se;                // arrivals / time
  Eigen::VectorXd alpha_hat, alpha_se;                  // completions / time
  Eigen::VectorXd mean_z, mean_z_se;
  Eigen::VectorXd beta_hat, beta_se;  // P(Z_{H(k)} = 0) per class
  std::vector<estimate> mgf;              // per registered query
  std::vector<estimate> mgf_conditional;  // per registered conditional
  std::vector<palm_table> palm;           // per registered functional
  std::vector<estimate> tail;             // per registered tail request
  std::vector<tail_request> tail_requests;
  bool divergence_warning = false;
  std::vector<event_record> event_log;
};

class pdmp_simulator {
 public:
  pdmp_simulator(network_spec net, sim_options opt);

  int add_mgf_query(mgf_query q);
  // E[f | Z_{H(idle_class)} = 0] for the already-registered query.
  int add_conditional(int query_index, int idle_class);
  int add_palm_functional(palm_functional f);
  int add_tail_request(tail_request t);

  steady_stats run();

  [[nodiscard]] const network_spec& net() const { return net_; }
  [[nodiscard]] const priority_structure& priority() const { return ps_; }

 private:
  network_spec net_;
  priority_structure ps_;
  sim_options opt_;
  Eigen::VectorXd mu_;
  std::vector<mgf_query> queries_;
  std::vector<std::pair<int, int>> conditionals_;  // (query index, idle class)
  std::vector<palm_functional> palm_;
  std::vector<tail_request> tails_;
};

// Rates, queue means, and idle probabilities only.
[[nodiscard]] steady_stats simulate(const network_spec& net, const sim_options& opt);

// Standard estimator bundle for the scaled test function at (θ, r, ε₀):
//   phi  : E[g_{rθ,r}(Z)]           (z-caps 1/r on non-lowest classes)
//   psi  : E[f^{(r)}_θ(X)]          (adds clock exponents at (rθ, r^{1-ε₀}))
//   *_k  : the same conditioned on Z_{H(k)} = 0, k = 0..K-1
struct mgf_bundle {
  int phi = -1, psi = -1;
  std::vector<int> phi_k, psi_k;  // conditional indices
};

[[nodiscard]] mgf_bundle add_scaled_mgf_bundle(pdmp_simulator& sim,
                                               const Eigen::VectorXd& theta, double r,
                                               double eps0);

struct mgf_estimates {
  estimate phi, psi;
  std::vector<estimate> phi_k, psi_k;
  std::vector<estimate> beta;  // empirical conditioning-event probabilities
};

// Throws conditioning_event_empty when an idle event never occurred.
[[nodiscard]] mgf_estimates estimate_mgf(const steady_stats& stats, const mgf_bundle& b);

// Throws no_events when the counting process had zero occurrences.
[[nodiscard]] estimate collect_palm(const steady_stats& stats, int functional_index,
                                    event_kind kind, int cls);

struct tail_report {
  estimate left;  // simulated time-average
  double right;   // exact from distribution moments and traffic solution
};

// Both sides of the residual-clock tail identity for registered request i.
[[nodiscard]] tail_report remaining_time_tail(const network_spec& net,
                                              const steady_stats& stats, int i);

}  // namespace mcqn
