#include "mcqn/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mcqn/errors.hpp"

namespace mcqn {
namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kTrafficTol = 1e-10;
constexpr double kCriticalTol = 1e-10;

}  // namespace

void validate_spec(const network_spec& net) {
  const int K = net.num_classes();
  const int J = net.num_stations;
  if (K < 1 || J < 1) throw_error(errc::bad_rates, "network needs >= 1 class and station");
  auto size_ok = [&](size_t n) { return static_cast<int>(n) == K; };
  if (!size_ok(net.priority_rank.size()) || net.routing.rows() != K || net.routing.cols() != K ||
      net.arrival_rate.size() != K || net.mean_service.size() != K ||
      !size_ok(net.service_dist.size()) || !size_ok(net.interarrival_dist.size()))
    throw_error(errc::bad_rates, "inconsistent per-class array sizes");

  std::vector<std::set<int>> ranks(J);
  std::vector<int> station_count(J, 0);
  for (int k = 0; k < K; ++k) {
    const int j = net.station_of[k];
    if (j < 0 || j >= J) throw_error(errc::bad_rates, "station index out of range");
    ++station_count[j];
    if (!ranks[j].insert(net.priority_rank[k]).second)
      throw_error(errc::non_strict_priority,
                  "duplicate priority rank at station " + std::to_string(j + 1));
  }
  for (int j = 0; j < J; ++j)
    if (station_count[j] == 0)
      throw_error(errc::bad_rates, "station " + std::to_string(j + 1) + " has no classes");

  bool any_arrival = false;
  for (int k = 0; k < K; ++k) {
    if (net.arrival_rate[k] < 0) throw_error(errc::bad_rates, "negative arrival rate");
    if (net.arrival_rate[k] > 0) any_arrival = true;
    if (!(net.mean_service[k] > 0)) throw_error(errc::bad_rates, "mean service must be > 0");
  }
  if (!any_arrival) throw_error(errc::bad_rates, "no external arrivals");

  std::vector<bool> exits(K, false);
  for (int k = 0; k < K; ++k) {
    double row = 0;
    for (int l = 0; l < K; ++l) {
      if (net.routing(k, l) < 0) throw_error(errc::bad_rates, "negative routing probability");
      row += net.routing(k, l);
    }
    if (row > 1 + kRowSumTol) throw_error(errc::bad_rates, "routing row sum exceeds 1");
    exits[k] = row < 1 - kRowSumTol;
  }
  // open network: every class reaches a class with positive exit probability
  std::vector<bool> reach = exits;
  for (bool changed = true; changed;) {
    changed = false;
    for (int k = 0; k < K; ++k) {
      if (reach[k]) continue;
      for (int l = 0; l < K; ++l)
        if (net.routing(k, l) > 0 && reach[l]) {
          reach[k] = true;
          changed = true;
          break;
        }
    }
  }
  for (int k = 0; k < K; ++k)
    if (!reach[k])
      throw_error(errc::non_open_network,
                  "class " + std::to_string(k + 1) + " cannot reach the outside");

  if (net.heavy_traffic) {
    if (net.heavy_traffic->lambda_star.size() != K || net.heavy_traffic->m_star.size() != K)
      throw_error(errc::bad_rates, "heavy-traffic direction size mismatch");
    for (int k = 0; k < K; ++k)
      if (net.heavy_traffic->lambda_star[k] != 0 && net.arrival_rate[k] == 0)
        throw_error(errc::bad_rates, "lambda_star supported outside arrival classes");
  }
}

priority_structure build_priority(const network_spec& net) {
  const int K = net.num_classes();
  const int J = net.num_stations;
  priority_structure ps;
  ps.station_classes.resize(J);
  for (int k = 0; k < K; ++k) ps.station_classes[net.station_of[k]].push_back(k);
  for (auto& sc : ps.station_classes)
    std::sort(sc.begin(), sc.end(),
              [&](int a, int b) { return net.priority_rank[a] < net.priority_rank[b]; });

  ps.H.resize(K);
  ps.k_plus.assign(K, -1);
  ps.k_minus.assign(K, -1);
  ps.lowest.resize(J);
  ps.is_lowest.assign(K, false);
  ps.is_top.assign(K, false);
  ps.constituency = Eigen::MatrixXd::Zero(J, K);
  for (int j = 0; j < J; ++j) {
    const auto& sc = ps.station_classes[j];
    for (size_t i = 0; i < sc.size(); ++i) {
      const int k = sc[i];
      ps.constituency(j, k) = 1;
      if (i > 0) ps.k_plus[k] = sc[i - 1];
      if (i + 1 < sc.size()) ps.k_minus[k] = sc[i + 1];
      ps.H[k].assign(sc.begin(), sc.begin() + i + 1);
      std::sort(ps.H[k].begin(), ps.H[k].end());
    }
    ps.is_top[sc.front()] = true;
    ps.lowest[j] = sc.back();
    ps.is_lowest[sc.back()] = true;
  }
  return ps;
}

traffic_solution solve_traffic(const network_spec& net) {
  const int K = net.num_classes();
  const auto ps = build_priority(net);
  const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(K, K) - net.routing.transpose();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  traffic_solution ts;
  ts.alpha = lu.solve(net.arrival_rate);
  const double resid = (ts.alpha - net.arrival_rate - net.routing.transpose() * ts.alpha)
                           .cwiseAbs()
                           .maxCoeff();
  if (!(resid < kTrafficTol))
    throw_error(errc::solver_failure, "traffic equation residual " + std::to_string(resid));
  ts.gamma = ts.alpha.cwiseProduct(net.mean_service);
  ts.rho = ps.constituency * ts.gamma;
  ts.beta.resize(K);
  for (int k = 0; k < K; ++k) {
    double used = 0;
    for (int l : ps.H[k]) used += ts.gamma[l];
    ts.beta[k] = 1 - used;
  }
  return ts;
}

ht_family make_family(const network_spec& net) {
  validate_spec(net);
  if (!net.heavy_traffic)
    throw_error(errc::bad_rates, "network has no heavy-traffic directions");
  const int K = net.num_classes();
  const auto ps = build_priority(net);
  const auto ts = solve_traffic(net);
  for (int j = 0; j < net.num_stations; ++j)
    if (std::abs(ts.rho[j] - 1) > kCriticalTol)
      throw_error(errc::bad_normalization,
                  "station " + std::to_string(j + 1) + " load is not critical: rho=" +
                      std::to_string(ts.rho[j]));

  ht_family fam;
  fam.base = net;
  const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(K, K) - net.routing.transpose();
  fam.alpha_star = Eigen::PartialPivLU<Eigen::MatrixXd>(M).solve(net.heavy_traffic->lambda_star);
  fam.c_station = ps.constituency * (net.heavy_traffic->m_star.cwiseProduct(ts.alpha) +
                                     net.mean_service.cwiseProduct(fam.alpha_star));
  for (int j = 0; j < net.num_stations; ++j)
    if (!(fam.c_station[j] > 0))
      throw_error(errc::bad_normalization, "direction vector c must be positive");
  fam.b.resize(net.num_stations);
  for (int j = 0; j < net.num_stations; ++j) fam.b[j] = fam.c_station[j];
  return fam;
}

network_spec instantiate_at(const ht_family& family, double r) {
  if (!(r >= 0)) throw_error(errc::negative_rate, "r must be >= 0");
  network_spec net = family.base;
  const auto& dir = *family.base.heavy_traffic;
  net.arrival_rate = family.base.arrival_rate - r * dir.lambda_star;
  net.mean_service = family.base.mean_service - r * dir.m_star;
  for (int k = 0; k < net.num_classes(); ++k) {
    if (net.arrival_rate[k] < 0)
      throw_error(errc::negative_rate, "arrival rate negative at r=" + std::to_string(r));
    if (!(net.mean_service[k] > 0))
      throw_error(errc::negative_rate, "mean service nonpositive at r=" + std::to_string(r));
  }
  net.heavy_traffic.reset();
  return net;
}

network_spec make_two_station_five_class(const Eigen::VectorXd& m,
                                         const std::vector<distribution_model>& service_dist,
                                         const distribution_model& interarrival,
                                         double lambda1) {
  if (m.size() != 5 || service_dist.size() != 5)
    throw_error(errc::bad_rates, "five service means and distributions required");
  network_spec net;
  net.num_stations = 2;
  net.station_of = {0, 1, 0, 1, 0};
  net.priority_rank = {3, 1, 2, 2, 1};  // station 0: 5 > 3 > 1; station 1: 2 > 4
  net.routing = Eigen::MatrixXd::Zero(5, 5);
  for (int k = 0; k + 1 < 5; ++k) net.routing(k, k + 1) = 1;
  net.arrival_rate = Eigen::VectorXd::Zero(5);
  net.arrival_rate[0] = lambda1;
  net.mean_service = m;
  net.service_dist = service_dist;
  net.interarrival_dist.assign(5, distribution_model::exponential());
  net.interarrival_dist[0] = interarrival;
  return net;
}

network_spec make_two_station_five_class_critical(
    const Eigen::VectorXd& m, const std::vector<distribution_model>& service_dist,
    const distribution_model& interarrival) {
  const double w1 = m[0] + m[2] + m[4];
  const double w2 = m[1] + m[3];
  if (std::abs(w1 - w2) > 1e-12)
    throw_error(errc::bad_normalization,
                "stations must be balanced for a common critical arrival rate");
  network_spec net = make_two_station_five_class(m, service_dist, interarrival, 1.0 / w1);
  ht_directions dir;
  dir.lambda_star = Eigen::VectorXd::Zero(5);
  dir.lambda_star[0] = 1.0 / w1;
  dir.m_star = Eigen::VectorXd::Zero(5);
  net.heavy_traffic = dir;
  return net;
}

network_spec make_single_class_critical(const distribution_model& interarrival,
                                        const distribution_model& service) {
  network_spec net;
  net.num_stations = 1;
  net.station_of = {0};
  net.priority_rank = {1};
  net.routing = Eigen::MatrixXd::Zero(1, 1);
  net.arrival_rate = Eigen::VectorXd::Ones(1);
  net.mean_service = Eigen::VectorXd::Ones(1);
  net.service_dist = {service};
  net.interarrival_dist = {interarrival};
  ht_directions dir;
  dir.lambda_star = Eigen::VectorXd::Ones(1);
  dir.m_star = Eigen::VectorXd::Zero(1);
  net.heavy_traffic = dir;
  return net;
}

int serving_class(const priority_structure& ps, int station, const std::vector<int>& z) {
  for (int k : ps.station_classes[station])
    if (z[k] > 0) return k;
  return -1;
}

network_spec make_priority_two_class(double rho1, double rho2, const Eigen::VectorXd& m) {
  if (m.size() != 2) throw_error(errc::bad_rates, "two service means required");
  network_spec net;
  net.num_stations = 1;
  net.station_of = {0, 0};
  net.priority_rank = {1, 2};
  net.routing = Eigen::MatrixXd::Zero(2, 2);
  net.arrival_rate.resize(2);
  net.arrival_rate << rho1 / m[0], rho2 / m[1];
  net.mean_service = m;
  net.service_dist.assign(2, distribution_model::exponential());
  net.interarrival_dist.assign(2, distribution_model::exponential());
  return net;
}

}  // namespace mcqn
