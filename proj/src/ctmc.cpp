#include "mcqn/ctmc.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <cmath>
#include <limits>

#include "mcqn/errors.hpp"

namespace mcqn {
namespace {

constexpr size_t kMaxStates = 10'000'000;
constexpr size_t kDirectThreshold = 100'000;
constexpr double kResidualTol = 1e-10;

}  // namespace

ctmc_model::ctmc_model(const network_spec& net, std::vector<int> caps)
    : net_(net), ps_(build_priority(net)), caps_(std::move(caps)) {
  const int K = net_.num_classes();
  if (static_cast<int>(caps_.size()) != K)
    throw_error(errc::bad_rates, "one cap per class required");
  for (const auto& d : net_.service_dist)
    if (d.kind() != dist_kind::exponential)
      throw_error(errc::bad_rates, "oracle requires exponential service");
  for (int k = 0; k < K; ++k)
    if (net_.is_external(k) && net_.interarrival_dist[k].kind() != dist_kind::exponential)
      throw_error(errc::bad_rates, "oracle requires exponential interarrival times");

  stride_.resize(K);
  size_t n = 1;
  for (int k = 0; k < K; ++k) {
    if (caps_[k] < 1) throw_error(errc::bad_rates, "caps must be >= 1");
    stride_[k] = n;
    const size_t width = static_cast<size_t>(caps_[k]) + 1;
    if (n > kMaxStates / width)
      throw_error(errc::state_space_too_large, "truncated state space exceeds limit");
    n *= width;
  }
  num_states_ = n;
  if (num_states_ > kMaxStates)
    throw_error(errc::state_space_too_large, "truncated state space exceeds limit");

  const Eigen::VectorXd mu = net_.service_rate();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(num_states_ * (K + 2));
  std::vector<int> z(K);
  for (size_t idx = 0; idx < num_states_; ++idx) {
    decode(idx, z);
    double out_rate = 0;
    auto add = [&](size_t to, double rate) {
      if (rate <= 0) return;
      out_rate += rate;
      if (to != idx) trips.emplace_back(static_cast<int>(idx), static_cast<int>(to), rate);
    };
    for (int k = 0; k < K; ++k) {
      if (!net_.is_external(k)) continue;
      if (z[k] < caps_[k]) add(idx + stride_[k], net_.arrival_rate[k]);
      // arrival at the cap is lost: no transition, no rate
    }
    for (int j = 0; j < net_.num_stations; ++j) {
      const int k = serving_class(ps_, j, z);
      if (k < 0) continue;
      double exit_rate = mu[k] * (1 - net_.routing.row(k).sum());
      for (int l = 0; l < K; ++l) {
        const double p = net_.routing(k, l);
        if (p <= 0) continue;
        if (l == k) continue;  // self-routing leaves the state unchanged
        if (z[l] < caps_[l])
          add(idx - stride_[k] + stride_[l], mu[k] * p);
        else
          exit_rate += mu[k] * p;  // transfer into a full class exits
      }
      add(idx - stride_[k], exit_rate);
    }
    // self-routing transitions cancel against the diagonal, so excluding them
    // above keeps row sums exactly zero
    trips.emplace_back(static_cast<int>(idx), static_cast<int>(idx), -out_rate);
  }
  Q_.resize(static_cast<int>(num_states_), static_cast<int>(num_states_));
  Q_.setFromTriplets(trips.begin(), trips.end());
}

void ctmc_model::decode(size_t idx, std::vector<int>& z) const {
  const int K = net_.num_classes();
  z.resize(K);
  for (int k = 0; k < K; ++k) {
    const size_t width = static_cast<size_t>(caps_[k]) + 1;
    z[k] = static_cast<int>((idx / stride_[k]) % width);
  }
}

void ctmc_model::solve() {
  const int n = static_cast<int>(num_states_);
  // (Qᵀ with one row replaced by 1ᵀ) π = e_row enforces normalization
  Eigen::SparseMatrix<double> M = Q_.transpose();
  const int fix_row = n - 1;
  // zero the fixed row, then set it to ones
  for (int col = 0; col < M.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(M, col); it; ++it)
      if (it.row() == fix_row) it.valueRef() = 0;
  std::vector<Eigen::Triplet<double>> ones;
  ones.reserve(n);
  for (int col = 0; col < n; ++col) ones.emplace_back(fix_row, col, 1.0);
  Eigen::SparseMatrix<double> ones_m(n, n);
  ones_m.setFromTriplets(ones.begin(), ones.end());
  M += ones_m;
  M.makeCompressed();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[fix_row] = 1;

  bool solved = false;
  if (num_states_ < kDirectThreshold) {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(M);
    if (lu.info() == Eigen::Success) {
      pi_ = lu.solve(rhs);
      solved = lu.info() == Eigen::Success;
    }
  }
  if (!solved) {
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> solver;
    solver.setTolerance(1e-14);
    solver.setMaxIterations(2000);
    solver.compute(M);
    if (solver.info() == Eigen::Success) {
      pi_ = solver.solve(Eigen::VectorXd(rhs));
      solved = solver.info() == Eigen::Success;
    }
  }
  auto finish = [&]() {
    pi_ = pi_.cwiseMax(0.0);
    const double total = pi_.sum();
    if (!(total > 0)) return false;
    pi_ /= total;
    residual_ = (Eigen::RowVectorXd(pi_.transpose()) * Q_).cwiseAbs().maxCoeff();
    return residual_ < kResidualTol;
  };
  if (solved && finish()) return;

  // uniformized power iteration: π ← π (I + Q/Λ)
  double lambda_max = 0;
  for (int i = 0; i < n; ++i) lambda_max = std::max(lambda_max, -Q_.coeff(i, i));
  const double scale = 1.05 * std::max(lambda_max, 1e-12);
  Eigen::RowVectorXd p = Eigen::RowVectorXd::Constant(n, 1.0 / n);
  if (solved && pi_.size() == n && pi_.sum() > 0) p = pi_.transpose() / pi_.sum();
  for (int it = 0; it < 500000; ++it) {
    Eigen::RowVectorXd delta = (p * Q_) / scale;
    p += delta;
    p = p.cwiseMax(0.0);
    p /= p.sum();
    if (it % 64 == 0) {
      const double res = (p * Q_).cwiseAbs().maxCoeff();
      if (res < kResidualTol) break;
    }
  }
  pi_ = p.transpose();
  if (!finish())
    throw_error(errc::solver_failure,
                "stationary solve residual " + std::to_string(residual_));
}

double ctmc_model::expect(const std::function<double(const std::vector<int>&)>& f) const {
  std::vector<int> z;
  double acc = 0;
  for (size_t idx = 0; idx < num_states_; ++idx) {
    decode(idx, z);
    acc += pi_[static_cast<int>(idx)] * f(z);
  }
  return acc;
}

double ctmc_model::prob(const std::function<bool(const std::vector<int>&)>& pred) const {
  return expect([&](const std::vector<int>& z) { return pred(z) ? 1.0 : 0.0; });
}

double ctmc_model::truncation_mass() const {
  return prob([&](const std::vector<int>& z) {
    for (size_t k = 0; k < z.size(); ++k)
      if (z[k] == caps_[k]) return true;
    return false;
  });
}

double ctmc_model::beta(int k) const {
  const auto& H = ps_.H[k];
  return prob([&](const std::vector<int>& z) {
    for (int l : H)
      if (z[l] > 0) return false;
    return true;
  });
}

double ctmc_model::mean_z(int k) const {
  return expect([&](const std::vector<int>& z) { return static_cast<double>(z[k]); });
}

double ctmc_model::second_moment_z(int k) const {
  return expect([&](const std::vector<int>& z) { return static_cast<double>(z[k]) * z[k]; });
}

Eigen::VectorXd ctmc_model::marginal(int k, int zmax) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(zmax + 1);
  std::vector<int> z;
  for (size_t idx = 0; idx < num_states_; ++idx) {
    decode(idx, z);
    if (z[k] <= zmax) out[z[k]] += pi_[static_cast<int>(idx)];
  }
  return out;
}

double ctmc_model::phi(const Eigen::VectorXd& theta, double s) const {
  const double cap = s > 0 ? 1.0 / s : std::numeric_limits<double>::infinity();
  return expect([&](const std::vector<int>& z) {
    double e = 0;
    for (size_t k = 0; k < z.size(); ++k) {
      const double zk = ps_.is_lowest[k] ? z[k] : std::min<double>(z[k], cap);
      e += theta[static_cast<int>(k)] * zk;
    }
    return std::exp(e);
  });
}

double ctmc_model::phi_given_idle(const Eigen::VectorXd& theta, double s, int k) const {
  const double cap = s > 0 ? 1.0 / s : std::numeric_limits<double>::infinity();
  const auto& H = ps_.H[k];
  double num = 0, den = 0;
  std::vector<int> z;
  for (size_t idx = 0; idx < num_states_; ++idx) {
    decode(idx, z);
    bool idle = true;
    for (int l : H)
      if (z[l] > 0) {
        idle = false;
        break;
      }
    if (!idle) continue;
    const double p = pi_[static_cast<int>(idx)];
    den += p;
    double e = 0;
    for (size_t kk = 0; kk < z.size(); ++kk) {
      const double zk = ps_.is_lowest[kk] ? z[kk] : std::min<double>(z[kk], cap);
      e += theta[static_cast<int>(kk)] * zk;
    }
    num += p * std::exp(e);
  }
  if (!(den > 0)) throw_error(errc::conditioning_event_empty, "idle event has no mass");
  return num / den;
}

}  // namespace mcqn
