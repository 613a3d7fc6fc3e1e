#include "mcqn/srbm.hpp"

#include <cmath>

#include "mcqn/errors.hpp"
#include "mcqn/lcp.hpp"
#include "mcqn/rng.hpp"

namespace mcqn {
namespace {

class normal_source {
 public:
  explicit normal_source(std::mt19937_64 gen) : gen_(std::move(gen)) {}

  double next() {
    if (has_) {
      has_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // in (0, 1]
    const double u2 = uniform01();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * M_PI * u2;
    spare_ = rad * std::sin(ang);
    has_ = true;
    return rad * std::cos(ang);
  }

 private:
  double uniform01() { return (gen_() >> 11) * 0x1.0p-53; }
  std::mt19937_64 gen_;
  bool has_ = false;
  double spare_ = 0;
};

}  // namespace

srbm_stats simulate_srbm(const srbm_data& data, const srbm_options& opt,
                         std::vector<Eigen::VectorXd> theta_grid) {
  const int L = static_cast<int>(data.R.rows());
  if (data.R.cols() != L || data.Sigma.rows() != L || data.Sigma.cols() != L ||
      data.b.size() != L)
    throw_error(errc::bad_rates, "reflection data dimensions disagree");
  if ((data.Sigma - data.Sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw_error(errc::bad_rates, "covariance must be symmetric");
  if (data.b.minCoeff() <= 0) throw_error(errc::bad_rates, "b must be positive");
  for (const auto& th : theta_grid)
    if (th.size() != L) throw_error(errc::bad_rates, "theta grid entries must have length L");

  Eigen::LLT<Eigen::MatrixXd> llt(2.0 * data.Sigma);
  if (llt.info() != Eigen::Success)
    throw_error(errc::bad_rates, "covariance not positive definite");

  double h = opt.step;
  if (h <= 0) h = 1e-3 / std::max(1.0, (data.R * data.b).cwiseAbs().maxCoeff());
  double warmup = opt.warmup;
  if (warmup < 0) warmup = 0.1 * opt.horizon;
  if (!(opt.horizon > warmup)) throw_error(errc::bad_rates, "horizon must exceed warmup");
  if (opt.batches < 2) throw_error(errc::bad_rates, "need at least two batches");

  const auto total_steps = static_cast<long long>(std::llround(opt.horizon / h));
  const auto warm_steps = static_cast<long long>(std::llround(warmup / h));
  const long long post_steps = total_steps - warm_steps;
  if (post_steps < opt.batches)
    throw_error(errc::bad_rates, "fewer post-warmup steps than batches");
  const long long steps_per_batch = post_steps / opt.batches;

  const Eigen::MatrixXd noise = std::sqrt(h) * Eigen::MatrixXd(llt.matrixL());
  const Eigen::VectorXd drift_h = -(data.R * data.b) * h;

  normal_source normals(make_stream(opt.seed, stream_tag::srbm_noise, 0));

  std::vector<batch_accumulator> acc_w(L), acc_push(L), acc_phi(theta_grid.size());
  std::vector<std::vector<batch_accumulator>> acc_face(theta_grid.size());
  for (auto& v : acc_face) v.resize(L);

  srbm_stats out;
  out.step = h;
  out.total_time = post_steps * h;
  out.theta_grid = theta_grid;
  out.min_w = 0;
  out.max_complementarity = 0;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(L);
  Eigen::VectorXd xi(L), g(L), dy = Eigen::VectorXd::Zero(L);
  for (long long step = 0; step < total_steps; ++step) {
    for (int i = 0; i < L; ++i) xi[i] = normals.next();
    g = w + drift_h + noise * xi;
    if (g.minCoeff() >= 0) {
      w = g;
      dy.setZero();
    } else {
      const lcp_result sol = solve_lcp(data.R, g);
      if (!sol.ok)
        throw_error(errc::lcp_failure, "no complementary reflection at a step");
      dy = sol.z;
      out.min_w = std::min(out.min_w, sol.w.minCoeff());
      out.max_complementarity = std::max(out.max_complementarity, sol.complementarity);
      w = sol.w.cwiseMax(0.0);
    }
    if (step < warm_steps) continue;
    const int batch =
        static_cast<int>(std::min<long long>((step - warm_steps) / steps_per_batch,
                                             opt.batches - 1));
    for (int l = 0; l < L; ++l) {
      acc_w[l].add(batch, w[l] * h, h);
      acc_push[l].add(batch, dy[l], h);
    }
    for (size_t ti = 0; ti < theta_grid.size(); ++ti) {
      const double e = std::exp(std::min(700.0, theta_grid[ti].dot(w)));
      acc_phi[ti].add(batch, e * h, h);
      for (int l = 0; l < L; ++l)
        if (dy[l] > 0) acc_face[ti][l].add(batch, dy[l] * e, dy[l]);
    }
  }

  out.mean_w.resize(L);
  out.mean_w_se.resize(L);
  out.push_rate.resize(L);
  out.push_rate_se.resize(L);
  out.total_push.resize(L);
  for (int l = 0; l < L; ++l) {
    const estimate we = to_estimate(acc_w[l]);
    const estimate pe = to_estimate(acc_push[l]);
    out.mean_w[l] = we.value;
    out.mean_w_se[l] = we.std_error;
    out.push_rate[l] = pe.value;
    out.push_rate_se[l] = pe.std_error;
    out.total_push[l] = acc_push[l].total_sum();
  }
  out.phi.reserve(theta_grid.size());
  out.phi_face.resize(theta_grid.size());
  for (size_t ti = 0; ti < theta_grid.size(); ++ti) {
    out.phi.push_back(to_estimate(acc_phi[ti]));
    out.phi_face[ti].resize(L);
    for (int l = 0; l < L; ++l) out.phi_face[ti][l] = to_estimate(acc_face[ti][l]);
  }
  return out;
}

std::vector<srbm_residual_row> srbm_bar_residual(const srbm_stats& stats,
                                                 const srbm_data& data) {
  const int L = static_cast<int>(data.R.rows());
  std::vector<srbm_residual_row> rows;
  rows.reserve(stats.theta_grid.size());
  for (size_t ti = 0; ti < stats.theta_grid.size(); ++ti) {
    const Eigen::VectorXd& th = stats.theta_grid[ti];
    srbm_residual_row row;
    row.theta = th;
    if (th.cwiseAbs().maxCoeff() == 0) {
      row.residual = 0;  // both terms carry a factor of θ
      row.std_error = 0;
      rows.push_back(std::move(row));
      continue;
    }
    const double quad = th.dot(data.Sigma * th);
    const estimate& phi = stats.phi.at(ti);
    double res = quad * phi.value;
    double se = std::abs(quad) * phi.std_error;
    for (int l = 0; l < L; ++l) {
      const double coeff = data.b[l] * th.dot(data.R.col(l));
      if (coeff == 0) continue;
      if (!(stats.total_push[l] > 0))
        throw_error(errc::no_boundary_mass, "face " + std::to_string(l + 1) +
                                                " was never pushed");
      const estimate& pf = stats.phi_face[ti][l];
      res += coeff * (pf.value - phi.value);
      se += std::abs(coeff) * pooled_se(pf.std_error, phi.std_error);
    }
    row.residual = res;
    row.std_error = se;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mcqn
