#include "mcqn/pdmp.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "mcqn/errors.hpp"
#include "mcqn/rng.hpp"
#include "mcqn/transforms.hpp"

namespace mcqn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

network_spec validated(network_spec net) {
  validate_spec(net);
  return net;
}

double uniform01(std::mt19937_64& gen) { return (gen() >> 11) * 0x1.0p-53; }

// ∫₀^dt exp(a + (b-a) s/dt) ds with the exponent affine between its endpoint
// values a and b
double int_exp_affine(double a, double b, double dt) {
  if (!(dt > 0)) return 0;
  a = std::min(a, 700.0);
  b = std::min(b, 700.0);
  const double d = b - a;
  if (std::abs(d) < 1e-8) return dt * std::exp(0.5 * (a + b)) * (1 + d * d / 24);
  return dt * std::exp(a) * std::expm1(d) / d;
}

// ∫₀^dt (r0-s)^n 1(r0-s >= c) ds for a clock running down from r0
double tail_piece(double r0, double dt, int n, double c) {
  if (!(r0 > c)) return 0;
  const double tend = std::min(dt, r0 - c);
  if (!(tend > 0)) return 0;
  return (std::pow(r0, n + 1) - std::pow(r0 - tend, n + 1)) / (n + 1);
}

}  // namespace

mgf_query plain_mgf_query(int num_classes, const Eigen::VectorXd& theta) {
  mgf_query q;
  q.z_coeff = theta;
  q.z_cap = Eigen::VectorXd::Constant(num_classes, kInf);
  q.e_coeff = Eigen::VectorXd::Zero(num_classes);
  q.s_coeff = Eigen::VectorXd::Zero(num_classes);
  return q;
}

pdmp_simulator::pdmp_simulator(network_spec net, sim_options opt)
    : net_(validated(std::move(net))),
      ps_(build_priority(net_)),
      opt_(opt),
      mu_(net_.service_rate()) {
  if (!(opt_.horizon > 0)) throw_error(errc::bad_rates, "horizon must be positive");
  if (opt_.warmup < 0) opt_.warmup = 0.1 * opt_.horizon;
  if (opt_.warmup >= opt_.horizon)
    throw_error(errc::bad_rates, "warmup must end before the horizon");
  if (opt_.batches < 2) throw_error(errc::bad_rates, "need at least two batches");
}

int pdmp_simulator::add_mgf_query(mgf_query q) {
  const auto K = static_cast<Eigen::Index>(net_.num_classes());
  if (q.z_coeff.size() != K || q.z_cap.size() != K || q.e_coeff.size() != K ||
      q.s_coeff.size() != K)
    throw_error(errc::bad_rates, "query vectors must have one entry per class");
  queries_.push_back(std::move(q));
  return static_cast<int>(queries_.size()) - 1;
}

int pdmp_simulator::add_conditional(int query_index, int idle_class) {
  if (query_index < 0 || query_index >= static_cast<int>(queries_.size()))
    throw_error(errc::bad_rates, "conditional refers to an unregistered query");
  if (idle_class < 0 || idle_class >= net_.num_classes())
    throw_error(errc::bad_rates, "conditional class out of range");
  conditionals_.emplace_back(query_index, idle_class);
  return static_cast<int>(conditionals_.size()) - 1;
}

int pdmp_simulator::add_palm_functional(palm_functional f) {
  palm_.push_back(std::move(f));
  return static_cast<int>(palm_.size()) - 1;
}

int pdmp_simulator::add_tail_request(tail_request t) {
  if (t.cls < 0 || t.cls >= net_.num_classes())
    throw_error(errc::bad_rates, "tail request class out of range");
  if (t.power < 0 || t.power > 3 || t.cutoff < 0)
    throw_error(errc::bad_rates, "tail request wants power in 0..3 and cutoff >= 0");
  tails_.push_back(t);
  return static_cast<int>(tails_.size()) - 1;
}

steady_stats pdmp_simulator::run() {
  const int K = net_.num_classes();
  const int B = opt_.batches;
  const double warmup = opt_.warmup;
  const double horizon = opt_.horizon;
  const double window = (horizon - warmup) / B;

  std::vector<std::mt19937_64> gen_e, gen_s, gen_r;
  gen_e.reserve(K);
  gen_s.reserve(K);
  gen_r.reserve(K);
  for (int k = 0; k < K; ++k) {
    gen_e.push_back(make_stream(opt_.seed, stream_tag::interarrival, k));
    gen_s.push_back(make_stream(opt_.seed, stream_tag::service, k));
    gen_r.push_back(make_stream(opt_.seed, stream_tag::routing, k));
  }
  auto draw_interarrival = [&](int k) {
    return net_.interarrival_dist[k].sample(gen_e[k]) / net_.arrival_rate[k];
  };
  auto draw_service = [&](int k) {
    return net_.mean_service[k] * net_.service_dist[k].sample(gen_s[k]);
  };

  sim_state st;
  st.z.assign(K, 0);
  st.re = Eigen::VectorXd::Constant(K, kInf);
  st.rs.resize(K);
  for (int k = 0; k < K; ++k) {
    if (net_.is_external(k)) st.re[k] = draw_interarrival(k);
    st.rs[k] = draw_service(k);
  }

  std::vector<char> is_serving(K, 0);
  auto refresh_serving = [&] {
    std::fill(is_serving.begin(), is_serving.end(), 0);
    for (int j = 0; j < net_.num_stations; ++j) {
      const int k = serving_class(ps_, j, st.z);
      if (k >= 0) is_serving[k] = 1;
    }
  };
  refresh_serving();

  auto exponent_at = [&](const mgf_query& q, double dt) {
    double e = 0;
    for (int k = 0; k < K; ++k) {
      const double zc = q.z_coeff[k];
      if (zc != 0) e += zc * std::min<double>(st.z[k], q.z_cap[k]);
      const double ec = q.e_coeff[k];
      if (ec != 0 && net_.is_external(k))
        e += ec * std::min(net_.arrival_rate[k] * (st.re[k] - dt), q.clock_cap);
      const double sc = q.s_coeff[k];
      if (sc != 0)
        e += sc * std::min(mu_[k] * (st.rs[k] - (is_serving[k] ? dt : 0.0)), q.clock_cap);
    }
    return e;
  };
  std::vector<double> bp;
  auto integrate_query = [&](const mgf_query& q, double delta) {
    bp.clear();
    const double cap = q.clock_cap;
    if (std::isfinite(cap)) {
      for (int k = 0; k < K; ++k) {
        if (q.e_coeff[k] != 0 && net_.is_external(k)) {
          const double p0 = net_.arrival_rate[k] * st.re[k];
          if (p0 > cap) {
            const double tb = (p0 - cap) / net_.arrival_rate[k];
            if (tb < delta) bp.push_back(tb);
          }
        }
        if (q.s_coeff[k] != 0 && is_serving[k]) {
          const double p0 = mu_[k] * st.rs[k];
          if (p0 > cap) {
            const double tb = (p0 - cap) / mu_[k];
            if (tb < delta) bp.push_back(tb);
          }
        }
      }
      std::sort(bp.begin(), bp.end());
    }
    double acc = 0, t1 = 0, f1 = exponent_at(q, 0);
    for (double tb : bp) {
      if (tb <= t1) continue;
      const double f2 = exponent_at(q, tb);
      acc += int_exp_affine(f1, f2, tb - t1);
      t1 = tb;
      f1 = f2;
    }
    const double f2 = exponent_at(q, delta);
    acc += int_exp_affine(f1, f2, delta - t1);
    return acc;
  };

  std::vector<batch_accumulator> acc_rate_e(K), acc_rate_s(K), acc_z(K), acc_beta(K);
  std::vector<batch_accumulator> acc_q(queries_.size()), acc_c(conditionals_.size());
  std::vector<batch_accumulator> acc_tail(tails_.size());
  std::vector<std::vector<batch_accumulator>> acc_palm_e(palm_.size()),
      acc_palm_s(palm_.size());
  for (auto& v : acc_palm_e) v.resize(K);
  for (auto& v : acc_palm_s) v.resize(K);
  batch_accumulator acc_sumz;
  std::vector<size_t> cnt_e(K, 0), cnt_s(K, 0);
  size_t total_events = 0;

  steady_stats out;
  const bool want_records = !palm_.empty() || opt_.log_first_events > 0;
  event_record scratch;

  std::vector<double> qint(queries_.size(), 0.0);
  std::vector<char> idle(K, 0);
  std::vector<int> due_arr, due_cmp;

  double t = 0;
  int batch = -1;          // -1 while in warmup
  int boundary_idx = 0;    // next boundary = warmup + boundary_idx * window
  double next_boundary = warmup;

  while (true) {
    double dt_event = kInf;
    for (int k = 0; k < K; ++k) {
      if (net_.is_external(k)) dt_event = std::min(dt_event, st.re[k]);
      if (is_serving[k]) dt_event = std::min(dt_event, st.rs[k]);
    }
    const double to_boundary = next_boundary - t;
    const bool hit_boundary = to_boundary <= dt_event;
    const double delta = hit_boundary ? to_boundary : dt_event;

    if (batch >= 0 && delta > 0) {
      int sum_z = 0;
      for (int k = 0; k < K; ++k) {
        sum_z += st.z[k];
        bool id = true;
        for (int l : ps_.H[k])
          if (st.z[l] > 0) {
            id = false;
            break;
          }
        idle[k] = id;
        acc_z[k].add(batch, st.z[k] * delta, delta);
        acc_beta[k].add(batch, id ? delta : 0.0, delta);
      }
      acc_sumz.add(batch, sum_z * delta, delta);
      for (size_t qi = 0; qi < queries_.size(); ++qi) {
        qint[qi] = integrate_query(queries_[qi], delta);
        acc_q[qi].add(batch, qint[qi], delta);
      }
      for (size_t ci = 0; ci < conditionals_.size(); ++ci) {
        const auto& [qi, k] = conditionals_[ci];
        if (idle[k]) acc_c[ci].add(batch, qint[qi], delta);
      }
      for (size_t ti = 0; ti < tails_.size(); ++ti) {
        const auto& tr = tails_[ti];
        double v = 0;
        if (tr.side == clock_side::interarrival) {
          if (net_.is_external(tr.cls))
            v = tail_piece(st.re[tr.cls], delta, tr.power, tr.cutoff);
        } else if (is_serving[tr.cls]) {
          v = tail_piece(st.rs[tr.cls], delta, tr.power, tr.cutoff);
        }
        acc_tail[ti].add(batch, v, delta);
      }
    }

    if (delta > 0) {
      for (int k = 0; k < K; ++k) {
        if (net_.is_external(k)) st.re[k] -= delta;
        if (is_serving[k]) st.rs[k] -= delta;
      }
    }
    if (hit_boundary) {
      t = next_boundary;
      if (boundary_idx == B) break;  // final boundary is the horizon
      batch = boundary_idx;
      ++boundary_idx;
      next_boundary = warmup + boundary_idx * window;
    } else {
      t += delta;
    }

    due_arr.clear();
    due_cmp.clear();
    for (int k = 0; k < K; ++k) {
      if (net_.is_external(k) && st.re[k] <= 0) due_arr.push_back(k);
      if (is_serving[k] && st.rs[k] <= 0) due_cmp.push_back(k);
    }
    if (due_arr.empty() && due_cmp.empty()) continue;

    const bool rec = want_records && batch >= 0;
    auto run_palm = [&](std::vector<std::vector<batch_accumulator>>& table, int k) {
      for (size_t f = 0; f < palm_.size(); ++f)
        table[f][k].add(batch, palm_[f](scratch), 1.0);
      if (static_cast<int>(out.event_log.size()) < opt_.log_first_events)
        out.event_log.push_back(scratch);
    };
    for (int k : due_arr) {
      if (rec) {
        scratch.kind = event_kind::external_arrival;
        scratch.cls = k;
        scratch.time = t;
        scratch.routed_to = -1;
        scratch.pre = st;
      }
      st.z[k] += 1;
      st.re[k] = draw_interarrival(k);
      if (rec) {
        scratch.post = st;
        run_palm(acc_palm_e, k);
      }
      if (batch >= 0) {
        ++cnt_e[k];
        ++total_events;
        acc_rate_e[k].add(batch, 1.0, 0.0);
      }
    }
    for (int k : due_cmp) {
      if (st.z[k] <= 0)
        throw_error(errc::solver_failure, "event block produced a completion with no job");
      int dest = -1;
      {
        const double u = uniform01(gen_r[k]);
        double cum = 0;
        for (int l = 0; l < K; ++l) {
          cum += net_.routing(k, l);
          if (u < cum) {
            dest = l;
            break;
          }
        }
      }
      if (rec) {
        scratch.kind = event_kind::service_completion;
        scratch.cls = k;
        scratch.time = t;
        scratch.routed_to = dest;
        scratch.pre = st;
      }
      st.z[k] -= 1;
      if (dest >= 0) st.z[dest] += 1;
      st.rs[k] = draw_service(k);
      if (rec) {
        scratch.post = st;
        run_palm(acc_palm_s, k);
      }
      if (batch >= 0) {
        ++cnt_s[k];
        ++total_events;
        acc_rate_s[k].add(batch, 1.0, 0.0);
      }
    }
    refresh_serving();
  }

  // every batch spans exactly one window of time
  for (int b = 0; b < B; ++b)
    for (int k = 0; k < K; ++k) {
      acc_rate_e[k].add(b, 0.0, window);
      acc_rate_s[k].add(b, 0.0, window);
    }

  out.total_time = horizon - warmup;
  out.window = window;
  out.total_events = total_events;
  out.arrival_count = cnt_e;
  out.completion_count = cnt_s;
  out.lambda_hat.resize(K);
  out.lambda_se.resize(K);
  out.alpha_hat.resize(K);
  out.alpha_se.resize(K);
  out.mean_z.resize(K);
  out.mean_z_se.resize(K);
  out.beta_hat.resize(K);
  out.beta_se.resize(K);
  for (int k = 0; k < K; ++k) {
    const estimate le = to_estimate(acc_rate_e[k]);
    const estimate ae = to_estimate(acc_rate_s[k]);
    const estimate ze = to_estimate(acc_z[k]);
    const estimate be = to_estimate(acc_beta[k]);
    out.lambda_hat[k] = le.value;
    out.lambda_se[k] = le.std_error;
    out.alpha_hat[k] = ae.value;
    out.alpha_se[k] = ae.std_error;
    out.mean_z[k] = ze.value;
    out.mean_z_se[k] = ze.std_error;
    out.beta_hat[k] = be.value;
    out.beta_se[k] = be.std_error;
  }
  out.mgf.reserve(queries_.size());
  for (const auto& a : acc_q) out.mgf.push_back(to_estimate(a));
  out.mgf_conditional.reserve(conditionals_.size());
  for (const auto& a : acc_c) out.mgf_conditional.push_back(to_estimate(a));
  out.palm.resize(palm_.size());
  for (size_t f = 0; f < palm_.size(); ++f) {
    out.palm[f].arrival.resize(K);
    out.palm[f].completion.resize(K);
    for (int k = 0; k < K; ++k) {
      out.palm[f].arrival[k] = to_estimate(acc_palm_e[f][k]);
      out.palm[f].completion[k] = to_estimate(acc_palm_s[f][k]);
    }
  }
  out.tail.reserve(tails_.size());
  for (const auto& a : acc_tail) out.tail.push_back(to_estimate(a));
  out.tail_requests = tails_;

  const auto& zs = acc_sumz.batch_sums();
  const auto& zw = acc_sumz.batch_weights();
  if (!zs.empty() && zw.front() > 0 && zw.back() > 0) {
    const double first = zs.front() / zw.front();
    const double last = zs.back() / zw.back();
    out.divergence_warning = last > 10 * first && last > 0;
  }
  return out;
}

steady_stats simulate(const network_spec& net, const sim_options& opt) {
  pdmp_simulator sim(net, opt);
  return sim.run();
}

mgf_bundle add_scaled_mgf_bundle(pdmp_simulator& sim, const Eigen::VectorXd& theta, double r,
                                 double eps0) {
  const network_spec& net = sim.net();
  const priority_structure& ps = sim.priority();
  const int K = net.num_classes();
  if (!(r > 0) || !(eps0 > 0) || !(eps0 < 1))
    throw_error(errc::bad_rates, "need r > 0 and eps0 in (0,1)");

  mgf_query phi = plain_mgf_query(K, r * theta);
  for (int k = 0; k < K; ++k)
    if (!ps.is_lowest[k]) phi.z_cap[k] = 1.0 / r;

  const scaled_exponents se = solve_scaled(net, theta, r, eps0);
  mgf_query psi = phi;
  psi.e_coeff = -se.eta;
  psi.s_coeff = -se.xi;
  psi.clock_cap = std::pow(r, eps0 - 1);

  mgf_bundle b;
  b.phi = sim.add_mgf_query(std::move(phi));
  b.psi = sim.add_mgf_query(std::move(psi));
  b.phi_k.resize(K);
  b.psi_k.resize(K);
  for (int k = 0; k < K; ++k) {
    b.phi_k[k] = sim.add_conditional(b.phi, k);
    b.psi_k[k] = sim.add_conditional(b.psi, k);
  }
  return b;
}

mgf_estimates estimate_mgf(const steady_stats& stats, const mgf_bundle& b) {
  auto fetch_cond = [&](int idx) {
    const estimate e = stats.mgf_conditional.at(idx);
    if (e.batches == 0)
      throw_error(errc::conditioning_event_empty, "idle event never occurred");
    return e;
  };
  mgf_estimates out;
  out.phi = stats.mgf.at(b.phi);
  out.psi = stats.mgf.at(b.psi);
  const int K = static_cast<int>(b.phi_k.size());
  out.phi_k.resize(K);
  out.psi_k.resize(K);
  out.beta.resize(K);
  for (int k = 0; k < K; ++k) {
    out.phi_k[k] = fetch_cond(b.phi_k[k]);
    out.psi_k[k] = fetch_cond(b.psi_k[k]);
    out.beta[k] = {stats.beta_hat[k], stats.beta_se[k], 0};
  }
  return out;
}

estimate collect_palm(const steady_stats& stats, int functional_index, event_kind kind,
                      int cls) {
  const auto& table = stats.palm.at(functional_index);
  const auto& counts =
      kind == event_kind::external_arrival ? stats.arrival_count : stats.completion_count;
  if (counts.at(cls) == 0)
    throw_error(errc::no_events, "counting process had no occurrences");
  return kind == event_kind::external_arrival ? table.arrival[cls] : table.completion[cls];
}

tail_report remaining_time_tail(const network_spec& net, const steady_stats& stats, int i) {
  if (i < 0 || i >= static_cast<int>(stats.tail_requests.size()))
    throw_error(errc::bad_rates, "tail request index out of range");
  const tail_request& tr = stats.tail_requests[i];
  const int n = tr.power;
  tail_report rep;
  rep.left = stats.tail[i];
  if (tr.side == clock_side::interarrival) {
    if (!net.is_external(tr.cls)) {
      rep.right = 0;
      return rep;
    }
    const double a = 1.0 / net.arrival_rate[tr.cls];
    const auto& d = net.interarrival_dist[tr.cls];
    const double cut = tr.cutoff / a;
    const double tail_mom =
        d.upper_moment(n + 1, cut) - std::pow(cut, n + 1) * d.upper_moment(0, cut);
    rep.right = std::pow(a, n) / (n + 1) * tail_mom;
  } else {
    const traffic_solution ts = solve_traffic(net);
    const double m = net.mean_service[tr.cls];
    const auto& d = net.service_dist[tr.cls];
    const double cut = tr.cutoff / m;
    const double tail_mom =
        d.upper_moment(n + 1, cut) - std::pow(cut, n + 1) * d.upper_moment(0, cut);
    rep.right = ts.gamma[tr.cls] * std::pow(m, n) / (n + 1) * tail_mom;
  }
  return rep;
}

}  // namespace mcqn
