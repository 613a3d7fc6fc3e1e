#include "mcqn/distribution.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "mcqn/errors.hpp"

namespace mcqn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- Gauss-Legendre nodes (64-point) --------------------------------------

struct gl_rule {
  std::array<double, 64> x{};  // nodes on [-1, 1]
  std::array<double, 64> w{};
};

gl_rule make_gl64() {
  gl_rule r;
  const int n = 64;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Newton on P_n from the Chebyshev-like initial guess.
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = 0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2 * j + 1) * z * p1 - j * p2) / (j + 1);
      }
      pp = n * (z * p0 - p1) / (z * z - 1);
      double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = 2.0 / ((1 - z * z) * pp * pp);
    r.w[n - 1 - i] = r.w[i];
  }
  return r;
}

const gl_rule& gl64() {
  static const gl_rule rule = make_gl64();
  return rule;
}

// ∫_lo^hi f(x) dx, single 64-point panel
template <class F>
double gl_panel(double lo, double hi, F&& f) {
  const auto& rule = gl64();
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  double acc = 0;
  for (int i = 0; i < 64; ++i) acc += rule.w[i] * f(mid + half * rule.x[i]);
  return acc * half;
}

// composite rule; panel length capped so e^{±wx}-type factors stay tame
template <class F>
double gl_integrate(double lo, double hi, F&& f, double max_len = 2.0) {
  if (hi <= lo) return 0;
  const int n = std::max(1, static_cast<int>(std::ceil((hi - lo) / max_len)));
  const double step = (hi - lo) / n;
  double acc = 0;
  for (int i = 0; i < n; ++i) acc += gl_panel(lo + i * step, lo + (i + 1) * step, f);
  return acc;
}

// ---- exponential-phase helpers ---------------------------------------------

// ∫_0^c e^{-w x} dx with a series branch for small |w c|
double int_exp0(double w, double c) {
  double wc = w * c;
  if (std::abs(wc) < 1e-6) return c * (1 - wc / 2 + wc * wc / 6);
  return -std::expm1(-wc) / w;
}

// ∫_0^c x e^{-w x} dx
double int_exp1(double w, double c) {
  double wc = w * c;
  if (std::abs(wc) < 1e-6) return c * c * (0.5 - wc / 3 + wc * wc / 8);
  return (1 - (1 + wc) * std::exp(-wc)) / (w * w);
}

// E[e^{-s (X ∧ c)}] for X ~ exp(rate nu); c may be +inf
double exp_piece(double nu, double s, double c) {
  const double w = nu + s;
  if (!std::isfinite(c)) return w > 0 ? nu / w : kInf;
  return nu * int_exp0(w, c) + std::exp(-w * c);
}

// d/ds of exp_piece
double exp_piece_d(double nu, double s, double c) {
  const double w = nu + s;
  if (!std::isfinite(c)) return w > 0 ? -nu / (w * w) : -kInf;
  return -nu * int_exp1(w, c) - c * std::exp(-w * c);
}

// regularized upper incomplete gamma Q(n, x) for integer n >= 1
double gamma_q_int(int n, double x) {
  if (x <= 0) return 1;
  double term = std::exp(-x), acc = term;
  for (int i = 1; i < n; ++i) {
    term *= x / i;
    acc += term;
  }
  return std::min(acc, 1.0);
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

double exp_draw(std::mt19937_64& gen, double rate) {
  return -std::log1p(-uniform01(gen)) / rate;
}

}  // namespace

// ---- constructors ----------------------------------------------------------

distribution_model distribution_model::exponential() {
  distribution_model d;
  d.kind_ = dist_kind::exponential;
  d.scv_ = 1;
  return d;
}

distribution_model distribution_model::deterministic() {
  distribution_model d;
  d.kind_ = dist_kind::deterministic;
  d.scv_ = 0;
  return d;
}

distribution_model distribution_model::uniform_bounded(double halfwidth) {
  if (!(halfwidth > 0 && halfwidth < 1))
    throw_error(errc::parse_error, "uniform halfwidth must be in (0,1)");
  distribution_model d;
  d.kind_ = dist_kind::uniform_bounded;
  d.a_ = halfwidth;
  d.scv_ = halfwidth * halfwidth / 3;
  return d;
}

distribution_model distribution_model::erlang(int k) {
  if (k < 1) throw_error(errc::parse_error, "erlang phase count must be >= 1");
  distribution_model d;
  d.kind_ = dist_kind::erlang;
  d.k_ = k;
  d.scv_ = 1.0 / k;
  return d;
}

distribution_model distribution_model::hyperexp(double scv) {
  if (!(scv > 1)) throw_error(errc::parse_error, "hyperexp scv must be > 1");
  distribution_model d;
  d.kind_ = dist_kind::hyperexp;
  // balanced means: p1/nu1 = p2/nu2 = 1/2
  const double diff = std::sqrt((scv - 1) / (scv + 1));
  d.p1_ = 0.5 * (1 + diff);
  d.nu1_ = 2 * d.p1_;
  d.nu2_ = 2 * (1 - d.p1_);
  d.scv_ = scv;
  return d;
}

distribution_model distribution_model::lognormal(double scv) {
  if (!(scv > 0)) throw_error(errc::parse_error, "lognormal scv must be > 0");
  distribution_model d;
  d.kind_ = dist_kind::lognormal;
  d.sigma_ = std::sqrt(std::log1p(scv));
  d.mu_ = -0.5 * d.sigma_ * d.sigma_;
  d.scv_ = scv;
  return d;
}

// ---- parse / print ---------------------------------------------------------

distribution_model distribution_model::parse(std::string_view text) {
  auto strip = [](std::string_view v) {
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
    return v;
  };
  std::string_view s = strip(text);
  std::string_view name = s;
  std::string_view key, val;
  if (auto open = s.find('('); open != std::string_view::npos) {
    if (s.back() != ')')
      throw_error(errc::parse_error, "malformed distribution spec '" + std::string(text) + "'");
    name = strip(s.substr(0, open));
    std::string_view inner = s.substr(open + 1, s.size() - open - 2);
    auto eq = inner.find('=');
    if (eq == std::string_view::npos)
      throw_error(errc::parse_error, "expected key=value in '" + std::string(text) + "'");
    key = strip(inner.substr(0, eq));
    val = strip(inner.substr(eq + 1));
  }
  auto parse_num = [&](std::string_view v) {
    try {
      size_t pos = 0;
      double x = std::stod(std::string(v), &pos);
      if (pos != v.size()) throw std::invalid_argument("trailing");
      return x;
    } catch (const std::exception&) {
      throw_error(errc::parse_error, "bad numeric value in '" + std::string(text) + "'");
    }
  };
  auto want_key = [&](std::string_view expect) {
    if (key != expect)
      throw_error(errc::parse_error,
                  "expected parameter '" + std::string(expect) + "' in '" + std::string(text) + "'");
  };
  if (name == "exponential") {
    if (!key.empty()) throw_error(errc::parse_error, "exponential takes no parameters");
    return exponential();
  }
  if (name == "deterministic") {
    if (!key.empty()) throw_error(errc::parse_error, "deterministic takes no parameters");
    return deterministic();
  }
  if (name == "uniform") {
    want_key("a");
    return uniform_bounded(parse_num(val));
  }
  if (name == "erlang") {
    want_key("k");
    double kk = parse_num(val);
    if (kk != std::floor(kk)) throw_error(errc::parse_error, "erlang k must be an integer");
    return erlang(static_cast<int>(kk));
  }
  if (name == "hyperexp") {
    want_key("scv");
    return hyperexp(parse_num(val));
  }
  if (name == "lognormal") {
    want_key("scv");
    return lognormal(parse_num(val));
  }
  throw_error(errc::parse_error, "unknown distribution '" + std::string(text) + "'");
}

std::string distribution_model::to_string() const {
  auto fmt = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return std::string(buf);
  };
  switch (kind_) {
    case dist_kind::exponential: return "exponential";
    case dist_kind::deterministic: return "deterministic";
    case dist_kind::uniform_bounded: return "uniform(a=" + fmt(a_) + ")";
    case dist_kind::erlang: return "erlang(k=" + std::to_string(k_) + ")";
    case dist_kind::hyperexp: return "hyperexp(scv=" + fmt(scv_) + ")";
    case dist_kind::lognormal: return "lognormal(scv=" + fmt(scv_) + ")";
  }
  return "?";
}

double distribution_model::scv() const { return scv_; }

// ---- moments ----------------------------------------------------------------

double distribution_model::moment(int p) const {
  if (p < 0 || p > 3) throw_error(errc::parse_error, "moment order must be in 0..3");
  if (p == 0) return 1;
  switch (kind_) {
    case dist_kind::exponential: {
      double f = 1;
      for (int i = 2; i <= p; ++i) f *= i;
      return f;
    }
    case dist_kind::deterministic:
      return 1;
    case dist_kind::uniform_bounded: {
      const double u = 1 + a_, l = 1 - a_;
      return (std::pow(u, p + 1) - std::pow(l, p + 1)) / (2 * a_ * (p + 1));
    }
    case dist_kind::erlang: {
      double f = 1;
      for (int i = 0; i < p; ++i) f *= static_cast<double>(k_ + i) / k_;
      return f;
    }
    case dist_kind::hyperexp: {
      double f = 1;
      for (int i = 2; i <= p; ++i) f *= i;
      return f * (p1_ / std::pow(nu1_, p) + (1 - p1_) / std::pow(nu2_, p));
    }
    case dist_kind::lognormal:
      return std::exp(p * mu_ + 0.5 * p * p * sigma_ * sigma_);
  }
  return 0;
}

double distribution_model::upper_moment(int p, double c) const {
  if (p < 0 || p > 3) throw_error(errc::parse_error, "moment order must be in 0..3");
  if (c <= 0) return moment(p);
  if (!std::isfinite(c)) return 0;
  auto exp_upper = [](double nu, int p, double c) {
    // ∫_c^∞ x^p ν e^{-νx} dx = e^{-νc} p! Σ_{j<=p} c^j ν^{j-p} / j!
    double acc = 0, cj = 1, jfac = 1;
    double pfac = 1;
    for (int i = 2; i <= p; ++i) pfac *= i;
    for (int j = 0; j <= p; ++j) {
      acc += cj / (jfac * std::pow(nu, p - j));
      cj *= c;
      jfac *= (j + 1);
    }
    return std::exp(-nu * c) * pfac * acc;
  };
  switch (kind_) {
    case dist_kind::exponential:
      return exp_upper(1, p, c);
    case dist_kind::deterministic:
      return c <= 1 ? 1 : 0;
    case dist_kind::uniform_bounded: {
      const double u = 1 + a_, l = 1 - a_;
      const double lo = std::clamp(c, l, u);
      return (std::pow(u, p + 1) - std::pow(lo, p + 1)) / (2 * a_ * (p + 1));
    }
    case dist_kind::erlang: {
      // (k+p-1)!/(k-1)! k^{-p} Q(k+p, kc)
      double f = 1;
      for (int i = 0; i < p; ++i) f *= static_cast<double>(k_ + i) / k_;
      return f * gamma_q_int(k_ + p, k_ * c);
    }
    case dist_kind::hyperexp:
      return p1_ * exp_upper(nu1_, p, c) + (1 - p1_) * exp_upper(nu2_, p, c);
    case dist_kind::lognormal: {
      const double z = (std::log(c) - mu_) / sigma_;
      return std::exp(p * mu_ + 0.5 * p * p * sigma_ * sigma_) * norm_cdf(-(z - p * sigma_));
    }
  }
  return 0;
}

double distribution_model::capped_mean(double c) const {
  if (c <= 0) return 0;
  if (!std::isfinite(c)) return 1;
  // E[T ∧ c] = E[T 1(T<c)] + c P(T>=c)
  return (1 - upper_moment(1, c)) + c * upper_moment(0, c);
}

// ---- truncated transform -----------------------------------------------------

double distribution_model::mgf_truncated(double s, double t) const {
  if (t < 0) throw_error(errc::parse_error, "truncation parameter t must be >= 0");
  const double c = t == 0 ? kInf : 1.0 / t;
  switch (kind_) {
    case dist_kind::exponential:
      return exp_piece(1, s, c);
    case dist_kind::deterministic:
      return std::exp(-s * std::min(1.0, c));
    case dist_kind::uniform_bounded: {
      const double l = 1 - a_, u = 1 + a_;
      if (c <= l) return std::exp(-s * c);
      const double hi = std::min(c, u);
      double val = int_exp0(s, hi) - int_exp0(s, l);  // ∫_l^hi e^{-sx} dx
      val /= 2 * a_;
      if (c < u) val += std::exp(-s * c) * (u - c) / (2 * a_);
      return val;
    }
    case dist_kind::erlang: {
      const double w = k_ + s;
      if (!std::isfinite(c)) return w > 0 ? std::pow(k_ / w, k_) : kInf;
      const double atom = std::exp(-s * c) * gamma_q_int(k_, k_ * c);
      if (w > 1e-9) return std::pow(k_ / w, k_) * (1 - gamma_q_int(k_, w * c)) + atom;
      if (w * c < -700) return kInf;  // integrand overflows; treated as divergent by callers
      double lg = std::lgamma(k_);
      double body = gl_integrate(0.0, c, [&](double x) {
        return std::exp((k_ - 1) * std::log(std::max(x, 1e-300)) - w * x + k_ * std::log((double)k_) - lg);
      });
      return body + atom;
    }
    case dist_kind::hyperexp: {
      double v1 = exp_piece(nu1_, s, c), v2 = exp_piece(nu2_, s, c);
      if (!std::isfinite(v1) || !std::isfinite(v2)) return kInf;
      return p1_ * v1 + (1 - p1_) * v2;
    }
    case dist_kind::lognormal: {
      const double zmax = 10;
      auto xz = [&](double z) { return std::exp(mu_ + sigma_ * z); };
      auto phi = [](double z) {
        return std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi);
      };
      if (!std::isfinite(c)) {
        if (s < 0) return kInf;
        if (s == 0) return 1;
        double num = gl_integrate(-zmax, zmax, [&](double z) { return phi(z) * std::exp(-s * xz(z)); });
        double den = gl_integrate(-zmax, zmax, phi);
        return num / den;
      }
      const double zc = (std::log(c) - mu_) / sigma_;
      const double Fc = norm_cdf(zc);
      const double atom = std::exp(-s * c) * (1 - Fc);
      if (zc <= -zmax) return atom + Fc * std::exp(-s * c);  // negligible interior mass
      const double hi = std::min(zc, zmax);
      double num = gl_integrate(-zmax, hi, [&](double z) { return phi(z) * std::exp(-s * xz(z)); });
      double den = gl_integrate(-zmax, hi, phi);
      return (den > 0 ? num / den * Fc : 0) + atom;
    }
  }
  return 0;
}

double distribution_model::mgf_truncated_d(double s, double t) const {
  if (t < 0) throw_error(errc::parse_error, "truncation parameter t must be >= 0");
  const double c = t == 0 ? kInf : 1.0 / t;
  switch (kind_) {
    case dist_kind::exponential:
      return exp_piece_d(1, s, c);
    case dist_kind::deterministic: {
      const double cap = std::min(1.0, c);
      return -cap * std::exp(-s * cap);
    }
    case dist_kind::uniform_bounded: {
      const double l = 1 - a_, u = 1 + a_;
      if (c <= l) return -c * std::exp(-s * c);
      const double hi = std::min(c, u);
      double val = -(int_exp1(s, hi) - int_exp1(s, l)) / (2 * a_);
      if (c < u) val += -c * std::exp(-s * c) * (u - c) / (2 * a_);
      return val;
    }
    case dist_kind::erlang: {
      const double w = k_ + s;
      const double kk = k_;
      if (!std::isfinite(c)) return w > 0 ? -kk / w * std::pow(kk / w, k_) : -kInf;
      const double atom_d = -c * std::exp(-s * c) * gamma_q_int(k_, k_ * c);
      if (w > 1e-9)
        return -kk / w * std::pow(kk / w, k_) * (1 - gamma_q_int(k_ + 1, w * c)) + atom_d;
      if (w * c < -700) return -kInf;
      double lg = std::lgamma(k_);
      double body = gl_integrate(0.0, c, [&](double x) {
        return -x * std::exp((k_ - 1) * std::log(std::max(x, 1e-300)) - w * x + k_ * std::log(kk) - lg);
      });
      return body + atom_d;
    }
    case dist_kind::hyperexp: {
      double v1 = exp_piece_d(nu1_, s, c), v2 = exp_piece_d(nu2_, s, c);
      if (!std::isfinite(v1) || !std::isfinite(v2)) return -kInf;
      return p1_ * v1 + (1 - p1_) * v2;
    }
    case dist_kind::lognormal: {
      const double zmax = 10;
      auto xz = [&](double z) { return std::exp(mu_ + sigma_ * z); };
      auto phi = [](double z) {
        return std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi);
      };
      if (!std::isfinite(c)) {
        if (s <= 0) return -kInf;
        double num = gl_integrate(-zmax, zmax, [&](double z) { return -xz(z) * phi(z) * std::exp(-s * xz(z)); });
        double den = gl_integrate(-zmax, zmax, phi);
        return num / den;
      }
      const double zc = (std::log(c) - mu_) / sigma_;
      const double Fc = norm_cdf(zc);
      const double atom_d = -c * std::exp(-s * c) * (1 - Fc);
      if (zc <= -zmax) return atom_d - c * Fc * std::exp(-s * c);
      const double hi = std::min(zc, zmax);
      double num = gl_integrate(-zmax, hi, [&](double z) { return -xz(z) * phi(z) * std::exp(-s * xz(z)); });
      double den = gl_integrate(-zmax, hi, phi);
      return (den > 0 ? num / den * Fc : 0) + atom_d;
    }
  }
  return 0;
}

// ---- sampling ----------------------------------------------------------------

double distribution_model::sample(std::mt19937_64& gen) const {
  switch (kind_) {
    case dist_kind::exponential:
      return exp_draw(gen, 1);
    case dist_kind::deterministic:
      return 1;
    case dist_kind::uniform_bounded:
      return 1 - a_ + 2 * a_ * uniform01(gen);
    case dist_kind::erlang: {
      double acc = 0;
      for (int i = 0; i < k_; ++i) acc += exp_draw(gen, static_cast<double>(k_));
      return acc;
    }
    case dist_kind::hyperexp: {
      const double u = uniform01(gen);
      return exp_draw(gen, u < p1_ ? nu1_ : nu2_);
    }
    case dist_kind::lognormal: {
      const double u1 = uniform01(gen), u2 = uniform01(gen);
      const double n =
          std::sqrt(-2 * std::log1p(-u1)) * std::cos(2 * std::numbers::pi * u2);
      return std::exp(mu_ + sigma_ * n);
    }
  }
  return 1;
}

}  // namespace mcqn
