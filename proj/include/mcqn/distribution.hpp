#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace mcqn {

enum class dist_kind {
  exponential,
  deterministic,
  uniform_bounded,
  erlang,
  hyperexp,
  lognormal,
};

// Unit-mean nonnegative random-variable model used for interarrival and
// service requirements.  All moments are exact closed forms; the truncated
// transform E[exp(-s (T ∧ 1/t))] is closed-form except for lognormal, which
// uses fixed-order Gauss-Legendre quadrature normalized so the value at s=0
// is exactly 1.
class distribution_model {
 public:
  static distribution_model exponential();
  static distribution_model deterministic();
  // support [1-a, 1+a]; requires 0 < a < 1
  static distribution_model uniform_bounded(double halfwidth);
  // sum of k unit-rate phases scaled to unit mean; requires k >= 1
  static distribution_model erlang(int k);
  // two-phase, balanced means; requires scv > 1
  static distribution_model hyperexp(double scv);
  // requires scv > 0
  static distribution_model lognormal(double scv);

  // Grammar: "exponential", "deterministic", "uniform(a=0.9)",
  // "erlang(k=4)", "hyperexp(scv=4)", "lognormal(scv=2)".
  static distribution_model parse(std::string_view text);
  [[nodiscard]] std::string to_string() const;

  [[nodiscard]] dist_kind kind() const { return kind_; }
  [[nodiscard]] double scv() const;

  // E[T^p], p in {0,1,2,3}; mean is 1 by construction.
  [[nodiscard]] double moment(int p) const;
  // E[T^p 1(T >= c)], p in {0,1,2,3}
  [[nodiscard]] double upper_moment(int p, double c) const;
  // E[T ∧ c]
  [[nodiscard]] double capped_mean(double c) const;

  // E[exp(-s (T ∧ 1/t))]; t >= 0, t = 0 means no truncation.  Returns +inf
  // when the untruncated transform diverges.  Strictly decreasing and
  // log-convex in s on its finite domain.
  [[nodiscard]] double mgf_truncated(double s, double t) const;
  // d/ds of the above (finite whenever the value is finite).
  [[nodiscard]] double mgf_truncated_d(double s, double t) const;

  // One unit-mean draw.  Consumes a fixed number of engine outputs per kind,
  // so streams stay aligned across parameter changes of other classes.
  [[nodiscard]] double sample(std::mt19937_64& gen) const;

  friend bool operator==(const distribution_model&, const distribution_model&) = default;

 private:
  distribution_model() = default;

  dist_kind kind_ = dist_kind::exponential;
  // uniform_bounded: halfwidth; erlang: phase count; hyperexp: (p1, nu1, nu2);
  // lognormal: (mu, sigma).  Unused fields stay zero.
  double a_ = 0;
  int k_ = 1;
  double p1_ = 0, nu1_ = 0, nu2_ = 0;
  double mu_ = 0, sigma_ = 0;
  double scv_ = 1;
};

}  // namespace mcqn
