#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace mcqn {

// Weighted batch-means accumulator.  A batch is (sum, weight); the estimate is
// Σsum/Σweight and the standard error comes from the dispersion of batch
// means.  merge() concatenates batch lists, so combining accumulators from
// two runs equals accumulating the concatenated stream with the same batch
// boundaries.
class batch_accumulator {
 public:
  void add(int batch, double value, double weight) {
    if (batch >= static_cast<int>(sums_.size())) {
      sums_.resize(batch + 1, 0.0);
      weights_.resize(batch + 1, 0.0);
    }
    sums_[batch] += value;
    weights_[batch] += weight;
  }

  void merge(const batch_accumulator& other) {
    sums_.insert(sums_.end(), other.sums_.begin(), other.sums_.end());
    weights_.insert(weights_.end(), other.weights_.begin(), other.weights_.end());
  }

  [[nodiscard]] double total_sum() const {
    double s = 0;
    for (double v : sums_) s += v;
    return s;
  }
  [[nodiscard]] double total_weight() const {
    double s = 0;
    for (double v : weights_) s += v;
    return s;
  }
  [[nodiscard]] int batches() const {
    int n = 0;
    for (double w : weights_)
      if (w > 0) ++n;
    return n;
  }

  [[nodiscard]] double mean() const {
    const double w = total_weight();
    return w > 0 ? total_sum() / w : 0.0;
  }

  // batch-means standard error of the grand mean; 0 with fewer than 2
  // nonempty batches
  [[nodiscard]] double std_error() const {
    const double grand_w = total_weight();
    if (grand_w <= 0) return 0;
    const double m = mean();
    int n = 0;
    double acc = 0;
    for (size_t i = 0; i < sums_.size(); ++i) {
      if (weights_[i] <= 0) continue;
      ++n;
      const double bm = sums_[i] / weights_[i];
      const double frac = weights_[i] / grand_w;
      acc += frac * frac * (bm - m) * (bm - m);
    }
    if (n < 2) return 0;
    return std::sqrt(acc * n / (n - 1));
  }

  [[nodiscard]] const std::vector<double>& batch_sums() const { return sums_; }
  [[nodiscard]] const std::vector<double>& batch_weights() const { return weights_; }

 private:
  std::vector<double> sums_;
  std::vector<double> weights_;
};

struct estimate {
  double value = 0;
  double std_error = 0;
  int batches = 0;
};

[[nodiscard]] inline estimate to_estimate(const batch_accumulator& acc) {
  return {acc.mean(), acc.std_error(), acc.batches()};
}

// pooled standard error of a difference/sum of independent estimates
[[nodiscard]] inline double pooled_se(double se1, double se2) {
  return std::sqrt(se1 * se1 + se2 * se2);
}

}  // namespace mcqn
