#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dshap/random.hpp"

namespace dshap {

// Cardinality-sampling distribution {w_k : k in 1..m}. The uniform schedule
// has w_k = 1/m exactly; inverse_power(b) has w_k proportional to k^(1-2b),
// the schedule matched to a k^(-b)-stable potential (b = 1 gives w_k ~ 1/k).
class WeightSchedule {
 public:
  enum class Kind { uniform, inverse_power };

  static WeightSchedule uniform(int m) {
    WeightSchedule s;
    s.kind_ = Kind::uniform;
    s.m_ = check_m(m);
    s.weights_.assign(static_cast<std::size_t>(m), 1.0 / static_cast<double>(m));
    s.build_cdf();
    return s;
  }

  static WeightSchedule inverse_power(int m, double b) {
    if (!(b >= 0.5)) throw std::invalid_argument("inverse_power: b must be >= 0.5");
    WeightSchedule s;
    s.kind_ = Kind::inverse_power;
    s.m_ = check_m(m);
    s.b_ = b;
    s.weights_.resize(static_cast<std::size_t>(m));
    double total = 0.0;
    for (int k = 1; k <= m; ++k) {
      double w = std::pow(static_cast<double>(k), 1.0 - 2.0 * b);
      s.weights_[static_cast<std::size_t>(k - 1)] = w;
      total += w;
    }
    for (auto& w : s.weights_) w /= total;
    s.build_cdf();
    return s;
  }

  static WeightSchedule make(Kind kind, int m, double b = 1.0) {
    return kind == Kind::uniform ? uniform(m) : inverse_power(m, b);
  }

  // Same kind and exponent, truncated to horizon m_prime and renormalized.
  // The k^(1-2b) family is closed under prefix truncation, so this is the
  // conditional distribution of k given k <= m_prime.
  WeightSchedule truncated(int m_prime) const {
    if (m_prime == m_) return *this;
    return make(kind_, m_prime, b_);
  }

  Kind kind() const { return kind_; }
  int m() const { return m_; }
  double b() const { return b_; }
  const std::vector<double>& weights() const { return weights_; }
  double weight(int k) const { return weights_.at(static_cast<std::size_t>(k - 1)); }

  // Draw k in [1, m] with Pr[k] = w_k.
  int sample(RandomSource& rng) const {
    double u = rng.next_real();
    std::size_t lo = 0, hi = cdf_.size() - 1;
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (u < cdf_[mid])
        hi = mid;
      else
        lo = mid + 1;
    }
    return static_cast<int>(lo) + 1;
  }

  // The importance-sampling divisor w_k * m. For the uniform schedule the
  // divisor is 1 by definition; returning the exact constant keeps the
  // weighted estimator's degeneration to the plain one bit-exact.
  double reweight(int k) const {
    if (kind_ == Kind::uniform) return 1.0;
    return weight(k) * static_cast<double>(m_);
  }

  std::string name() const {
    if (kind_ == Kind::uniform) return "uniform";
    return "inverse_power(b=" + format_b() + ")";
  }

 private:
  static int check_m(int m) {
    if (m < 1) throw std::invalid_argument("schedule: m must be >= 1");
    return m;
  }

  void build_cdf() {
    cdf_.resize(weights_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      acc += weights_[i];
      cdf_[i] = acc;
    }
    cdf_.back() = 1.0;  // guard against accumulated rounding at the top
  }

  std::string format_b() const {
    // trim trailing zeros for readable names like b=1 / b=0.75
    std::string s = std::to_string(b_);
    while (s.size() > 1 && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }

  Kind kind_ = Kind::uniform;
  int m_ = 1;
  double b_ = 1.0;
  std::vector<double> weights_;
  std::vector<double> cdf_;
};

}  // namespace dshap
