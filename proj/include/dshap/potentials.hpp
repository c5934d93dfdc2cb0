#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dshap/data.hpp"
#include "dshap/errors.hpp"
#include "dshap/potential.hpp"
#include "dshap/random.hpp"

namespace dshap {

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

inline std::vector<double> multiset_mean(const std::vector<const DataPoint*>& s,
                                         std::size_t dim) {
  std::vector<double> mu(dim, 0.0);
  for (const DataPoint* p : s)
    for (std::size_t j = 0; j < dim; ++j) mu[j] += p->features[j];
  for (auto& v : mu) v /= static_cast<double>(s.size());
  return mu;
}

}  // namespace detail

// Score of the empirical mean estimator: U(S) = R^2 - ||mean(S) - mu||^2,
// with U(empty) = 0 by convention. mu and R^2 are frozen reference moments,
// not re-estimated per call. The unclipped form is the default because the
// closed-form value below is exact for it; the clipped variant satisfies the
// [0,1] output contract instead.
class MeanEstimationPotential : public Potential {
 public:
  MeanEstimationPotential(std::vector<double> mu, double r2, bool clip = false)
      : Potential(clip ? "mean_clipped" : "mean"),
        mu_(std::move(mu)),
        r2_(r2),
        clip_(clip) {}

  // Freeze mu and R^2 from the full database once.
  static MeanEstimationPotential from_database(const Dataset& db, bool clip = false) {
    if (db.empty()) throw data_error("mean potential: empty database");
    auto ptrs = db.pointers();
    std::vector<double> mu = detail::multiset_mean(ptrs, db.dim());
    double r2 = 0.0;
    for (const auto& p : db.points())
      r2 += detail::squared_distance(p.features, mu);
    r2 /= static_cast<double>(db.size());
    return MeanEstimationPotential(std::move(mu), r2, clip);
  }

  const std::vector<double>& mu() const { return mu_; }
  double r2() const { return r2_; }
  bool clipped() const { return clip_; }

 protected:
  double eval_sorted(const std::vector<const DataPoint*>& train) const override {
    if (train.empty()) return 0.0;
    if (train[0]->features.size() != mu_.size())
      throw data_error("mean potential: dimension mismatch");
    std::vector<double> mu_hat = detail::multiset_mean(train, mu_.size());
    double u = r2_ - detail::squared_distance(mu_hat, mu_);
    if (clip_) u = std::clamp(u, 0.0, 1.0);
    return u;
  }

 private:
  std::vector<double> mu_;
  double r2_;
  bool clip_;
};

// c(m) = sum_{k=2..m} 1 / (k^2 (k-1)).
inline double mean_value_small_constant(int m) {
  double c = 0.0;
  for (int k = 2; k <= m; ++k)
    c += 1.0 / (static_cast<double>(k) * k * (k - 1));
  return c;
}

// C(m) = 2 - 1/m - c(m). Verified against exhaustive enumeration of both
// the expected-marginal-contribution form and the averaged fixed-set form
// on small discrete distributions (see the exact-module tests).
inline double mean_value_constant(int m) {
  return 2.0 - 1.0 / static_cast<double>(m) - mean_value_small_constant(m);
}

// Closed-form value of a point for the (unclipped) mean-estimation score at
// horizon m:
//   (1/m) * [ C(m) * (R^2 - ||z - mu||^2) + (R^2 - R^2/m) ]
// where R^2 - R^2/m is the expected score of a size-m sample.
inline double analytic_mean_value(std::span<const double> z_features, int m,
                                  std::span<const double> mu, double r2) {
  if (m < 1) throw std::invalid_argument("analytic_mean_value: m must be >= 1");
  double dm = static_cast<double>(m);
  double centered = r2 - detail::squared_distance(z_features, mu);
  double expected_score = r2 - r2 / dm;
  return (mean_value_constant(m) * centered + expected_score) / dm;
}

inline double analytic_mean_value(const DataPoint& z, int m,
                                  const MeanEstimationPotential& u) {
  return analytic_mean_value(z.features, m, u.mu(), u.r2());
}

// ---------------------------------------------------------------------------
// Held-out accuracy potentials: train a learner on the multiset, score it on
// a fixed test set, map the score into [0,1]. Degenerate inputs fall back to
// a constant predictor so U is total on all multisets.
// ---------------------------------------------------------------------------

struct LogisticParams {
  double learning_rate = 0.1;
  int epochs = 200;
  double l2 = 1e-3;
};

// Binary logistic regression fit by full-batch gradient descent from zero
// init; fixed epoch count makes training deterministic.
class LogisticPotential : public Potential {
 public:
  LogisticPotential(Dataset test_set, LogisticParams params = {})
      : Potential("logistic"), test_(std::move(test_set)), params_(params) {
    if (test_.empty()) throw data_error("logistic potential: empty test set");
    if (test_.label_kind() != LabelKind::categorical)
      throw data_error("logistic potential: test set must have categorical labels");
    if (test_.n_classes() > 2)
      throw data_error("logistic potential: binary labels required");
  }

  const Dataset& test_set() const { return test_; }

 protected:
  double eval_sorted(const std::vector<const DataPoint*>& train) const override {
    if (train.empty()) return 1.0 / static_cast<double>(std::max(2, test_.n_classes()));
    check_dim(train, test_.dim(), "logistic potential");
    int constant_label = single_class_label(train);
    if (constant_label >= 0) return constant_accuracy(constant_label);

    std::size_t d = test_.dim();
    std::vector<double> w(d + 1, 0.0);  // last slot is the bias
    std::vector<double> grad(d + 1, 0.0);
    double inv_n = 1.0 / static_cast<double>(train.size());
    for (int epoch = 0; epoch < params_.epochs; ++epoch) {
      std::fill(grad.begin(), grad.end(), 0.0);
      for (const DataPoint* p : train) {
        double y = *p->label;
        double err = sigmoid(score(w, p->features)) - y;
        for (std::size_t j = 0; j < d; ++j) grad[j] += err * p->features[j];
        grad[d] += err;
      }
      for (std::size_t j = 0; j < d; ++j)
        w[j] -= params_.learning_rate * (grad[j] * inv_n + params_.l2 * w[j]);
      w[d] -= params_.learning_rate * grad[d] * inv_n;  // bias unpenalized
    }

    std::size_t correct = 0;
    for (const auto& p : test_.points()) {
      int pred = score(w, p.features) >= 0.0 ? 1 : 0;
      if (pred == static_cast<int>(*p.label)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test_.size());
  }

 private:
  static double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

  static double score(const std::vector<double>& w, const std::vector<double>& x) {
    double s = w.back();
    for (std::size_t j = 0; j < x.size(); ++j) s += w[j] * x[j];
    return s;
  }

  static void check_dim(const std::vector<const DataPoint*>& train, std::size_t d,
                        const char* who) {
    for (const DataPoint* p : train)
      if (p->features.size() != d)
        throw data_error(std::string(who) + ": dimension mismatch");
  }

  // Returns the common label if the multiset is single-class, else -1.
  static int single_class_label(const std::vector<const DataPoint*>& train) {
    int label = static_cast<int>(*train[0]->label);
    for (const DataPoint* p : train)
      if (static_cast<int>(*p->label) != label) return -1;
    return label;
  }

  double constant_accuracy(int label) const {
    std::size_t hits = 0;
    for (const auto& p : test_.points())
      if (static_cast<int>(*p.label) == label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(test_.size());
  }

  Dataset test_;
  LogisticParams params_;
};

// k-nearest-neighbor classification accuracy. Neighbor ties break by
// (distance, id); vote ties break toward the smallest label.
class KnnPotential : public Potential {
 public:
  KnnPotential(Dataset test_set, int k_neighbors = 5)
      : Potential("knn"), test_(std::move(test_set)), k_(k_neighbors) {
    if (test_.empty()) throw data_error("knn potential: empty test set");
    if (test_.label_kind() != LabelKind::categorical)
      throw data_error("knn potential: test set must have categorical labels");
    if (k_ < 1) throw data_error("knn potential: k_neighbors must be >= 1");
  }

  const Dataset& test_set() const { return test_; }

 protected:
  double eval_sorted(const std::vector<const DataPoint*>& train) const override {
    int n_classes = std::max(2, test_.n_classes());
    if (train.empty()) return 1.0 / static_cast<double>(n_classes);
    for (const DataPoint* p : train)
      if (p->features.size() != test_.dim())
        throw data_error("knn potential: dimension mismatch");

    std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_), train.size());
    std::vector<std::pair<double, const DataPoint*>> dist(train.size());
    std::vector<int> votes(static_cast<std::size_t>(n_classes));
    std::size_t correct = 0;
    for (const auto& q : test_.points()) {
      for (std::size_t i = 0; i < train.size(); ++i)
        dist[i] = {detail::squared_distance(q.features, train[i]->features), train[i]};
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                        dist.end(), [](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first < b.first;
                          return point_before(a.second, b.second);
                        });
      std::fill(votes.begin(), votes.end(), 0);
      for (std::size_t i = 0; i < k; ++i)
        ++votes[static_cast<std::size_t>(*dist[i].second->label)];
      int best = 0;
      for (int c = 1; c < n_classes; ++c)
        if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)])
          best = c;
      if (best == static_cast<int>(*q.label)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test_.size());
  }

 private:
  Dataset test_;
  int k_;
};

// Ridge regression scored by R^2 on the test set, clipped into [0,1].
// Multisets with fewer than two points fall back to a constant predictor
// (the training mean, or 0 for the empty set).
class RidgePotential : public Potential {
 public:
  RidgePotential(Dataset test_set, double lambda = 1.0)
      : Potential("ridge"), test_(std::move(test_set)), lambda_(lambda) {
    if (test_.empty()) throw data_error("ridge potential: empty test set");
    if (test_.label_kind() != LabelKind::real)
      throw data_error("ridge potential: test set must have real labels");
    if (!(lambda_ >= 0.0)) throw data_error("ridge potential: lambda must be >= 0");
  }

  const Dataset& test_set() const { return test_; }

 protected:
  double eval_sorted(const std::vector<const DataPoint*>& train) const override {
    std::size_t d = test_.dim();
    for (const DataPoint* p : train)
      if (p->features.size() != d) throw data_error("ridge potential: dimension mismatch");

    if (train.size() < 2) {
      double c = train.empty() ? 0.0 : *train[0]->label;
      return r2_clipped_constant(c);
    }

    // Normal equations with an unpenalized intercept column at index d.
    std::size_t n = d + 1;
    std::vector<double> a(n * n, 0.0);
    std::vector<double> rhs(n, 0.0);
    for (const DataPoint* p : train) {
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j)
          a[i * n + j] += p->features[i] * p->features[j];
        a[i * n + d] += p->features[i];
        rhs[i] += p->features[i] * *p->label;
      }
      for (std::size_t j = 0; j < d; ++j) a[d * n + j] += p->features[j];
      a[d * n + d] += 1.0;
      rhs[d] += *p->label;
    }
    for (std::size_t i = 0; i < d; ++i) a[i * n + i] += lambda_;

    std::vector<double> beta;
    if (!solve_linear(a, rhs, n, beta)) {
      // Numerically singular system; score the training-mean predictor.
      double mean_y = 0.0;
      for (const DataPoint* p : train) mean_y += *p->label;
      return r2_clipped_constant(mean_y / static_cast<double>(train.size()));
    }

    double ss_res = 0.0;
    for (const auto& q : test_.points()) {
      double pred = beta[d];
      for (std::size_t j = 0; j < d; ++j) pred += beta[j] * q.features[j];
      double e = pred - *q.label;
      ss_res += e * e;
    }
    return r2_clipped(ss_res);
  }

 private:
  static bool solve_linear(std::vector<double> a, std::vector<double> b,
                           std::size_t n, std::vector<double>& x) {
    for (std::size_t col = 0; col < n; ++col) {
      std::size_t pivot = col;
      for (std::size_t r = col + 1; r < n; ++r)
        if (std::fabs(a[r * n + col]) > std::fabs(a[pivot * n + col])) pivot = r;
      if (std::fabs(a[pivot * n + col]) < 1e-12) return false;
      if (pivot != col) {
        for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
        std::swap(b[col], b[pivot]);
      }
      for (std::size_t r = col + 1; r < n; ++r) {
        double f = a[r * n + col] / a[col * n + col];
        for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
        b[r] -= f * b[col];
      }
    }
    x.assign(n, 0.0);
    for (std::size_t ri = n; ri-- > 0;) {
      double s = b[ri];
      for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri * n + c] * x[c];
      x[ri] = s / a[ri * n + ri];
    }
    return true;
  }

  double test_ss_tot() const {
    double mean_y = 0.0;
    for (const auto& q : test_.points()) mean_y += *q.label;
    mean_y /= static_cast<double>(test_.size());
    double s = 0.0;
    for (const auto& q : test_.points()) {
      double e = *q.label - mean_y;
      s += e * e;
    }
    return s;
  }

  double r2_clipped(double ss_res) const {
    double ss_tot = test_ss_tot();
    if (ss_tot <= 0.0) return ss_res <= 0.0 ? 1.0 : 0.0;
    return std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
  }

  double r2_clipped_constant(double prediction) const {
    double ss_res = 0.0;
    for (const auto& q : test_.points()) {
      double e = prediction - *q.label;
      ss_res += e * e;
    }
    return r2_clipped(ss_res);
  }

  Dataset test_;
  double lambda_;
};

// U(S) = c for every S. Useful as a degenerate fixture: all marginal
// contributions vanish.
class ConstantPotential : public Potential {
 public:
  explicit ConstantPotential(double c) : Potential("constant"), c_(c) {}

 protected:
  double eval_sorted(const std::vector<const DataPoint*>&) const override { return c_; }

 private:
  double c_;
};

// Empirical deletion-stability profile: per cardinality k, the maximum
// observed |U(S + z) - U(S)| over random S ~ db^(k-1), z ~ db. The decay
// rate guides the choice of the schedule exponent b.
struct StabilityProfile {
  std::vector<int> k_values;
  std::vector<double> max_abs_delta;
};

inline StabilityProfile deletion_stability_probe(const Potential& u, const Dataset& db,
                                                 const std::vector<int>& k_values,
                                                 int trials, RandomSource& rng) {
  if (trials < 1) throw std::invalid_argument("stability probe: trials must be >= 1");
  StabilityProfile out;
  out.k_values = k_values;
  out.max_abs_delta.assign(k_values.size(), 0.0);
  for (std::size_t i = 0; i < k_values.size(); ++i) {
    int k = k_values[i];
    if (k < 1) throw std::invalid_argument("stability probe: k must be >= 1");
    for (int t = 0; t < trials; ++t) {
      auto s = sample_subset(db, static_cast<std::size_t>(k - 1), rng);
      const DataPoint& z = db[rng.next_index(db.size())];
      double delta = std::fabs(marginal_contribution(u, s, z));
      out.max_abs_delta[i] = std::max(out.max_abs_delta[i], delta);
    }
  }
  return out;
}

}  // namespace dshap
