#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dshap/data.hpp"
#include "dshap/errors.hpp"

namespace dshap {

struct InterpolatorConfig {
  int k_neighbors = 5;
  enum class Weighting { inverse_distance, uniform };
  Weighting weighting = Weighting::inverse_distance;
  enum class LabelHandling { per_class, distance_penalty };
  LabelHandling labels = LabelHandling::per_class;
};

// Nearest-neighbor value regressor fitted on (point, value) pairs. A
// prediction is a convex combination of fitted values, so it always lies
// within the fitted value range. Distances are Euclidean on features
// standardized by the fit set's own transform.
//
// Labeled data uses per-class neighbor pools when every expected class is
// represented; otherwise (or for classes unseen at fit time) it falls back
// to a single pool with a large additive cross-label distance penalty of
// 10x the fitted feature-space diameter.
class ValueInterpolator {
 public:
  static ValueInterpolator fit(const std::vector<std::pair<const DataPoint*, double>>& pairs,
                               const InterpolatorConfig& cfg = {},
                               const std::vector<double>* required_labels = nullptr) {
    if (pairs.empty()) throw std::invalid_argument("interpolator: empty fit set");
    ValueInterpolator out;
    out.cfg_ = cfg;

    std::vector<DataPoint> raw;
    raw.reserve(pairs.size());
    for (const auto& [p, v] : pairs) {
      raw.push_back(*p);
      out.values_.push_back(v);
    }
    Dataset tmp = repack(raw);
    auto [std_data, tf] = standardize(tmp);
    out.tf_ = tf;
    for (const auto& p : std_data.points()) {
      out.features_.push_back(p.features);
      out.labels_.push_back(p.label);
    }

    out.labeled_ = out.labels_[0].has_value();
    out.penalty_mode_ = cfg.labels == InterpolatorConfig::LabelHandling::distance_penalty ||
                        !out.labeled_;
    if (out.labeled_ && !out.penalty_mode_) {
      for (std::size_t i = 0; i < out.labels_.size(); ++i)
        out.pools_[*out.labels_[i]].push_back(i);
      if (required_labels) {
        for (double lab : *required_labels) {
          if (!out.pools_.count(lab)) {
            out.penalty_mode_ = true;
            out.warnings_.push_back("class " + std::to_string(lab) +
                                    " missing from fit set; using distance-penalty mode");
            break;
          }
        }
      }
    }
    out.penalty_ = 10.0 * out.diameter();
    return out;
  }

  double predict(const DataPoint& z) const {
    std::vector<double> q = tf_.apply(z.features);
    const std::vector<std::size_t>* pool = nullptr;
    if (!penalty_mode_ && z.label.has_value()) {
      auto it = pools_.find(*z.label);
      if (it != pools_.end()) pool = &it->second;
      // a class unseen at fit time falls through to the penalty path
    }

    std::vector<std::pair<double, std::size_t>> dist;
    if (pool) {
      dist.reserve(pool->size());
      for (std::size_t i : *pool) dist.emplace_back(distance(q, features_[i]), i);
    } else {
      dist.reserve(features_.size());
      for (std::size_t i = 0; i < features_.size(); ++i) {
        double d = distance(q, features_[i]);
        if (labeled_ && z.label.has_value() && labels_[i] != z.label) d += penalty_;
        dist.emplace_back(d, i);
      }
    }

    std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg_.k_neighbors),
                                          dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                      dist.end());
    if (dist[0].first == 0.0) return values_[dist[0].second];

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double w = cfg_.weighting == InterpolatorConfig::Weighting::inverse_distance
                     ? 1.0 / dist[i].first
                     : 1.0;
      num += w * values_[dist[i].second];
      den += w;
    }
    return num / den;
  }

  bool penalty_mode() const { return penalty_mode_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  std::size_t fitted_count() const { return values_.size(); }

 private:
  static Dataset repack(std::vector<DataPoint>& raw) {
    // ids may repeat across source datasets; reassign locally
    bool labeled = !raw.empty() && raw[0].label.has_value();
    for (std::size_t i = 0; i < raw.size(); ++i) {
      raw[i].id = static_cast<std::int64_t>(i);
      if (!labeled) raw[i].label.reset();
    }
    LabelKind kind = LabelKind::none;
    if (labeled) {
      bool integral = true;
      for (const auto& p : raw)
        if (!p.label || *p.label < 0 || *p.label != std::floor(*p.label)) integral = false;
      kind = integral ? LabelKind::categorical : LabelKind::real;
    }
    return Dataset(std::move(raw), kind);
  }

  static double distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      double d = a[j] - b[j];
      s += d * d;
    }
    return std::sqrt(s);
  }

  double diameter() const {
    double best = 0.0;
    for (std::size_t i = 0; i < features_.size(); ++i)
      for (std::size_t j = i + 1; j < features_.size(); ++j)
        best = std::max(best, distance(features_[i], features_[j]));
    return best;
  }

  InterpolatorConfig cfg_;
  Standardizer tf_;
  std::vector<std::vector<double>> features_;
  std::vector<std::optional<double>> labels_;
  std::vector<double> values_;
  std::map<double, std::vector<std::size_t>> pools_;
  bool labeled_ = false;
  bool penalty_mode_ = false;
  double penalty_ = 0.0;
  std::vector<std::string> warnings_;
};

}  // namespace dshap
