#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dshap/errors.hpp"
#include "dshap/random.hpp"

namespace dshap {

enum class LabelKind { none, categorical, real };

inline std::string to_string(LabelKind k) {
  switch (k) {
    case LabelKind::none: return "none";
    case LabelKind::categorical: return "categorical";
    case LabelKind::real: return "real";
  }
  return "?";
}

struct DataPoint {
  std::vector<double> features;
  std::optional<double> label;
  std::int64_t id = 0;
};

// Canonical ordering for multiset evaluation. Sorting by id (with a feature
// fallback for id collisions across datasets) fixes the floating-point
// accumulation order, so any permutation of the same multiset evaluates
// bit-identically.
inline bool point_before(const DataPoint* a, const DataPoint* b) {
  if (a->id != b->id) return a->id < b->id;
  if (a->features != b->features) return a->features < b->features;
  return a->label < b->label;
}

// An immutable collection of points sharing dimension and label kind.
// Ids are unique within a dataset and stable across runs.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::vector<DataPoint> points, LabelKind kind, int n_classes = 0)
      : points_(std::move(points)), label_kind_(kind), n_classes_(n_classes) {
    validate();
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  std::size_t dim() const { return dim_; }
  LabelKind label_kind() const { return label_kind_; }
  int n_classes() const { return n_classes_; }

  const DataPoint& operator[](std::size_t i) const { return points_[i]; }
  const DataPoint* ptr(std::size_t i) const { return &points_[i]; }
  const std::vector<DataPoint>& points() const { return points_; }

  std::vector<const DataPoint*> pointers() const {
    std::vector<const DataPoint*> out;
    out.reserve(points_.size());
    for (const auto& p : points_) out.push_back(&p);
    return out;
  }

  const DataPoint* find(std::int64_t id) const {
    for (const auto& p : points_)
      if (p.id == id) return &p;
    return nullptr;
  }

 private:
  void validate() {
    if (points_.empty()) {
      dim_ = 0;
      return;
    }
    dim_ = points_[0].features.size();
    std::unordered_set<std::int64_t> seen;
    seen.reserve(points_.size());
    double max_label = -1.0;
    for (const auto& p : points_) {
      if (p.features.size() != dim_)
        throw data_error("dataset: inconsistent feature dimension");
      for (double v : p.features)
        if (!std::isfinite(v)) throw data_error("dataset: non-finite feature value");
      if (p.id < 0) throw data_error("dataset: negative id");
      if (!seen.insert(p.id).second)
        throw data_error("dataset: duplicate id " + std::to_string(p.id));
      if (label_kind_ == LabelKind::none) {
        if (p.label.has_value()) throw data_error("dataset: unexpected label");
      } else {
        if (!p.label.has_value()) throw data_error("dataset: missing label");
        if (!std::isfinite(*p.label)) throw data_error("dataset: non-finite label");
        if (label_kind_ == LabelKind::categorical) {
          if (*p.label < 0.0 || *p.label != std::floor(*p.label))
            throw data_error("dataset: categorical label must be a non-negative integer");
          max_label = std::max(max_label, *p.label);
        }
      }
    }
    if (label_kind_ == LabelKind::categorical) {
      int needed = static_cast<int>(max_label) + 1;
      if (n_classes_ == 0) n_classes_ = needed;
      if (n_classes_ < needed)
        throw data_error("dataset: label exceeds declared class count");
    } else {
      n_classes_ = 0;
    }
  }

  std::vector<DataPoint> points_;
  std::size_t dim_ = 0;
  LabelKind label_kind_ = LabelKind::none;
  int n_classes_ = 0;
};

// k i.i.d. uniform draws from db, with replacement. k = 0 gives the empty
// multiset; an empty database supports only k = 0.
inline std::vector<const DataPoint*> sample_subset(const Dataset& db, std::size_t k,
                                                   RandomSource& rng) {
  if (k == 0) return {};
  if (db.empty()) throw data_error("sample_subset: empty database");
  std::vector<const DataPoint*> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(db.ptr(rng.next_index(db.size())));
  return out;
}

// Per-feature affine transform fitted on one dataset and applicable to any
// other (held-out data must be mapped with the training transform).
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  std::vector<double> apply(const std::vector<double>& features) const {
    std::vector<double> out(features.size());
    for (std::size_t j = 0; j < features.size(); ++j)
      out[j] = (features[j] - mean[j]) / scale[j];
    return out;
  }

  DataPoint apply(const DataPoint& p) const {
    DataPoint out = p;
    out.features = apply(p.features);
    return out;
  }

  Dataset apply(const Dataset& data) const {
    if (data.dim() != mean.size())
      throw data_error("standardizer: dimension mismatch");
    std::vector<DataPoint> pts;
    pts.reserve(data.size());
    for (const auto& p : data.points()) pts.push_back(apply(p));
    return Dataset(std::move(pts), data.label_kind(), data.n_classes());
  }
};

// Centers each feature column to mean 0 and scales to population stddev 1.
// Zero-variance columns are centered and left at scale 1.
inline std::pair<Dataset, Standardizer> standardize(const Dataset& data) {
  if (data.empty()) throw data_error("empty dataset");
  std::size_t d = data.dim();
  std::size_t n = data.size();
  Standardizer tf;
  tf.mean.assign(d, 0.0);
  tf.scale.assign(d, 1.0);
  for (const auto& p : data.points())
    for (std::size_t j = 0; j < d; ++j) tf.mean[j] += p.features[j];
  for (std::size_t j = 0; j < d; ++j) tf.mean[j] /= static_cast<double>(n);
  std::vector<double> sq(d, 0.0);
  for (const auto& p : data.points())
    for (std::size_t j = 0; j < d; ++j) {
      double c = p.features[j] - tf.mean[j];
      sq[j] += c * c;
    }
  for (std::size_t j = 0; j < d; ++j) {
    double var = sq[j] / static_cast<double>(n);
    tf.scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return {tf.apply(data), tf};
}

}  // namespace dshap
