#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "dshap/data.hpp"
#include "dshap/errors.hpp"
#include "dshap/random.hpp"

namespace dshap {

// Unlabeled i.i.d. normal features, mean `mu`, stddev `sigma` per coordinate.
inline Dataset synth_standard_normal(int n, int d, std::uint64_t seed, double mu = 0.0,
                                     double sigma = 1.0) {
  if (n < 1 || d < 1) throw config_error("synth normal: n and d must be >= 1");
  RandomSource rng = RandomSource(seed).substream(stream::kFixture);
  std::vector<DataPoint> pts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    pts[static_cast<std::size_t>(i)].id = i;
    auto& f = pts[static_cast<std::size_t>(i)].features;
    f.resize(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) f[static_cast<std::size_t>(j)] = mu + sigma * rng.next_gaussian();
  }
  return Dataset(std::move(pts), LabelKind::none);
}

struct BlobsSpec {
  int n = 200;
  int d = 2;
  int n_classes = 2;
  double separation = 4.0;     // distance between adjacent class centers
  double flip_fraction = 0.0;  // fraction of labels flipped to a random other class
  double margin = 0.0;         // 2-class only: resample points within margin/2 of the midline
  std::uint64_t seed = 0;
};

struct BlobsResult {
  Dataset data;
  std::vector<bool> flipped;  // per point, whether its label was corrupted
};

// Gaussian class blobs with unit-variance clouds and centers spread along
// the first axis. Labels cycle through the classes so every class is
// populated deterministically.
inline BlobsResult synth_gaussian_blobs(const BlobsSpec& spec) {
  if (spec.n < 1 || spec.d < 1 || spec.n_classes < 2)
    throw config_error("synth blobs: need n >= 1, d >= 1, n_classes >= 2");
  if (spec.margin > 0.0 && spec.n_classes != 2)
    throw config_error("synth blobs: margin requires 2 classes");
  RandomSource rng = RandomSource(spec.seed).substream(stream::kFixture);

  std::vector<DataPoint> pts(static_cast<std::size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i) {
    int c = i % spec.n_classes;
    double center = spec.separation * (static_cast<double>(c) -
                                       0.5 * static_cast<double>(spec.n_classes - 1));
    auto& p = pts[static_cast<std::size_t>(i)];
    p.id = i;
    p.label = static_cast<double>(c);
    p.features.resize(static_cast<std::size_t>(spec.d));
    while (true) {
      p.features[0] = center + rng.next_gaussian();
      for (int j = 1; j < spec.d; ++j)
        p.features[static_cast<std::size_t>(j)] = rng.next_gaussian();
      if (spec.margin <= 0.0) break;
      // keep the two clouds linearly separable with the requested gap
      double side = c == 0 ? -1.0 : 1.0;
      if (side * p.features[0] >= spec.margin / 2.0) break;
    }
  }

  BlobsResult out;
  out.flipped.assign(static_cast<std::size_t>(spec.n), false);
  if (spec.flip_fraction > 0.0) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(spec.n));
    std::iota(idx.begin(), idx.end(), 0);
    fisher_yates(idx, rng);
    auto n_flip = static_cast<std::size_t>(std::floor(spec.flip_fraction * spec.n));
    for (std::size_t i = 0; i < n_flip; ++i) {
      auto& p = pts[idx[i]];
      int old_label = static_cast<int>(*p.label);
      int shift = 1 + static_cast<int>(rng.next_index(static_cast<std::size_t>(spec.n_classes - 1)));
      p.label = static_cast<double>((old_label + shift) % spec.n_classes);
      out.flipped[idx[i]] = true;
    }
  }
  out.data = Dataset(std::move(pts), LabelKind::categorical, spec.n_classes);
  return out;
}

// Real-valued regression targets y = w.x + noise with w drawn once from the
// seed stream; features are standard normal.
inline Dataset synth_linear_gaussian(int n, int d, double noise_sigma, std::uint64_t seed) {
  if (n < 1 || d < 1) throw config_error("synth linear: n and d must be >= 1");
  RandomSource rng = RandomSource(seed).substream(stream::kFixture);
  std::vector<double> w(static_cast<std::size_t>(d));
  for (auto& v : w) v = rng.next_gaussian();
  std::vector<DataPoint> pts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& p = pts[static_cast<std::size_t>(i)];
    p.id = i;
    p.features.resize(static_cast<std::size_t>(d));
    double y = 0.0;
    for (int j = 0; j < d; ++j) {
      p.features[static_cast<std::size_t>(j)] = rng.next_gaussian();
      y += w[static_cast<std::size_t>(j)] * p.features[static_cast<std::size_t>(j)];
    }
    p.label = y + noise_sigma * rng.next_gaussian();
  }
  return Dataset(std::move(pts), LabelKind::real);
}

// Distribution-shift knob: additive N(0, sigma^2) feature noise.
inline Dataset add_feature_noise(const Dataset& data, double sigma, std::uint64_t seed) {
  RandomSource rng = RandomSource(seed).substream(stream::kFixture);
  std::vector<DataPoint> pts = data.points();
  for (auto& p : pts)
    for (auto& f : p.features) f += sigma * rng.next_gaussian();
  return Dataset(std::move(pts), data.label_kind(), data.n_classes());
}

// Distribution-shift knob: resample (with replacement) to the target class
// proportions. Proportions must sum to ~1 and cover every class.
inline Dataset rebalance_classes(const Dataset& data, const std::vector<double>& probs,
                                 std::uint64_t seed) {
  if (data.label_kind() != LabelKind::categorical)
    throw config_error("rebalance: categorical labels required");
  if (static_cast<int>(probs.size()) != data.n_classes())
    throw config_error("rebalance: one probability per class required");
  double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (std::fabs(total - 1.0) > 1e-9) throw config_error("rebalance: probabilities must sum to 1");

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(data.n_classes()));
  for (std::size_t i = 0; i < data.size(); ++i)
    by_class[static_cast<std::size_t>(*data[i].label)].push_back(i);
  for (int c = 0; c < data.n_classes(); ++c)
    if (probs[static_cast<std::size_t>(c)] > 0.0 && by_class[static_cast<std::size_t>(c)].empty())
      throw data_error("rebalance: no points available for class " + std::to_string(c));

  RandomSource rng = RandomSource(seed).substream(stream::kFixture);
  std::vector<DataPoint> pts;
  pts.reserve(data.size());
  std::size_t produced = 0;
  for (int c = 0; c < data.n_classes(); ++c) {
    std::size_t want = c + 1 == data.n_classes()
                           ? data.size() - produced
                           : static_cast<std::size_t>(
                                 std::llround(probs[static_cast<std::size_t>(c)] *
                                              static_cast<double>(data.size())));
    const auto& pool = by_class[static_cast<std::size_t>(c)];
    if (want > 0 && pool.empty())
      throw data_error("rebalance: no points available for class " + std::to_string(c));
    for (std::size_t i = 0; i < want; ++i) {
      DataPoint p = data[pool[rng.next_index(pool.size())]];
      p.id = static_cast<std::int64_t>(pts.size());
      pts.push_back(std::move(p));
    }
    produced += want;
  }
  return Dataset(std::move(pts), LabelKind::categorical, data.n_classes());
}

}  // namespace dshap
