#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dshap/data.hpp"
#include "dshap/potential.hpp"

namespace dshap::testutil {

inline Dataset dataset_1d(const std::vector<double>& xs) {
  std::vector<DataPoint> pts;
  for (std::size_t i = 0; i < xs.size(); ++i)
    pts.push_back({{xs[i]}, std::nullopt, static_cast<std::int64_t>(i)});
  return Dataset(std::move(pts), LabelKind::none);
}

inline Dataset labeled_dataset(const std::vector<std::vector<double>>& xs,
                               const std::vector<double>& ys, LabelKind kind) {
  std::vector<DataPoint> pts;
  for (std::size_t i = 0; i < xs.size(); ++i)
    pts.push_back({xs[i], ys[i], static_cast<std::int64_t>(i)});
  return Dataset(std::move(pts), kind);
}

// Arbitrary set function for oracle-style fixtures.
class FunctionPotential : public Potential {
 public:
  using Fn = std::function<double(const std::vector<const DataPoint*>&)>;
  explicit FunctionPotential(Fn fn) : Potential("function"), fn_(std::move(fn)) {}

 protected:
  double eval_sorted(const std::vector<const DataPoint*>& train) const override {
    return fn_(train);
  }

 private:
  Fn fn_;
};

}  // namespace dshap::testutil
