#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "dshap/data.hpp"

namespace dshap {

// A set function mapping a training multiset to a performance score,
// bundling learner and metric. Implementations must be deterministic and
// immutable after construction so they can be shared across workers.
//
// evaluate() canonicalizes the input order before dispatching, which makes
// every potential permutation-invariant down to the last bit.
class Potential {
 public:
  virtual ~Potential() = default;

  double evaluate(std::span<const DataPoint* const> train) const {
    std::vector<const DataPoint*> s(train.begin(), train.end());
    std::sort(s.begin(), s.end(), point_before);
    return eval_sorted(s);
  }

  double empty_value() const { return eval_sorted({}); }

  const std::string& name() const { return name_; }

 protected:
  explicit Potential(std::string name) : name_(std::move(name)) {}
  virtual double eval_sorted(const std::vector<const DataPoint*>& train) const = 0;

 private:
  std::string name_;
};

inline double marginal_contribution(const Potential& u,
                                    std::span<const DataPoint* const> s,
                                    const DataPoint& z) {
  std::vector<const DataPoint*> with_z(s.begin(), s.end());
  with_z.push_back(&z);
  return u.evaluate(with_z) - u.evaluate(s);
}

}  // namespace dshap
