#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "dshap/data.hpp"
#include "dshap/errors.hpp"
#include "dshap/estimator.hpp"
#include "dshap/parallel.hpp"
#include "dshap/potential.hpp"
#include "dshap/random.hpp"
#include "dshap/value_table.hpp"

namespace dshap {

struct TmcConfig {
  std::int64_t max_permutations = 1000;
  // Scanning a permutation stops once |U(prefix) - U(B)| < tolerance;
  // the remaining points receive contribution 0 for that permutation.
  double truncation_tolerance = 0.01;
  int window = 100;          // convergence reuses the estimator's stopping rule
  double threshold = 0.01;
  std::uint64_t seed = 0;
  int n_threads = 0;

  void validate() const {
    if (max_permutations < 1) throw config_error("tmc: max_permutations must be >= 1");
    if (!(truncation_tolerance >= 0.0)) throw config_error("tmc: tolerance must be >= 0");
    if (window < 1) throw config_error("tmc: window must be >= 1");
  }
};

struct TmcResult {
  ValueTable table;
  std::int64_t permutations = 0;
  bool converged = false;
};

// Truncated Monte Carlo permutation estimator of fixed-dataset values:
// random orderings of B, each point credited with its marginal contribution
// to the prefix before it. U(B) is evaluated once per run as the truncation
// reference. Permutations run in fixed-size batches so results do not
// depend on the worker count; contributions fold in permutation order.
inline TmcResult tmc_shapley(const Dataset& b, const Potential& u, const TmcConfig& cfg) {
  cfg.validate();
  if (b.empty()) throw data_error("tmc: empty dataset");

  RandomSource root(cfg.seed);
  std::size_t n = b.size();
  double u_full = u.evaluate(b.pointers());
  double u_empty = u.empty_value();

  std::vector<std::int64_t> ids;
  ids.reserve(n);
  for (const auto& p : b.points()) ids.push_back(p.id);
  TmcResult out;
  out.table = ValueTable(std::move(ids), static_cast<int>(n), cfg.seed, "tmc", cfg.window);

  constexpr std::int64_t kBatch = 16;
  int threads = resolve_threads(cfg.n_threads);
  std::vector<std::vector<double>> batch_contrib(static_cast<std::size_t>(kBatch));

  std::int64_t t = 0;
  while (t < cfg.max_permutations && !out.converged) {
    std::int64_t batch = std::min<std::int64_t>(kBatch, cfg.max_permutations - t);
    parallel_for(static_cast<std::size_t>(batch), threads, [&](std::size_t bi) {
      RandomSource rng = root.substream(stream::kPermutation,
                                        static_cast<std::uint64_t>(t + static_cast<std::int64_t>(bi)));
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      fisher_yates(order, rng);

      auto& contrib = batch_contrib[bi];
      contrib.assign(n, 0.0);
      std::vector<const DataPoint*> prefix;
      prefix.reserve(n);
      double prev = u_empty;
      for (std::size_t pos = 0; pos < n; ++pos) {
        if (std::fabs(prev - u_full) < cfg.truncation_tolerance) break;
        prefix.push_back(b.ptr(order[pos]));
        double cur = u.evaluate(prefix);
        contrib[order[pos]] = cur - prev;
        prev = cur;
      }
    });
    for (std::int64_t bi = 0; bi < batch && !out.converged; ++bi) {
      ++t;
      auto& entries = out.table.entries();
      const auto& contrib = batch_contrib[static_cast<std::size_t>(bi)];
      for (std::size_t i = 0; i < n; ++i) entries[i].est.update(contrib[i]);
      out.permutations = t;
      if (t >= cfg.window && stopping_rule(out.table, cfg.window, cfg.threshold))
        out.converged = true;
    }
  }
  return out;
}

}  // namespace dshap
