#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "dshap/data.hpp"
#include "dshap/errors.hpp"
#include "dshap/parallel.hpp"
#include "dshap/potential.hpp"
#include "dshap/random.hpp"

namespace dshap {

struct ExactConfig {
  int max_n = 12;                      // enumeration refuses larger instances
  std::int64_t mc_oracle_draws = 200000;
  int n_threads = 0;
};

namespace detail {

// Evaluates U on every subset of B, indexed by bitmask. Each subset is
// evaluated exactly once; evaluations are independent so they fan out to
// workers, each writing its own slot.
inline std::vector<double> subset_value_cache(std::span<const DataPoint* const> b,
                                              const Potential& u, int n_threads) {
  std::size_t m = b.size();
  std::vector<double> cache(static_cast<std::size_t>(1) << m);
  parallel_for(cache.size(), n_threads, [&](std::size_t mask) {
    std::vector<const DataPoint*> subset;
    subset.reserve(m);
    for (std::size_t i = 0; i < m; ++i)
      if (mask & (static_cast<std::size_t>(1) << i)) subset.push_back(b[i]);
    cache[mask] = u.evaluate(subset);
  });
  return cache;
}

inline std::vector<std::vector<double>> binomial_rows(int n) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    rows[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(i) + 1, 1.0);
    for (int j = 1; j < i; ++j)
      rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          rows[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] +
          rows[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)];
  }
  return rows;
}

}  // namespace detail

// Exact per-point values by full subset enumeration:
//   sh(z) = (1/m) sum_k 1/binom(m-1, k-1) sum_{S w/o z, |S| = k-1} [U(S+z) - U(S)]
// B is treated as a list of slots, so repeated points (multisets) are fine.
inline std::vector<double> exact_shapley_all(std::span<const DataPoint* const> b,
                                             const Potential& u,
                                             const ExactConfig& cfg = {}) {
  int m = static_cast<int>(b.size());
  if (m == 0) return {};
  if (m > cfg.max_n) throw std::invalid_argument("instance too large for enumeration");

  std::vector<double> cache = detail::subset_value_cache(b, u, cfg.n_threads);
  auto binom = detail::binomial_rows(m);
  std::vector<double> values(b.size(), 0.0);
  std::size_t full = (static_cast<std::size_t>(1) << m) - 1;
  for (int z = 0; z < m; ++z) {
    std::size_t zbit = static_cast<std::size_t>(1) << z;
    std::size_t others = full ^ zbit;
    double acc = 0.0;
    // iterate submasks of `others`, including the empty set
    std::size_t s = others;
    while (true) {
      int size = std::popcount(s);
      double w = 1.0 / binom[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(size)];
      acc += w * (cache[s | zbit] - cache[s]);
      if (s == 0) break;
      s = (s - 1) & others;
    }
    values[static_cast<std::size_t>(z)] = acc / static_cast<double>(m);
  }
  return values;
}

inline std::vector<double> exact_shapley_all(const Dataset& b, const Potential& u,
                                             const ExactConfig& cfg = {}) {
  auto ptrs = b.pointers();
  return exact_shapley_all(ptrs, u, cfg);
}

inline double exact_data_shapley(std::size_t z_index, const Dataset& b,
                                 const Potential& u, const ExactConfig& cfg = {}) {
  if (z_index >= b.size()) throw std::invalid_argument("exact_data_shapley: bad index");
  return exact_shapley_all(b, u, cfg)[z_index];
}

inline double exact_data_shapley(std::size_t z_index,
                                 std::span<const DataPoint* const> b,
                                 const Potential& u, const ExactConfig& cfg = {}) {
  if (z_index >= b.size()) throw std::invalid_argument("exact_data_shapley: bad index");
  return exact_shapley_all(b, u, cfg)[z_index];
}

// Returns (sum of exact values, U(B) - U(empty)); the two must agree.
inline std::pair<double, double> exact_efficiency_check(const Dataset& b,
                                                        const Potential& u,
                                                        const ExactConfig& cfg = {}) {
  auto values = exact_shapley_all(b, u, cfg);
  double total = std::accumulate(values.begin(), values.end(), 0.0);
  auto ptrs = b.pointers();
  return {total, u.evaluate(ptrs) - u.empty_value()};
}

// Cross-check: average the marginal contribution of each point to its
// predecessors over all |B|! orderings. Must match the subset form.
// Enumeration is capped at 6 points; beyond that the factorial blows up.
inline std::vector<double> exact_shapley_permutations(std::span<const DataPoint* const> b,
                                                      const Potential& u,
                                                      const ExactConfig& cfg = {}) {
  int m = static_cast<int>(b.size());
  if (m == 0) return {};
  if (m > 6) throw std::invalid_argument("permutation enumeration capped at 6 points");

  std::vector<double> cache = detail::subset_value_cache(b, u, cfg.n_threads);
  std::vector<int> order(b.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> sums(b.size(), 0.0);
  std::size_t n_perms = 0;
  do {
    std::size_t mask = 0;
    for (int idx : order) {
      std::size_t bit = static_cast<std::size_t>(1) << idx;
      sums[static_cast<std::size_t>(idx)] += cache[mask | bit] - cache[mask];
      mask |= bit;
    }
    ++n_perms;
  } while (std::next_permutation(order.begin(), order.end()));
  for (auto& v : sums) v /= static_cast<double>(n_perms);
  return sums;
}

struct OracleEstimate {
  double mean = 0.0;
  double stderr = 0.0;
  std::int64_t draws = 0;
};

// Brute-force Monte Carlo estimate of the value of z at horizon m: average
// of U(S+z) - U(S) over independent draws k ~ uniform[m], S ~ db^(k-1) with
// replacement. This is the reference every estimator is judged against.
inline OracleEstimate oracle_distributional_value(const DataPoint& z, const Dataset& db,
                                                  const Potential& u, int m,
                                                  std::int64_t draws, RandomSource& rng) {
  if (draws < 1) throw std::invalid_argument("oracle: draws must be >= 1");
  if (m < 1) throw std::invalid_argument("oracle: m must be >= 1");
  double mean = 0.0;
  double m2 = 0.0;
  for (std::int64_t t = 1; t <= draws; ++t) {
    int k = 1 + static_cast<int>(rng.next_index(static_cast<std::size_t>(m)));
    auto s = sample_subset(db, static_cast<std::size_t>(k - 1), rng);
    double x = marginal_contribution(u, s, z);
    double prev = mean;
    mean += (x - mean) / static_cast<double>(t);
    m2 += (x - prev) * (x - mean);
  }
  OracleEstimate out;
  out.mean = mean;
  out.draws = draws;
  out.stderr = draws > 1
                   ? std::sqrt(m2 / static_cast<double>(draws - 1) / static_cast<double>(draws))
                   : 0.0;
  return out;
}

}  // namespace dshap
