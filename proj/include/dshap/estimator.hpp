#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dshap/data.hpp"
#include "dshap/errors.hpp"
#include "dshap/interpolate.hpp"
#include "dshap/parallel.hpp"
#include "dshap/potential.hpp"
#include "dshap/random.hpp"
#include "dshap/schedule.hpp"
#include "dshap/value_table.hpp"

namespace dshap {

struct EstimatorConfig {
  int m = 100;                       // horizon: the data set size being valued against
  std::int64_t t_max = 1000;         // iteration cap
  WeightSchedule schedule = WeightSchedule::uniform(100);
  int window = 100;                  // stopping-rule window W
  double threshold = 0.01;           // stopping-rule relative threshold
  std::uint64_t seed = 0;
  bool record_cardinalities = false; // keep per-iteration records for prefix extraction
  int n_threads = 0;                 // 0 = hardware concurrency

  void validate() const {
    if (m < 1) throw config_error("estimator: m must be >= 1");
    if (window < 1) throw config_error("estimator: window must be >= 1");
    if (t_max < window) throw config_error("estimator: T_max must be >= window");
    if (!(threshold > 0.0 && threshold < 1.0))
      throw config_error("estimator: threshold must be in (0,1)");
    if (schedule.m() != m) throw config_error("estimator: schedule horizon != m");
  }
};

// Raw per-iteration contributions, pre-reweighting, for every valued point.
// Retaining these allows re-deriving estimates for any smaller horizon.
struct IterationRecord {
  std::int64_t t = 0;
  int k = 0;
  std::vector<double> contributions;
};

struct RunStats {
  std::int64_t iterations = 0;
  bool converged = false;
  // Sum of training-set sizes processed: (k-1) for the shared base model
  // plus k per valued point, per iteration. A machine-independent cost proxy.
  std::int64_t total_training_size = 0;
};

struct EstimateResult {
  ValueTable table;
  RunStats stats;
  std::vector<IterationRecord> records;
  EstimatorConfig config;
  std::vector<std::string> warnings;
};

// Converged when the average |change| over the last W iterations and over
// all estimated points drops below threshold * mean |value| (mean |value|
// floored at 1e-12). A window whose every recorded change is exactly zero
// counts as converged regardless, which handles constant potentials.
inline bool stopping_rule(const ValueTable& table, int window, double threshold) {
  double change_sum = 0.0;
  std::size_t change_n = 0;
  bool all_zero = true;
  for (const auto& e : table.entries()) {
    if (e.interpolated) continue;
    if (e.est.count < window) return false;
    change_sum += e.est.history.sum();
    change_n += e.est.history.size();
    if (!e.est.history.all_zero()) all_zero = false;
  }
  if (change_n == 0) return false;
  if (all_zero) return true;
  double mean_change = change_sum / static_cast<double>(change_n);
  return mean_change < threshold * std::max(table.mean_abs_value(), 1e-12);
}

namespace detail {

inline EstimateResult run_weighted_estimator(const Dataset& z_set, const Dataset& db,
                                             const Potential& u, const EstimatorConfig& cfg,
                                             double subsample_p,
                                             const InterpolatorConfig* interp) {
  cfg.validate();
  if (z_set.empty()) throw data_error("estimator: empty valuation set");
  if (db.empty()) throw data_error("estimator: empty database");
  if (!(subsample_p > 0.0 && subsample_p <= 1.0))
    throw config_error("estimator: subsample_p must be in (0,1]");

  RandomSource root(cfg.seed);
  EstimateResult out;
  out.config = cfg;

  // Choose the subsample. Substreams keep the iteration randomness
  // untouched, so p = 1 reproduces the plain estimator bit-for-bit.
  std::vector<std::size_t> kept;
  if (subsample_p < 1.0) {
    RandomSource sub = root.substream(stream::kSubsample);
    for (std::size_t i = 0; i < z_set.size(); ++i)
      if (sub.next_real() < subsample_p) kept.push_back(i);
    if (kept.empty()) {
      // Fallback: force min(|Z|, ceil(p |Z|)) distinct points.
      std::size_t forced = std::max<std::size_t>(
          1, static_cast<std::size_t>(
                 std::ceil(subsample_p * static_cast<double>(z_set.size()))));
      std::vector<std::size_t> all(z_set.size());
      std::iota(all.begin(), all.end(), 0);
      fisher_yates(all, sub);
      kept.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(forced));
      std::sort(kept.begin(), kept.end());
      out.warnings.push_back("subsample came up empty; forced " +
                             std::to_string(forced) + " point(s)");
    }
  } else {
    kept.resize(z_set.size());
    std::iota(kept.begin(), kept.end(), 0);
  }

  std::vector<std::int64_t> ids;
  ids.reserve(kept.size());
  for (std::size_t i : kept) ids.push_back(z_set[i].id);
  ValueTable table(std::move(ids), cfg.m, cfg.seed, cfg.schedule.name(), cfg.window);

  int threads = resolve_threads(cfg.n_threads);
  std::vector<double> delta(kept.size());
  for (std::int64_t t = 1; t <= cfg.t_max; ++t) {
    RandomSource rng_t = root.substream(stream::kIteration, static_cast<std::uint64_t>(t));
    int k = cfg.schedule.sample(rng_t);
    auto s = sample_subset(db, static_cast<std::size_t>(k - 1), rng_t);
    double base = u.evaluate(s);
    parallel_for(kept.size(), threads, [&](std::size_t i) {
      std::vector<const DataPoint*> with_z(s.begin(), s.end());
      with_z.push_back(z_set.ptr(kept[i]));
      delta[i] = u.evaluate(with_z) - base;
    });
    out.stats.total_training_size +=
        static_cast<std::int64_t>(k - 1) +
        static_cast<std::int64_t>(kept.size()) * static_cast<std::int64_t>(k);

    double divisor = cfg.schedule.reweight(k);
    auto& entries = table.entries();
    for (std::size_t i = 0; i < kept.size(); ++i)
      entries[i].est.update(delta[i] / divisor);

    if (cfg.record_cardinalities)
      out.records.push_back({t, k, delta});

    out.stats.iterations = t;
    if (t >= cfg.window && stopping_rule(table, cfg.window, cfg.threshold)) {
      out.stats.converged = true;
      break;
    }
  }

  // Fill unvalued points by regression on (point, value) pairs.
  if (interp && kept.size() < z_set.size()) {
    std::vector<std::pair<const DataPoint*, double>> pairs;
    pairs.reserve(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i)
      pairs.emplace_back(z_set.ptr(kept[i]), table.entries()[i].est.mean);
    std::vector<double> required;
    if (z_set.label_kind() == LabelKind::categorical) {
      for (const auto& p : z_set.points())
        if (std::find(required.begin(), required.end(), *p.label) == required.end())
          required.push_back(*p.label);
    }
    ValueInterpolator fitted = ValueInterpolator::fit(pairs, *interp,
                                                      required.empty() ? nullptr : &required);
    for (const auto& w : fitted.warnings()) out.warnings.push_back(w);

    // Rebuild in the valuation set's order, flags telling the two kinds apart.
    std::vector<std::int64_t> all_ids;
    all_ids.reserve(z_set.size());
    for (const auto& p : z_set.points()) all_ids.push_back(p.id);
    ValueTable merged(std::move(all_ids), cfg.m, cfg.seed, cfg.schedule.name(), cfg.window);
    std::size_t next_kept = 0;
    for (std::size_t i = 0; i < z_set.size(); ++i) {
      auto& entry = merged.entries()[i];
      if (next_kept < kept.size() && kept[next_kept] == i) {
        entry.est = table.entries()[next_kept].est;
        ++next_kept;
      } else {
        entry.interpolated = true;
        entry.est.mean = fitted.predict(z_set[i]);
      }
    }
    out.table = std::move(merged);
  } else {
    out.table = std::move(table);
  }
  return out;
}

}  // namespace detail

// Baseline estimator: uniform cardinality sampling, no subsampling, no
// reweighting (the uniform divisor is 1). One shared sample S_t per
// iteration serves every valued point, so each iteration trains one base
// model plus one model per point.
inline EstimateResult d_shapley(const Dataset& z_set, const Dataset& db,
                                const Potential& u, const EstimatorConfig& cfg) {
  if (cfg.schedule.kind() != WeightSchedule::Kind::uniform)
    throw config_error("use fast_d_shapley for non-uniform schedules");
  return detail::run_weighted_estimator(z_set, db, u, cfg, 1.0, nullptr);
}

// Weighted estimator: draws k with Pr[k] = w_k, divides each contribution by
// w_k * m to stay unbiased, optionally values only a p-subsample of Z and
// fills the rest by interpolation. With the uniform schedule and p = 1 this
// degenerates to d_shapley exactly.
inline EstimateResult fast_d_shapley(const Dataset& z_set, const Dataset& db,
                                     const Potential& u, const EstimatorConfig& cfg,
                                     double subsample_p = 1.0,
                                     const InterpolatorConfig* interp = nullptr) {
  return detail::run_weighted_estimator(z_set, db, u, cfg, subsample_p, interp);
}

// Re-derives estimates for a smaller horizon m' from a recorded run, using
// only iterations with k <= m' and the conditional schedule over [1, m'].
inline ValueTable prefix_values(const EstimateResult& run, int m_prime) {
  if (run.records.empty())
    throw std::invalid_argument("prefix_values: run has no cardinality records");
  if (m_prime < 1 || m_prime > run.config.m)
    throw std::invalid_argument("prefix_values: m' must be in [1, m]");

  WeightSchedule cond = run.config.schedule.truncated(m_prime);
  bool any = false;
  for (const auto& rec : run.records)
    if (rec.k <= m_prime) {
      any = true;
      break;
    }
  if (!any) throw std::runtime_error("insufficient samples for m'");

  std::vector<std::int64_t> ids;
  for (const auto& e : run.table.entries())
    if (!e.interpolated) ids.push_back(e.id);
  ValueTable table(std::move(ids), m_prime, run.config.seed, cond.name(),
                   run.config.window);
  for (const auto& rec : run.records) {
    if (rec.k > m_prime) continue;
    double divisor = cond.reweight(rec.k);
    auto& entries = table.entries();
    for (std::size_t i = 0; i < entries.size(); ++i)
      entries[i].est.update(rec.contributions[i] / divisor);
  }
  return table;
}

}  // namespace dshap
