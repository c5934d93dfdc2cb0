#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dshap/data.hpp"
#include "dshap/errors.hpp"
#include "dshap/estimator.hpp"
#include "dshap/potential.hpp"
#include "dshap/random.hpp"
#include "dshap/tmc.hpp"
#include "dshap/value_table.hpp"

namespace dshap {

// Average-rank vector, ties sharing the mean of their rank run.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
    i = j + 1;
  }
  return ranks;
}

// Spearman rank correlation with average-rank tie handling. Returns NaN if
// either input is constant.
inline double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("spearman: need at least 2 values");
  auto ra = average_ranks(a);
  auto rb = average_ranks(b);
  double n = static_cast<double>(a.size());
  double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  double den = std::sqrt(da * db);
  if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return num / den;
}

// Coefficient of determination of `pred` against reference `ref`.
inline double r2_score(std::span<const double> pred, std::span<const double> ref) {
  if (pred.size() != ref.size()) throw std::invalid_argument("r2_score: length mismatch");
  if (ref.empty()) throw std::invalid_argument("r2_score: empty input");
  double mean = std::accumulate(ref.begin(), ref.end(), 0.0) / static_cast<double>(ref.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    ss_res += (pred[i] - ref[i]) * (pred[i] - ref[i]);
    ss_tot += (ref[i] - mean) * (ref[i] - mean);
  }
  if (ss_tot == 0.0)
    return ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
  return 1.0 - ss_res / ss_tot;
}

enum class CurveOrder { by_value_desc, by_value_asc, random };

inline std::string to_string(CurveOrder o) {
  switch (o) {
    case CurveOrder::by_value_desc: return "by_value_desc";
    case CurveOrder::by_value_asc: return "by_value_asc";
    case CurveOrder::random: return "random";
  }
  return "?";
}

struct RemovalCurve {
  std::vector<double> fractions;  // strictly increasing, starts at 0
  std::vector<double> accuracy;
  std::string ordering;

  double auc() const {
    double s = 0.0;
    for (std::size_t i = 1; i < fractions.size(); ++i)
      s += 0.5 * (accuracy[i] + accuracy[i - 1]) * (fractions[i] - fractions[i - 1]);
    return s;
  }
};

namespace detail {

// Indices of `train` ordered for removal/addition. Value ties break by
// ascending id so orderings are reproducible.
inline std::vector<std::size_t> curve_order(const Dataset& train, const ValueTable& values,
                                            CurveOrder order, std::uint64_t order_seed) {
  std::vector<std::size_t> idx(train.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (order == CurveOrder::random) {
    RandomSource rng = RandomSource(order_seed).substream(stream::kOrdering);
    fisher_yates(idx, rng);
    return idx;
  }
  std::vector<double> v(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const ValueEntry* e = values.find(train[i].id);
    if (!e) throw data_error("curve: values missing id " + std::to_string(train[i].id));
    v[i] = e->est.mean;
  }
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (v[a] != v[b])
      return order == CurveOrder::by_value_desc ? v[a] > v[b] : v[a] < v[b];
    return train[a].id < train[b].id;
  });
  return idx;
}

// Step boundaries: `steps` batches of floor(N/steps) (min 1), the last batch
// absorbing the remainder, deduplicated so fractions stay strictly increasing.
inline std::vector<std::size_t> batch_boundaries(std::size_t n, int steps) {
  std::size_t batch = std::max<std::size_t>(1, n / static_cast<std::size_t>(steps));
  std::vector<std::size_t> out;
  for (int s = 1; s <= steps; ++s) {
    std::size_t taken = (s == steps) ? n : std::min(n, batch * static_cast<std::size_t>(s));
    if (out.empty() ? taken > 0 : taken > out.back()) out.push_back(taken);
    if (taken == n) break;
  }
  return out;
}

}  // namespace detail

// Removes points from `train` in batches following the given order,
// re-evaluating the potential on the remainder after each batch.
inline RemovalCurve point_removal_experiment(const Dataset& train, const ValueTable& values,
                                             const Potential& u, int steps, CurveOrder order,
                                             std::uint64_t order_seed = 0) {
  if (steps < 2) throw std::invalid_argument("removal: steps must be >= 2");
  if (train.empty()) throw data_error("removal: empty training set");
  auto idx = detail::curve_order(train, values, order, order_seed);

  RemovalCurve curve;
  curve.ordering = to_string(order);
  double n = static_cast<double>(train.size());
  curve.fractions.push_back(0.0);
  curve.accuracy.push_back(u.evaluate(train.pointers()));
  for (std::size_t removed : detail::batch_boundaries(train.size(), steps)) {
    std::vector<const DataPoint*> remaining;
    remaining.reserve(train.size() - removed);
    for (std::size_t i = removed; i < idx.size(); ++i) remaining.push_back(train.ptr(idx[i]));
    curve.fractions.push_back(static_cast<double>(removed) / n);
    curve.accuracy.push_back(u.evaluate(remaining));
  }
  return curve;
}

struct SpeedupSetting {
  WeightSchedule::Kind kind = WeightSchedule::Kind::uniform;
  double b = 1.0;
  double p = 1.0;

  std::string name() const {
    std::string s = kind == WeightSchedule::Kind::uniform
                        ? "uniform"
                        : "inverse_power(b=" + std::to_string(b).substr(0, 4) + ")";
    return s + ",p=" + std::to_string(p).substr(0, 4);
  }
};

struct SpeedupPoint {
  SpeedupSetting setting;
  double relative_cost = 0.0;    // training sizes processed / baseline
  double r2_vs_baseline = 0.0;   // recovery of the baseline values
};

// Cost/recovery trade-off: each setting re-runs the weighted estimator and
// is scored by R^2 of its values (estimated or interpolated) against the
// uniform p=1 baseline over the full valuation set.
inline std::vector<SpeedupPoint> speedup_recovery_experiment(
    const Dataset& z_set, const Dataset& db, const Potential& u,
    const EstimatorConfig& base_cfg, const std::vector<SpeedupSetting>& settings,
    const InterpolatorConfig& interp = {}) {
  EstimatorConfig cfg = base_cfg;
  cfg.schedule = WeightSchedule::uniform(cfg.m);
  EstimateResult baseline = fast_d_shapley(z_set, db, u, cfg);
  double base_cost = static_cast<double>(baseline.stats.total_training_size);
  std::vector<double> base_values;
  base_values.reserve(z_set.size());
  for (const auto& e : baseline.table.entries()) base_values.push_back(e.est.mean);

  std::vector<SpeedupPoint> out;
  for (const auto& s : settings) {
    EstimatorConfig run_cfg = base_cfg;
    run_cfg.schedule = WeightSchedule::make(s.kind, base_cfg.m, s.b);
    EstimateResult run = fast_d_shapley(z_set, db, u, run_cfg, s.p, &interp);
    std::vector<double> values;
    values.reserve(z_set.size());
    for (const auto& p : z_set.points()) values.push_back(run.table.value_of(p.id));
    SpeedupPoint pt;
    pt.setting = s;
    pt.relative_cost = static_cast<double>(run.stats.total_training_size) / base_cost;
    pt.r2_vs_baseline = r2_score(values, base_values);
    out.push_back(pt);
  }
  return out;
}

// (rank correlation, absolute percentage error) between a seller's listed
// values and a buyer's realized values over the same sold set. The APE
// denominator must be positive; otherwise the error is flagged invalid.
struct PricingMetrics {
  double rank_correlation = 0.0;
  double ape = 0.0;
  bool ape_valid = true;
  std::string note;
};

inline PricingMetrics pricing_metrics(std::span<const double> val, std::span<const double> sh) {
  PricingMetrics m;
  m.rank_correlation = spearman(val, sh);
  double sum_val = std::accumulate(val.begin(), val.end(), 0.0);
  double sum_sh = std::accumulate(sh.begin(), sh.end(), 0.0);
  if (sum_val <= 0.0) {
    m.ape = std::numeric_limits<double>::quiet_NaN();
    m.ape_valid = false;
    m.note = "APE undefined: listed values sum to " + std::to_string(sum_val);
  } else {
    m.ape = std::fabs(sum_val - sum_sh) / sum_val;
  }
  return m;
}

using PotentialBuilder = std::function<std::unique_ptr<Potential>(const Dataset& context)>;

struct PricingConfig {
  EstimatorConfig seller;   // horizon m is overridden by the study's m
  double seller_subsample_p = 1.0;
  TmcConfig buyer;
  int steps = 10;
  std::uint64_t order_seed = 0;  // for the random addition curve
};

struct PricingReport {
  PricingMetrics metrics;
  std::vector<double> listed_values;    // seller's val per sold point
  std::vector<double> realized_values;  // buyer's sh per sold point
  RemovalCurve addition_by_val;
  RemovalCurve addition_by_sh;
  RemovalCurve addition_random;
  std::int64_t seller_iterations = 0;
  std::int64_t buyer_permutations = 0;
};

namespace detail {

// Accuracy as points of `sold` are appended to the buyer's base set in the
// given order; the final step always absorbs the rest of the sold set.
inline RemovalCurve addition_curve(const Dataset& base, const Dataset& sold,
                                   const std::vector<std::size_t>& order,
                                   const Potential& u, int steps, const std::string& name) {
  RemovalCurve curve;
  curve.ordering = name;
  std::vector<const DataPoint*> current = base.pointers();
  curve.fractions.push_back(0.0);
  curve.accuracy.push_back(u.evaluate(current));
  double n = static_cast<double>(sold.size());
  std::size_t added = 0;
  for (std::size_t target : batch_boundaries(sold.size(), steps)) {
    for (; added < target; ++added) current.push_back(sold.ptr(order[added]));
    curve.fractions.push_back(static_cast<double>(target) / n);
    curve.accuracy.push_back(u.evaluate(current));
  }
  return curve;
}

inline std::vector<std::size_t> order_by_desc(const std::vector<double>& v,
                                              const Dataset& ds) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (v[a] != v[b]) return v[a] > v[b];
    return ds[a].id < ds[b].id;
  });
  return idx;
}

}  // namespace detail

// Two-party pricing study. The seller, holding seller_db, lists values for
// the sold set; the buyer, holding buyer_b, realizes values by running the
// permutation estimator on buyer_b + sold_s. The report compares the two and
// traces the accuracy as sold points are added to the buyer's set in three
// orders.
//
// The seller values at horizon |B| + |S| = 2m — the size of the set the
// buyer ends up holding. The expected fixed-set value of z within B + S
// (2m - 1 i.i.d. peers) is by definition the distributional value at that
// horizon, so any other choice would systematically misprice the total.
inline PricingReport pricing_case_study(const Dataset& seller_db, const Dataset& buyer_b,
                                        const Dataset& sold_s, const PotentialBuilder& builder,
                                        int m, const PricingConfig& cfg) {
  if (static_cast<int>(buyer_b.size()) != m || static_cast<int>(sold_s.size()) != m)
    throw config_error("pricing: buyer and sold sets must both have m points");
  for (const auto& p : sold_s.points())
    if (buyer_b.find(p.id))
      throw data_error("pricing: buyer and sold ids must be disjoint");

  // Seller side.
  EstimatorConfig seller_cfg = cfg.seller;
  seller_cfg.m = 2 * m;
  seller_cfg.schedule = WeightSchedule::make(cfg.seller.schedule.kind(), 2 * m,
                                             cfg.seller.schedule.b());
  std::unique_ptr<Potential> u_seller = builder(seller_db);
  EstimateResult listed = fast_d_shapley(sold_s, seller_db, *u_seller, seller_cfg,
                                         cfg.seller_subsample_p);

  // Buyer side.
  std::vector<DataPoint> merged_pts = buyer_b.points();
  merged_pts.insert(merged_pts.end(), sold_s.points().begin(), sold_s.points().end());
  Dataset merged(std::move(merged_pts), buyer_b.label_kind(),
                 std::max(buyer_b.n_classes(), sold_s.n_classes()));
  std::unique_ptr<Potential> u_buyer = builder(merged);
  TmcResult realized = tmc_shapley(merged, *u_buyer, cfg.buyer);

  PricingReport report;
  report.seller_iterations = listed.stats.iterations;
  report.buyer_permutations = realized.permutations;
  for (const auto& p : sold_s.points()) {
    report.listed_values.push_back(listed.table.value_of(p.id));
    report.realized_values.push_back(realized.table.value_of(p.id));
  }
  report.metrics = pricing_metrics(report.listed_values, report.realized_values);

  auto by_val = detail::order_by_desc(report.listed_values, sold_s);
  auto by_sh = detail::order_by_desc(report.realized_values, sold_s);
  std::vector<std::size_t> rnd(sold_s.size());
  std::iota(rnd.begin(), rnd.end(), 0);
  RandomSource order_rng = RandomSource(cfg.order_seed).substream(stream::kOrdering);
  fisher_yates(rnd, order_rng);

  report.addition_by_val =
      detail::addition_curve(buyer_b, sold_s, by_val, *u_buyer, cfg.steps, "by_val");
  report.addition_by_sh =
      detail::addition_curve(buyer_b, sold_s, by_sh, *u_buyer, cfg.steps, "by_sh");
  report.addition_random =
      detail::addition_curve(buyer_b, sold_s, rnd, *u_buyer, cfg.steps, "random");
  return report;
}

}  // namespace dshap
