#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dshap/data.hpp"
#include "dshap/exact.hpp"
#include "dshap/parallel.hpp"
#include "dshap/potential.hpp"
#include "dshap/potentials.hpp"
#include "dshap/random.hpp"
#include "dshap/synth.hpp"
#include "dshap/tmc.hpp"

namespace dshap {

// Weighted sum of two potentials: a*U1 + b*U2. Values are linear in the
// potential, so exact values under the sum must equal the weighted sum of
// the exact values.
class WeightedSumPotential : public Potential {
 public:
  WeightedSumPotential(const Potential& u1, const Potential& u2, double a, double b)
      : Potential("sum(" + u1.name() + "," + u2.name() + ")"),
        u1_(u1), u2_(u2), a_(a), b_(b) {}

 protected:
  double eval_sorted(const std::vector<const DataPoint*>& train) const override {
    return a_ * u1_.evaluate(train) + b_ * u2_.evaluate(train);
  }

 private:
  const Potential& u1_;
  const Potential& u2_;
  double a_, b_;
};

// Drops every occurrence of one id before delegating, making that point a
// provable null player: its marginal contribution is identically zero.
class IgnorePointPotential : public Potential {
 public:
  IgnorePointPotential(const Potential& inner, std::int64_t ignored_id)
      : Potential("ignore(" + inner.name() + ")"), inner_(inner), ignored_(ignored_id) {}

 protected:
  double eval_sorted(const std::vector<const DataPoint*>& train) const override {
    std::vector<const DataPoint*> kept;
    kept.reserve(train.size());
    for (const DataPoint* p : train)
      if (p->id != ignored_) kept.push_back(p);
    return inner_.evaluate(kept);
  }

 private:
  const Potential& inner_;
  std::int64_t ignored_;
};

// U(S) = sum of per-id credits, normalized by the total credit; clipping
// never triggers when credits are non-negative. Exact values equal each
// point's normalized credit.
class AdditivePotential : public Potential {
 public:
  explicit AdditivePotential(std::vector<std::pair<std::int64_t, double>> credits)
      : Potential("additive") {
    double total = 0.0;
    for (auto& [id, c] : credits) total += c;
    for (auto& [id, c] : credits) credit_[id] = c / total;
  }

  double share(std::int64_t id) const { return credit_.at(id); }

 protected:
  double eval_sorted(const std::vector<const DataPoint*>& train) const override {
    double s = 0.0;
    for (const DataPoint* p : train) {
      auto it = credit_.find(p->id);
      if (it != credit_.end()) s += it->second;
    }
    return s;
  }

 private:
  std::map<std::int64_t, double> credit_;
};

// U(S) = 1 iff the marked point is present.
class IndicatorPotential : public Potential {
 public:
  explicit IndicatorPotential(std::int64_t target) : Potential("indicator"), target_(target) {}

 protected:
  double eval_sorted(const std::vector<const DataPoint*>& train) const override {
    for (const DataPoint* p : train)
      if (p->id == target_) return 1.0;
    return 0.0;
  }

 private:
  std::int64_t target_;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

struct VerifyOptions {
  int instances = 50;       // randomized instances per axiom
  int max_n = 8;            // instance size cap (enumeration stays cheap)
  double tolerance = 1e-9;  // axiom identity tolerance
  std::uint64_t seed = 20240501;
  std::int64_t oracle_draws = 40000;
  std::int64_t def22_resamples = 2000;
  int n_threads = 0;
};

namespace detail {

struct Instance {
  Dataset data;
  std::unique_ptr<Potential> potential;
  std::string kind;
};

// Rotates through the built-in potentials with small random fixtures.
inline Instance random_instance(int which, int n, std::uint64_t seed) {
  Instance inst;
  switch (which % 4) {
    case 0: {
      inst.kind = "mean";
      inst.data = synth_standard_normal(n, 2, seed);
      inst.potential = std::make_unique<MeanEstimationPotential>(
          std::vector<double>{0.0, 0.0}, 2.0, /*clip=*/true);
      break;
    }
    case 1: {
      inst.kind = "knn";
      BlobsSpec spec;
      spec.n = n;
      spec.d = 2;
      spec.separation = 3.0;
      spec.seed = seed;
      inst.data = synth_gaussian_blobs(spec).data;
      BlobsSpec test_spec = spec;
      test_spec.n = 9;
      test_spec.seed = seed ^ 0x5bd1e995;
      inst.potential =
          std::make_unique<KnnPotential>(synth_gaussian_blobs(test_spec).data, 3);
      break;
    }
    case 2: {
      inst.kind = "ridge";
      inst.data = synth_linear_gaussian(n, 2, 0.3, seed);
      inst.potential = std::make_unique<RidgePotential>(
          synth_linear_gaussian(10, 2, 0.3, seed ^ 0x9747b28c), 1.0);
      break;
    }
    default: {
      inst.kind = "logistic";
      BlobsSpec spec;
      spec.n = n;
      spec.d = 2;
      spec.separation = 3.0;
      spec.seed = seed;
      inst.data = synth_gaussian_blobs(spec).data;
      BlobsSpec test_spec = spec;
      test_spec.n = 10;
      test_spec.seed = seed ^ 0x7f4a7c15;
      inst.potential =
          std::make_unique<LogisticPotential>(synth_gaussian_blobs(test_spec).data);
      break;
    }
  }
  return inst;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace detail

// Axiom checks on randomized small instances, by direct enumeration:
//  - symmetry: a duplicated point gets the duplicate's exact value
//  - null player: an ignored point gets exactly zero
//  - additivity: values under a*U1 + b*U2 equal the weighted value sums
//  - efficiency: values sum to U(B) - U(empty)
// plus agreement between the subset and permutation characterizations.
inline VerifyReport run_axiom_suite(const VerifyOptions& opt) {
  VerifyReport report;
  RandomSource root(opt.seed);
  ExactConfig exact_cfg;
  exact_cfg.n_threads = opt.n_threads;

  double worst_sym = 0.0, worst_null = 0.0, worst_add = 0.0, worst_eff = 0.0,
         worst_perm = 0.0;
  for (int i = 0; i < opt.instances; ++i) {
    RandomSource inst_rng = root.substream(100, static_cast<std::uint64_t>(i));
    int n = 3 + static_cast<int>(inst_rng.next_index(
                    static_cast<std::size_t>(std::max(1, opt.max_n - 3))));
    auto inst = detail::random_instance(i, n, inst_rng.next_u64());
    const Dataset& b = inst.data;
    const Potential& u = *inst.potential;

    // symmetry: duplicate point 0 under a fresh id
    {
      std::vector<DataPoint> pts = b.points();
      DataPoint dup = pts[0];
      dup.id = 1000000 + pts.back().id;
      pts.push_back(dup);
      Dataset with_dup(std::move(pts), b.label_kind(), b.n_classes());
      auto values = exact_shapley_all(with_dup, u, exact_cfg);
      worst_sym = std::max(worst_sym, std::fabs(values.front() - values.back()));
    }
    // null player: make point 0 invisible to the potential
    {
      IgnorePointPotential ignored(u, b[0].id);
      auto values = exact_shapley_all(b, ignored, exact_cfg);
      worst_null = std::max(worst_null, std::fabs(values[0]));
    }
    // additivity against a second potential on the same data
    {
      auto other = detail::random_instance(i + 1, n, inst_rng.next_u64());
      // the second potential must accept this instance's data; mean works for
      // any dataset, so pair with a clipped mean score on the same features
      std::vector<double> mu(b.dim(), 0.0);
      MeanEstimationPotential u2(mu, 2.0, /*clip=*/true);
      WeightedSumPotential sum(u, u2, 0.5, 0.5);
      auto v_sum = exact_shapley_all(b, sum, exact_cfg);
      auto v1 = exact_shapley_all(b, u, exact_cfg);
      auto v2 = exact_shapley_all(b, u2, exact_cfg);
      for (std::size_t z = 0; z < b.size(); ++z)
        worst_add = std::max(worst_add, std::fabs(v_sum[z] - 0.5 * v1[z] - 0.5 * v2[z]));
    }
    // efficiency
    {
      auto [total, target] = exact_efficiency_check(b, u, exact_cfg);
      worst_eff = std::max(worst_eff, std::fabs(total - target));
    }
    // subset form vs permutation form on the smallest instances
    if (n <= 6) {
      auto ptrs = b.pointers();
      auto v_perm = exact_shapley_permutations(ptrs, u, exact_cfg);
      auto v_sub = exact_shapley_all(b, u, exact_cfg);
      for (std::size_t z = 0; z < b.size(); ++z)
        worst_perm = std::max(worst_perm, std::fabs(v_perm[z] - v_sub[z]));
    }
  }

  auto add = [&](const std::string& name, double worst) {
    report.checks.push_back({name, worst <= opt.tolerance,
                             "max |error| = " + detail::fmt(worst)});
  };
  add("symmetry", worst_sym);
  add("null_player", worst_null);
  add("additivity", worst_add);
  add("efficiency", worst_eff);
  add("permutation_vs_subset", worst_perm);
  return report;
}

// Average of exact values over freshly resampled databases vs the brute-force
// expected marginal contribution, within 3 combined standard errors. `draw_z`
// supplies the fixed point being valued; `draw_db` supplies i.i.d. context
// points from the same source the oracle samples from.
inline CheckResult resampled_exact_vs_oracle(const Dataset& db, const Potential& u, int m,
                                             std::int64_t resamples, std::int64_t draws,
                                             std::uint64_t seed, int n_threads = 0) {
  ExactConfig cfg;
  cfg.n_threads = n_threads;
  RandomSource root(seed);
  const DataPoint& z = db[0];

  double mean = 0.0, m2 = 0.0;
  std::vector<std::vector<double>> batch(16);
  std::int64_t done = 0;
  while (done < resamples) {
    std::int64_t count = std::min<std::int64_t>(16, resamples - done);
    parallel_for(static_cast<std::size_t>(count), n_threads, [&](std::size_t i) {
      RandomSource rng = root.substream(7, static_cast<std::uint64_t>(done + static_cast<std::int64_t>(i)));
      auto context = sample_subset(db, static_cast<std::size_t>(m - 1), rng);
      std::vector<const DataPoint*> b(context);
      b.push_back(&z);
      ExactConfig serial_cfg = cfg;
      serial_cfg.n_threads = 1;  // already parallel across resamples
      auto values = exact_shapley_all(b, u, serial_cfg);
      batch[i] = {values.back()};
    });
    for (std::int64_t i = 0; i < count; ++i) {
      double x = batch[static_cast<std::size_t>(i)][0];
      double prev = mean;
      mean += (x - mean) / static_cast<double>(done + i + 1);
      m2 += (x - prev) * (x - mean);
    }
    done += count;
  }
  double se_exact = std::sqrt(m2 / static_cast<double>(resamples - 1) /
                              static_cast<double>(resamples));

  RandomSource oracle_rng = root.substream(8);
  OracleEstimate oracle = oracle_distributional_value(z, db, u, m, draws, oracle_rng);

  double gap = std::fabs(mean - oracle.mean);
  double limit = 3.0 * std::sqrt(se_exact * se_exact + oracle.stderr * oracle.stderr);
  CheckResult out;
  out.name = "resampled_exact_vs_oracle(" + u.name() + ",m=" + std::to_string(m) + ")";
  out.pass = gap <= limit;
  out.detail = "gap " + detail::fmt(gap) + " vs 3se " + detail::fmt(limit);
  return out;
}

// Full verification battery: axioms, both exact characterizations, the MC
// oracle against the closed-form mean value, the averaged-resampling
// identity for every built-in potential, expected efficiency, and the
// permutation estimator at zero tolerance against enumeration.
inline VerifyReport run_verification_suite(const VerifyOptions& opt) {
  VerifyReport report = run_axiom_suite(opt);
  RandomSource root(opt.seed);

  // oracle vs closed form for the mean score
  {
    Dataset db = synth_standard_normal(1500, 1, opt.seed + 11);
    MeanEstimationPotential u = MeanEstimationPotential::from_database(db);
    bool ok = true;
    std::string detail_str;
    for (int m : {1, 5, 20}) {
      RandomSource rng = root.substream(9, static_cast<std::uint64_t>(m));
      const DataPoint& z = db[1];
      OracleEstimate est = oracle_distributional_value(z, db, u, m, opt.oracle_draws, rng);
      double truth = analytic_mean_value(z, m, u);
      double gap = std::fabs(est.mean - truth);
      double limit = std::max(3.0 * est.stderr, 1e-12);
      if (gap > limit) ok = false;
      detail_str += "m=" + std::to_string(m) + ":gap=" + detail::fmt(gap) + " ";
    }
    report.checks.push_back({"oracle_vs_analytic_mean", ok, detail_str});
  }

  // definition-level agreement for each built-in potential
  {
    Dataset db = synth_standard_normal(400, 1, opt.seed + 13);
    MeanEstimationPotential u = MeanEstimationPotential::from_database(db);
    report.checks.push_back(resampled_exact_vs_oracle(db, u, 8, opt.def22_resamples,
                                                      opt.oracle_draws, opt.seed + 17,
                                                      opt.n_threads));
  }
  {
    BlobsSpec spec;
    spec.n = 300;
    spec.seed = opt.seed + 19;
    spec.separation = 3.0;
    auto train = synth_gaussian_blobs(spec);
    BlobsSpec test_spec = spec;
    test_spec.n = 10;
    test_spec.seed = opt.seed + 23;
    KnnPotential knn(synth_gaussian_blobs(test_spec).data, 3);
    report.checks.push_back(resampled_exact_vs_oracle(train.data, knn, 7,
                                                      opt.def22_resamples, opt.oracle_draws,
                                                      opt.seed + 29, opt.n_threads));
    LogisticPotential logistic(synth_gaussian_blobs(test_spec).data);
    report.checks.push_back(resampled_exact_vs_oracle(train.data, logistic, 5,
                                                      opt.def22_resamples / 2,
                                                      opt.oracle_draws / 2, opt.seed + 31,
                                                      opt.n_threads));
  }
  {
    Dataset train = synth_linear_gaussian(300, 2, 0.3, opt.seed + 37);
    RidgePotential ridge(synth_linear_gaussian(12, 2, 0.3, opt.seed + 41), 1.0);
    report.checks.push_back(resampled_exact_vs_oracle(train, ridge, 6, opt.def22_resamples,
                                                      opt.oracle_draws, opt.seed + 43,
                                                      opt.n_threads));
  }

  // expected efficiency for the mean score: the average value over the
  // population equals the expected full-set score over m (true moments known
  // for the synthetic source, so the only noise is the sample of points)
  {
    int m = 10;
    Dataset sample = synth_standard_normal(4000, 1, opt.seed + 47);
    std::vector<double> mu{0.0};
    double r2 = 1.0;
    double mean = 0.0, m2 = 0.0;
    std::int64_t t = 0;
    for (const auto& p : sample.points()) {
      double v = analytic_mean_value(p.features, m, mu, r2);
      ++t;
      double prev = mean;
      mean += (v - mean) / static_cast<double>(t);
      m2 += (v - prev) * (v - mean);
    }
    double se = std::sqrt(m2 / static_cast<double>(t - 1) / static_cast<double>(t));
    double target = (r2 - r2 / m) / m;  // (E[U(S_m)] - U(empty)) / m
    double gap = std::fabs(mean - target);
    report.checks.push_back({"expected_efficiency_mean", gap <= 3.0 * se,
                             "gap " + detail::fmt(gap) + " vs 3se " + detail::fmt(3.0 * se)});
  }

  // permutation sampling at zero tolerance against enumeration
  {
    BlobsSpec spec;
    spec.n = 6;
    spec.seed = opt.seed + 53;
    spec.separation = 3.0;
    auto b = synth_gaussian_blobs(spec);
    BlobsSpec test_spec = spec;
    test_spec.n = 9;
    test_spec.seed = opt.seed + 59;
    KnnPotential u(synth_gaussian_blobs(test_spec).data, 3);

    TmcConfig cfg;
    cfg.max_permutations = 4000;
    cfg.truncation_tolerance = 0.0;
    cfg.window = 100;
    cfg.threshold = 0.001;
    cfg.seed = opt.seed + 61;
    cfg.n_threads = opt.n_threads;
    TmcResult tmc = tmc_shapley(b.data, u, cfg);
    ExactConfig exact_cfg;
    exact_cfg.n_threads = opt.n_threads;
    auto truth = exact_shapley_all(b.data, u, exact_cfg);
    bool ok = true;
    double worst = 0.0;
    for (std::size_t i = 0; i < b.data.size(); ++i) {
      const auto& e = tmc.table.entries()[i];
      double gap = std::fabs(e.est.mean - truth[i]);
      double limit = std::max(3.0 * e.est.stderr_of_mean(), opt.tolerance);
      worst = std::max(worst, gap - limit);
      if (gap > limit) ok = false;
    }
    report.checks.push_back({"tmc_vs_exact", ok, "worst gap-3se = " + detail::fmt(worst)});
  }

  return report;
}

}  // namespace dshap
