#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "dshap/estimator.hpp"
#include "dshap/evalharness.hpp"
#include "dshap/interpolate.hpp"
#include "dshap/potentials.hpp"
#include "dshap/synth.hpp"
#include "testutil.hpp"

using namespace dshap;

namespace {

std::vector<std::pair<const DataPoint*, double>> make_pairs(
    const Dataset& ds, const std::function<double(const DataPoint&)>& value) {
  std::vector<std::pair<const DataPoint*, double>> out;
  for (std::size_t i = 0; i < ds.size(); ++i) out.emplace_back(ds.ptr(i), value(ds[i]));
  return out;
}

}  // namespace

TEST_CASE("single fitted pair predicts its value everywhere") {
  Dataset one = testutil::dataset_1d({0.3});
  auto interp = ValueInterpolator::fit(make_pairs(one, [](const DataPoint&) { return 0.42; }));
  DataPoint q{{100.0}, std::nullopt, 99};
  REQUIRE(interp.predict(q) == 0.42);
}

TEST_CASE("constant fitted values predict the constant") {
  Dataset pts = synth_standard_normal(20, 2, 1);
  auto interp = ValueInterpolator::fit(make_pairs(pts, [](const DataPoint&) { return 0.3; }));
  RandomSource rng(2);
  for (int i = 0; i < 20; ++i) {
    DataPoint q{{rng.next_gaussian(), rng.next_gaussian()}, std::nullopt, 1000 + i};
    REQUIRE(interp.predict(q) == Catch::Approx(0.3).margin(1e-12));
  }
}

TEST_CASE("exact query matches return the fitted value") {
  Dataset pts = synth_standard_normal(15, 2, 3);
  auto interp = ValueInterpolator::fit(
      make_pairs(pts, [](const DataPoint& p) { return p.features[0]; }));
  DataPoint q = pts[4];
  q.id = 1234;
  REQUIRE(interp.predict(q) == pts[4].features[0]);
}

TEST_CASE("equidistant neighbors with uniform weights average their values") {
  Dataset two = testutil::dataset_1d({-1.0, 1.0});
  InterpolatorConfig cfg;
  cfg.k_neighbors = 2;
  cfg.weighting = InterpolatorConfig::Weighting::uniform;
  auto interp = ValueInterpolator::fit(
      make_pairs(two, [](const DataPoint& p) { return p.features[0] < 0 ? 0.0 : 1.0; }), cfg);
  DataPoint q{{0.0}, std::nullopt, 50};
  REQUIRE(interp.predict(q) == Catch::Approx(0.5));
}

TEST_CASE("predictions stay within the fitted value range") {
  Dataset pts = synth_standard_normal(60, 2, 4);
  RandomSource vr(5);
  std::vector<std::pair<const DataPoint*, double>> pairs;
  double lo = 1e18, hi = -1e18;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double v = vr.next_real() * 10.0 - 5.0;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    pairs.emplace_back(pts.ptr(i), v);
  }
  auto interp = ValueInterpolator::fit(pairs);
  RandomSource qr(6);
  for (int i = 0; i < 200; ++i) {
    DataPoint q{{3.0 * qr.next_gaussian(), 3.0 * qr.next_gaussian()}, std::nullopt, 500 + i};
    double p = interp.predict(q);
    REQUIRE(p >= lo);
    REQUIRE(p <= hi);
  }
}

TEST_CASE("linear value surface is recovered to near the nn discretization error") {
  // v(z) = a . z over [0,1]^2; oracle = plain uniform 5-nn average of true
  // values, computed here by brute force
  RandomSource rng(7);
  std::vector<DataPoint> fit_pts;
  auto truth = [](const DataPoint& p) { return 0.7 * p.features[0] + 0.2 * p.features[1]; };
  for (int i = 0; i < 100; ++i)
    fit_pts.push_back({{rng.next_real(), rng.next_real()}, std::nullopt, i});
  Dataset fit_set(std::move(fit_pts), LabelKind::none);
  auto interp = ValueInterpolator::fit(make_pairs(fit_set, truth));

  double mae = 0.0, oracle_mae = 0.0;
  const int queries = 200;
  for (int i = 0; i < queries; ++i) {
    DataPoint q{{rng.next_real(), rng.next_real()}, std::nullopt, 1000 + i};
    mae += std::fabs(interp.predict(q) - truth(q));

    std::vector<std::pair<double, double>> d;  // (distance, true value)
    for (const auto& p : fit_set.points()) {
      double dx = p.features[0] - q.features[0];
      double dy = p.features[1] - q.features[1];
      d.emplace_back(std::sqrt(dx * dx + dy * dy), truth(p));
    }
    std::partial_sort(d.begin(), d.begin() + 5, d.end());
    double avg = 0.0;
    for (int j = 0; j < 5; ++j) avg += d[static_cast<std::size_t>(j)].second;
    oracle_mae += std::fabs(avg / 5.0 - truth(q));
  }
  mae /= queries;
  oracle_mae /= queries;
  INFO("mae " << mae << " oracle " << oracle_mae);
  REQUIRE(mae <= 2.0 * oracle_mae);
}

TEST_CASE("fit validation and label fallbacks") {
  REQUIRE_THROWS_AS(ValueInterpolator::fit({}), std::invalid_argument);

  BlobsSpec spec;
  spec.n = 30;
  spec.seed = 8;
  auto blobs = synth_gaussian_blobs(spec);
  std::vector<std::pair<const DataPoint*, double>> pairs;
  for (std::size_t i = 0; i < blobs.data.size(); ++i)
    if (*blobs.data[i].label == 0.0) pairs.emplace_back(blobs.data.ptr(i), 1.0);

  // class 1 never appears in the fit set: per-class mode must fall back
  std::vector<double> required{0.0, 1.0};
  auto interp = ValueInterpolator::fit(pairs, {}, &required);
  REQUIRE(interp.penalty_mode());
  REQUIRE_FALSE(interp.warnings().empty());
}

TEST_CASE("per-class pools keep cross-label neighbors out") {
  // two tight clusters with different labels and very different values
  std::vector<DataPoint> pts;
  for (int i = 0; i < 6; ++i)
    pts.push_back({{0.01 * i, 0.0}, 0.0, i});
  for (int i = 0; i < 6; ++i)
    pts.push_back({{0.01 * i, 0.05}, 1.0, 6 + i});
  Dataset ds(std::move(pts), LabelKind::categorical, 2);
  std::vector<std::pair<const DataPoint*, double>> pairs;
  for (std::size_t i = 0; i < ds.size(); ++i)
    pairs.emplace_back(ds.ptr(i), *ds[i].label == 0.0 ? 0.0 : 1.0);
  auto interp = ValueInterpolator::fit(pairs);
  REQUIRE_FALSE(interp.penalty_mode());

  DataPoint q{{0.03, 0.05}, 1.0, 100};  // geometrically near both clusters
  REQUIRE(interp.predict(q) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("value predictions track the closed form on held-out points") {
  Dataset db = synth_standard_normal(1500, 1, 9);
  MeanEstimationPotential u = MeanEstimationPotential::from_database(db);
  int m = 30;

  // anchors valued by the closed form, queries checked against it
  RandomSource rng(10);
  std::vector<DataPoint> anchors;
  for (int i = 0; i < 120; ++i)
    anchors.push_back({{3.0 * rng.next_real() - 1.5}, std::nullopt, i});
  Dataset anchor_set(std::move(anchors), LabelKind::none);
  auto interp = ValueInterpolator::fit(make_pairs(
      anchor_set, [&](const DataPoint& p) { return analytic_mean_value(p, m, u); }));

  double mae = 0.0, lo = 1e18, hi = -1e18;
  std::vector<double> errors, nearest;
  for (int i = 0; i < 150; ++i) {
    DataPoint q{{3.0 * rng.next_real() - 1.5}, std::nullopt, 2000 + i};
    double truth = analytic_mean_value(q, m, u);
    lo = std::min(lo, truth);
    hi = std::max(hi, truth);
    double err = std::fabs(interp.predict(q) - truth);
    mae += err;
    errors.push_back(err);
    double best = 1e18;
    for (const auto& a : anchor_set.points())
      best = std::min(best, std::fabs(a.features[0] - q.features[0]));
    nearest.push_back(best);
  }
  mae /= 150.0;
  INFO("mae " << mae << " range " << (hi - lo));
  REQUIRE(mae <= 0.1 * (hi - lo));

  // farther from the nearest anchor, larger the error (rank correlation > 0)
  REQUIRE(spearman(errors, nearest) > 0.0);
}

TEST_CASE("interpolated error shrinks as the subsample rate grows") {
  Dataset db = synth_standard_normal(400, 1, 11);
  MeanEstimationPotential u = MeanEstimationPotential::from_database(db);
  Dataset z_set = synth_standard_normal(80, 1, 12);

  std::vector<double> rates = {0.1, 0.3, 0.5, 1.0};
  std::vector<double> mean_mae(rates.size(), 0.0);
  const int seeds = 5;
  for (int s = 0; s < seeds; ++s) {
    EstimatorConfig cfg;
    cfg.m = 15;
    cfg.t_max = 500;
    cfg.window = 100;
    cfg.schedule = WeightSchedule::uniform(15);
    cfg.seed = 100 + static_cast<std::uint64_t>(s);
    auto reference = fast_d_shapley(z_set, db, u, cfg);  // p = 1: direct for everyone
    for (std::size_t ri = 0; ri < rates.size(); ++ri) {
      InterpolatorConfig icfg;
      auto run = fast_d_shapley(z_set, db, u, cfg, rates[ri], &icfg);
      double mae = 0.0;
      std::size_t n = 0;
      for (const auto& e : run.table.entries()) {
        if (!e.interpolated) continue;
        mae += std::fabs(e.est.mean - reference.table.value_of(e.id));
        ++n;
      }
      mean_mae[ri] += n == 0 ? 0.0 : mae / static_cast<double>(n);
    }
  }
  for (auto& v : mean_mae) v /= seeds;
  INFO("mae by rate: " << mean_mae[0] << " " << mean_mae[1] << " " << mean_mae[2] << " "
                       << mean_mae[3]);
  for (std::size_t i = 1; i < mean_mae.size(); ++i)
    REQUIRE(mean_mae[i] <= mean_mae[i - 1] + 1e-12);
}
