#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <numeric>

#include "dshap/exact.hpp"
#include "dshap/potentials.hpp"
#include "dshap/synth.hpp"
#include "dshap/tmc.hpp"
#include "dshap/verify.hpp"
#include "testutil.hpp"

using namespace dshap;

TEST_CASE("infinite tolerance truncates every permutation to zero") {
  Dataset b = synth_standard_normal(6, 1, 1);
  MeanEstimationPotential u({0.0}, 1.0, /*clip=*/true);
  TmcConfig cfg;
  cfg.max_permutations = 50;
  cfg.truncation_tolerance = std::numeric_limits<double>::infinity();
  cfg.window = 10;
  cfg.seed = 2;
  auto res = tmc_shapley(b, u, cfg);
  for (const auto& e : res.table.entries()) REQUIRE(e.est.mean == 0.0);
}

TEST_CASE("zero tolerance converges to the exact values") {
  BlobsSpec spec;
  spec.n = 6;
  spec.seed = 3;
  spec.separation = 3.0;
  auto b = synth_gaussian_blobs(spec);
  BlobsSpec test_spec = spec;
  test_spec.n = 8;
  test_spec.seed = 4;
  KnnPotential u(synth_gaussian_blobs(test_spec).data, 3);

  TmcConfig cfg;
  cfg.max_permutations = 3000;
  cfg.truncation_tolerance = 0.0;
  cfg.window = 200;
  cfg.threshold = 0.002;
  cfg.seed = 5;
  auto res = tmc_shapley(b.data, u, cfg);
  auto truth = exact_shapley_all(b.data, u);
  for (std::size_t i = 0; i < b.data.size(); ++i) {
    const auto& e = res.table.entries()[i];
    double limit = std::max(3.0 * e.est.stderr_of_mean(), 1e-9);
    INFO("point " << i << " tmc " << e.est.mean << " exact " << truth[i]);
    REQUIRE(std::fabs(e.est.mean - truth[i]) <= limit);
  }
}

TEST_CASE("additive potential estimates recover each point's share") {
  Dataset b = testutil::dataset_1d({1, 2, 3, 4, 5});
  AdditivePotential u({{0, 3.0}, {1, 1.0}, {2, 2.0}, {3, 0.5}, {4, 1.5}});
  TmcConfig cfg;
  cfg.max_permutations = 400;
  cfg.truncation_tolerance = 0.0;
  cfg.window = 50;
  cfg.seed = 6;
  auto res = tmc_shapley(b, u, cfg);
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto& e = res.table.entries()[i];
    // additive: every permutation contributes the exact share
    REQUIRE(e.est.mean == Catch::Approx(u.share(b[i].id)).margin(1e-9));
  }
}

TEST_CASE("per-permutation contributions telescope exactly at zero tolerance") {
  Dataset b = synth_standard_normal(8, 1, 7);
  MeanEstimationPotential u({0.0}, 1.0, /*clip=*/true);
  TmcConfig cfg;
  cfg.max_permutations = 1;  // one permutation: its mean vector is its contribution vector
  cfg.truncation_tolerance = 0.0;
  cfg.window = 1;
  cfg.threshold = 0.5;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.seed = seed;
    auto res = tmc_shapley(b, u, cfg);
    double total = 0.0;
    for (const auto& e : res.table.entries()) total += e.est.mean;
    double target = u.evaluate(b.pointers()) - u.empty_value();
    REQUIRE(total == Catch::Approx(target).margin(1e-9));
  }
}

TEST_CASE("tmc estimate sums converge to the efficiency target") {
  BlobsSpec spec;
  spec.n = 5;
  spec.seed = 8;
  auto b = synth_gaussian_blobs(spec);
  BlobsSpec test_spec = spec;
  test_spec.n = 8;
  test_spec.seed = 9;
  KnnPotential u(synth_gaussian_blobs(test_spec).data, 1);
  TmcConfig cfg;
  cfg.max_permutations = 500;
  cfg.truncation_tolerance = 0.0;
  cfg.window = 100;
  cfg.seed = 10;
  auto res = tmc_shapley(b.data, u, cfg);
  double total = 0.0;
  for (const auto& e : res.table.entries()) total += e.est.mean;
  double target = u.evaluate(b.data.pointers()) - u.empty_value();
  // at zero tolerance each permutation telescopes, so the sum is exact
  REQUIRE(total == Catch::Approx(target).margin(1e-9));
}

TEST_CASE("tmc reuses the estimator stopping rule") {
  Dataset b = synth_standard_normal(10, 1, 11);
  ConstantPotential u(0.3);
  TmcConfig cfg;
  cfg.max_permutations = 5000;
  cfg.truncation_tolerance = 0.0;
  cfg.window = 40;
  cfg.threshold = 0.01;
  cfg.seed = 12;
  auto res = tmc_shapley(b, u, cfg);
  REQUIRE(res.converged);
  REQUIRE(res.permutations == 40);  // all-zero window fires as soon as it fills
}

TEST_CASE("tmc is deterministic across thread counts") {
  BlobsSpec spec;
  spec.n = 7;
  spec.seed = 13;
  auto b = synth_gaussian_blobs(spec);
  BlobsSpec test_spec = spec;
  test_spec.n = 6;
  test_spec.seed = 14;
  KnnPotential u(synth_gaussian_blobs(test_spec).data, 3);
  TmcConfig cfg;
  cfg.max_permutations = 200;
  cfg.truncation_tolerance = 0.01;
  cfg.window = 50;
  cfg.seed = 15;
  cfg.n_threads = 1;
  auto serial = tmc_shapley(b.data, u, cfg);
  cfg.n_threads = 4;
  auto threaded = tmc_shapley(b.data, u, cfg);
  REQUIRE(serial.permutations == threaded.permutations);
  for (std::size_t i = 0; i < b.data.size(); ++i)
    REQUIRE(serial.table.entries()[i].est.mean == threaded.table.entries()[i].est.mean);
}
