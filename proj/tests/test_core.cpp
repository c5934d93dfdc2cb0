#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "dshap/data.hpp"
#include "dshap/io.hpp"
#include "dshap/potentials.hpp"
#include "dshap/random.hpp"
#include "dshap/synth.hpp"
#include "testutil.hpp"

using namespace dshap;

TEST_CASE("random source is deterministic and substreams are independent") {
  RandomSource a(42), b(42);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

  // drawing from one substream must not perturb another
  RandomSource root(7);
  RandomSource s1 = root.substream(stream::kIteration, 3);
  RandomSource s2 = root.substream(stream::kIteration, 3);
  RandomSource other = root.substream(stream::kSubsample);
  for (int i = 0; i < 50; ++i) (void)other.next_u64();
  for (int i = 0; i < 50; ++i) REQUIRE(s1.next_u64() == s2.next_u64());

  REQUIRE(root.substream(1, 2).next_u64() != root.substream(2, 1).next_u64());
}

TEST_CASE("random reals and indices stay in range") {
  RandomSource rng(123);
  for (int i = 0; i < 10000; ++i) {
    double u = rng.next_real();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(rng.next_index(7) < 7);
  }
  double mean = 0.0;
  RandomSource g(5);
  const int n = 20000;
  for (int i = 0; i < n; ++i) mean += g.next_gaussian();
  mean /= n;
  REQUIRE(std::fabs(mean) < 0.05);
}

TEST_CASE("standardize centers and scales with the population convention") {
  Dataset two = testutil::dataset_1d({0.0, 2.0});
  auto [out, tf] = standardize(two);
  REQUIRE(tf.mean[0] == Catch::Approx(1.0));
  REQUIRE(tf.scale[0] == Catch::Approx(1.0));
  REQUIRE(out[0].features[0] == Catch::Approx(-1.0));
  REQUIRE(out[1].features[0] == Catch::Approx(1.0));
}

TEST_CASE("standardize leaves constant columns centered at scale 1") {
  Dataset c = testutil::dataset_1d({5.0, 5.0, 5.0});
  auto [out, tf] = standardize(c);
  REQUIRE(tf.scale[0] == 1.0);
  for (const auto& p : out.points()) REQUIRE(p.features[0] == 0.0);
}

TEST_CASE("standardize is idempotent on standardized data") {
  Dataset ds = synth_standard_normal(100, 3, 11);
  auto [once, tf1] = standardize(ds);
  auto [twice, tf2] = standardize(once);
  for (std::size_t i = 0; i < once.size(); ++i)
    for (std::size_t j = 0; j < once.dim(); ++j)
      REQUIRE(twice[i].features[j] == Catch::Approx(once[i].features[j]).margin(1e-12));
}

TEST_CASE("standardize rejects empty input") {
  REQUIRE_THROWS_AS(standardize(Dataset{}), data_error);
}

TEST_CASE("held-out data maps through the training transform") {
  Dataset train = synth_standard_normal(50, 2, 3);
  Dataset held = synth_standard_normal(10, 2, 4);
  auto [_, tf] = standardize(train);
  Dataset mapped = tf.apply(held);
  for (std::size_t i = 0; i < held.size(); ++i)
    for (std::size_t j = 0; j < 2; ++j)
      REQUIRE(mapped[i].features[j] ==
              Catch::Approx((held[i].features[j] - tf.mean[j]) / tf.scale[j]));
}

TEST_CASE("sample_subset edge cases and determinism") {
  Dataset db = synth_standard_normal(1000, 1, 9);
  RandomSource rng(17);
  REQUIRE(sample_subset(db, 0, rng).empty());

  Dataset one = testutil::dataset_1d({3.0});
  RandomSource r2(1);
  auto s = sample_subset(one, 3, r2);
  REQUIRE(s.size() == 3);
  for (auto* p : s) REQUIRE(p == one.ptr(0));

  REQUIRE_THROWS_AS(sample_subset(Dataset{}, 1, rng), data_error);

  RandomSource ra(99), rb(99);
  auto sa = sample_subset(db, 100, ra);
  auto sb = sample_subset(db, 100, rb);
  REQUIRE(sa == sb);
}

TEST_CASE("dataset validation catches malformed input") {
  std::vector<DataPoint> dup = {{{1.0}, std::nullopt, 0}, {{2.0}, std::nullopt, 0}};
  REQUIRE_THROWS_AS(Dataset(std::move(dup), LabelKind::none), data_error);

  std::vector<DataPoint> nan_pt = {{{std::nan("")}, std::nullopt, 0}};
  REQUIRE_THROWS_AS(Dataset(std::move(nan_pt), LabelKind::none), data_error);

  std::vector<DataPoint> ragged = {{{1.0, 2.0}, std::nullopt, 0}, {{1.0}, std::nullopt, 1}};
  REQUIRE_THROWS_AS(Dataset(std::move(ragged), LabelKind::none), data_error);

  std::vector<DataPoint> frac_label = {{{1.0}, 0.5, 0}};
  REQUIRE_THROWS_AS(Dataset(std::move(frac_label), LabelKind::categorical), data_error);
}

TEST_CASE("built-in potentials stay in range and ignore input order") {
  BlobsSpec spec;
  spec.n = 40;
  spec.seed = 21;
  auto blobs = synth_gaussian_blobs(spec);
  BlobsSpec test_spec = spec;
  test_spec.n = 12;
  test_spec.seed = 22;
  auto test = synth_gaussian_blobs(test_spec);
  Dataset reg_train = synth_linear_gaussian(40, 2, 0.5, 23);
  Dataset reg_test = synth_linear_gaussian(12, 2, 0.5, 24);

  MeanEstimationPotential mean_clip =
      MeanEstimationPotential::from_database(reg_train, /*clip=*/true);
  KnnPotential knn(test.data, 3);
  LogisticPotential logistic(test.data);
  RidgePotential ridge(reg_test, 1.0);

  RandomSource rng(31);
  auto check = [&](const Potential& u, const Dataset& db) {
    for (int trial = 0; trial < 25; ++trial) {
      auto s = sample_subset(db, rng.next_index(12), rng);
      double v = u.evaluate(s);
      REQUIRE(v >= 0.0);
      REQUIRE(v <= 1.0);
      auto shuffled = s;
      fisher_yates(shuffled, rng);
      REQUIRE(u.evaluate(shuffled) == v);  // bit-identical under reordering
    }
  };
  check(mean_clip, reg_train);
  check(knn, blobs.data);
  check(logistic, blobs.data);
  check(ridge, reg_train);
}

TEST_CASE("dataset csv round-trips") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "dshap_core_test";
  fs::create_directories(dir);

  BlobsSpec spec;
  spec.n = 30;
  spec.d = 3;
  spec.seed = 77;
  Dataset ds = synth_gaussian_blobs(spec).data;
  fs::path p = dir / "blobs.csv";
  write_dataset_csv(ds, p);
  Dataset back = read_dataset_csv(p);
  REQUIRE(back.size() == ds.size());
  REQUIRE(back.dim() == ds.dim());
  REQUIRE(back.label_kind() == LabelKind::categorical);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    REQUIRE(back[i].id == ds[i].id);
    REQUIRE(back[i].features == ds[i].features);  // exact round-trip
    REQUIRE(back[i].label == ds[i].label);
  }

  Dataset unl = synth_standard_normal(10, 2, 5);
  fs::path p2 = dir / "plain.csv";
  write_dataset_csv(unl, p2);
  REQUIRE(read_dataset_csv(p2).label_kind() == LabelKind::none);

  REQUIRE_THROWS_AS(read_dataset_csv(dir / "missing.csv"), data_error);
  fs::remove_all(dir);
}

TEST_CASE("blob generator flips the requested fraction") {
  BlobsSpec spec;
  spec.n = 200;
  spec.flip_fraction = 0.1;
  spec.seed = 13;
  auto blobs = synth_gaussian_blobs(spec);
  std::size_t flipped = 0;
  for (bool f : blobs.flipped)
    if (f) ++flipped;
  REQUIRE(flipped == 20);
}
