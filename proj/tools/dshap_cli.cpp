// Command-line front end: dataset ingestion, seeded synthetic fixtures,
// value estimation, exact verification, point-removal curves, and the
// two-party pricing study. Configuration is a JSON document; any key can be
// overridden on the command line with --set section.key=value.
//
// Exit codes: 0 ok, 1 check failure, 2 config error, 3 data error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dshap/data.hpp"
#include "dshap/errors.hpp"
#include "dshap/estimator.hpp"
#include "dshap/evalharness.hpp"
#include "dshap/io.hpp"
#include "dshap/potentials.hpp"
#include "dshap/synth.hpp"
#include "dshap/tmc.hpp"
#include "dshap/verify.hpp"
#include "dshap/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dshap::config_error("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw dshap::config_error("config parse error in " + path + ": " + e.what());
  }
  if (!j.is_object()) throw dshap::config_error("config root must be an object");
  return j;
}

// --set estimator.seed=7 style overrides; the value parses as JSON when it
// can, otherwise it is taken as a string.
void apply_override(json& cfg, const std::string& spec) {
  auto eq = spec.find('=');
  if (eq == std::string::npos)
    throw dshap::config_error("--set expects key=value, got '" + spec + "'");
  std::string path = spec.substr(0, eq);
  std::string raw = spec.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    auto dot = path.find('.', start);
    std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw dshap::config_error("--set: empty key segment in '" + path + "'");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw dshap::config_error("config field '" + key + "' has the wrong type");
  }
}

template <typename T>
T require_field(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key))
    throw dshap::config_error("config is missing field '" + where + "." + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw dshap::config_error("config field '" + where + "." + key + "' has the wrong type");
  }
}

// A data node is {"csv": "path"} or {"synth": {"kind": ..., ...}}.
dshap::Dataset build_dataset(const json& node, const std::string& where,
                             std::uint64_t seed_mix = 0) {
  if (node.contains("csv")) {
    return dshap::read_dataset_csv(require_field<std::string>(node, "csv", where));
  }
  if (!node.contains("synth"))
    throw dshap::config_error("data node '" + where + "' needs either csv or synth");
  const json& s = node.at("synth");
  std::string kind = require_field<std::string>(s, "kind", where + ".synth");
  int n = get_or<int>(s, "n", 200);
  int d = get_or<int>(s, "d", 2);
  std::uint64_t seed = get_or<std::uint64_t>(s, "seed", 0) + seed_mix * 0x9E3779B97F4A7C15ull;
  if (kind == "normal") {
    return dshap::synth_standard_normal(n, d, seed, get_or<double>(s, "mu", 0.0),
                                        get_or<double>(s, "sigma", 1.0));
  }
  if (kind == "blobs") {
    dshap::BlobsSpec spec;
    spec.n = n;
    spec.d = d;
    spec.n_classes = get_or<int>(s, "n_classes", 2);
    spec.separation = get_or<double>(s, "separation", 4.0);
    spec.flip_fraction = get_or<double>(s, "flip_fraction", 0.0);
    spec.margin = get_or<double>(s, "margin", 0.0);
    spec.seed = seed;
    return dshap::synth_gaussian_blobs(spec).data;
  }
  if (kind == "linear") {
    return dshap::synth_linear_gaussian(n, d, get_or<double>(s, "noise_sigma", 0.5), seed);
  }
  throw dshap::config_error("unknown synth kind '" + kind + "' in " + where);
}

struct LoadedData {
  dshap::Dataset train;
  std::optional<dshap::Dataset> test;
  dshap::Dataset valuate;
  std::optional<dshap::Standardizer> transform;
};

LoadedData load_data_section(const json& cfg) {
  if (!cfg.contains("data")) throw dshap::config_error("config is missing section 'data'");
  const json& d = cfg.at("data");
  LoadedData out;
  if (!d.contains("train")) throw dshap::config_error("config is missing field 'data.train'");
  out.train = build_dataset(d.at("train"), "data.train");
  if (d.contains("test")) out.test = build_dataset(d.at("test"), "data.test");
  out.valuate = d.contains("valuate") ? build_dataset(d.at("valuate"), "data.valuate")
                                      : out.train;
  if (get_or<bool>(d, "standardize", false)) {
    auto [train_std, tf] = dshap::standardize(out.train);
    out.train = std::move(train_std);
    if (out.test) out.test = tf.apply(*out.test);
    out.valuate = tf.apply(out.valuate);
    out.transform = tf;
  }
  return out;
}

std::unique_ptr<dshap::Potential> build_potential(const json& cfg, const LoadedData& data) {
  if (!cfg.contains("potential"))
    throw dshap::config_error("config is missing section 'potential'");
  const json& p = cfg.at("potential");
  std::string name = require_field<std::string>(p, "name", "potential");
  if (name == "mean" || name == "mean_clipped") {
    return std::make_unique<dshap::MeanEstimationPotential>(
        dshap::MeanEstimationPotential::from_database(data.train, name == "mean_clipped"));
  }
  if (name == "constant") {
    return std::make_unique<dshap::ConstantPotential>(get_or<double>(p, "value", 0.5));
  }
  if (!data.test)
    throw dshap::config_error("potential '" + name + "' requires data.test");
  if (name == "knn") {
    return std::make_unique<dshap::KnnPotential>(*data.test, get_or<int>(p, "k_neighbors", 5));
  }
  if (name == "logistic") {
    dshap::LogisticParams lp;
    lp.learning_rate = get_or<double>(p, "lr", 0.1);
    lp.epochs = get_or<int>(p, "epochs", 200);
    lp.l2 = get_or<double>(p, "l2", 1e-3);
    return std::make_unique<dshap::LogisticPotential>(*data.test, lp);
  }
  if (name == "ridge") {
    return std::make_unique<dshap::RidgePotential>(*data.test, get_or<double>(p, "lambda", 1.0));
  }
  throw dshap::config_error("unknown potential name '" + name + "'");
}

dshap::WeightSchedule build_schedule(const json& sched, int m) {
  std::string kind = get_or<std::string>(sched, "kind", "uniform");
  if (kind == "uniform") return dshap::WeightSchedule::uniform(m);
  if (kind == "inverse_power")
    return dshap::WeightSchedule::inverse_power(m, get_or<double>(sched, "b", 1.0));
  throw dshap::config_error("schedule kind must be uniform or inverse_power, got '" + kind +
                            "'");
}

dshap::EstimatorConfig build_estimator_config(const json& cfg, int threads) {
  if (!cfg.contains("estimator"))
    throw dshap::config_error("config is missing section 'estimator'");
  const json& e = cfg.at("estimator");
  dshap::EstimatorConfig out;
  out.m = require_field<int>(e, "m", "estimator");
  out.t_max = get_or<std::int64_t>(e, "T_max", 1000);
  out.window = get_or<int>(e, "window", 100);
  out.threshold = get_or<double>(e, "threshold", 0.01);
  out.seed = get_or<std::uint64_t>(e, "seed", 0);
  out.record_cardinalities = get_or<bool>(e, "record_cardinalities", false);
  out.n_threads = threads;
  out.schedule = e.contains("schedule") ? build_schedule(e.at("schedule"), out.m)
                                        : dshap::WeightSchedule::uniform(out.m);
  out.validate();
  return out;
}

dshap::TmcConfig build_tmc_config(const json& cfg, int threads) {
  dshap::TmcConfig out;
  if (cfg.contains("tmc")) {
    const json& t = cfg.at("tmc");
    out.max_permutations = get_or<std::int64_t>(t, "max_permutations", 1000);
    out.truncation_tolerance = get_or<double>(t, "tolerance", 0.01);
    out.window = get_or<int>(t, "window", 100);
    out.threshold = get_or<double>(t, "threshold", 0.01);
    out.seed = get_or<std::uint64_t>(t, "seed", 0);
  }
  out.n_threads = threads;
  out.validate();
  return out;
}

fs::path prepare_output_dir(const json& cfg) {
  std::string dir = "out";
  if (cfg.contains("output")) dir = get_or<std::string>(cfg.at("output"), "dir", "out");
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

std::string config_hash(const json& cfg) { return dshap::fnv1a_hex(cfg.dump()); }

// ---------------------------------------------------------------------------

int cmd_estimate(const json& cfg, int threads) {
  LoadedData data = load_data_section(cfg);
  auto potential = build_potential(cfg, data);
  dshap::EstimatorConfig est_cfg = build_estimator_config(cfg, threads);
  double p = get_or<double>(cfg.at("estimator"), "subsample_p", 1.0);

  std::optional<dshap::InterpolatorConfig> interp;
  if (cfg.at("estimator").contains("interpolate")) {
    dshap::InterpolatorConfig icfg;
    icfg.k_neighbors = get_or<int>(cfg.at("estimator").at("interpolate"), "k_neighbors", 5);
    interp = icfg;
  }

  auto result = dshap::fast_d_shapley(data.valuate, data.train, *potential, est_cfg, p,
                                      interp ? &*interp : nullptr);

  fs::path dir = prepare_output_dir(cfg);
  std::string hash = config_hash(cfg);
  fs::path csv = dir / ("values_" + hash + "_seed" + std::to_string(est_cfg.seed) + ".csv");
  fs::path sidecar = csv;
  sidecar.replace_extension(".json");
  dshap::write_value_table_csv(result.table, csv);
  json meta = dshap::value_table_sidecar(result.table, result.stats, p, est_cfg.threshold, hash);
  meta["potential"] = potential->name();
  if (!result.warnings.empty()) meta["warnings"] = result.warnings;
  dshap::write_text_file(sidecar, meta.dump(2) + "\n");

  std::cout << "iterations: " << result.stats.iterations << "\n"
            << "converged: " << (result.stats.converged ? "yes" : "no") << "\n"
            << "mean |value|: " << dshap::format_double(result.table.mean_abs_value()) << "\n"
            << "values: " << csv.string() << "\n";
  return 0;
}

int cmd_verify(const json& cfg, int threads, int max_n, int instances, double tolerance,
               std::uint64_t seed) {
  dshap::VerifyOptions opt;
  opt.max_n = max_n;
  opt.instances = instances;
  opt.tolerance = tolerance;
  opt.seed = seed;
  opt.n_threads = threads;
  dshap::VerifyReport report = dshap::run_verification_suite(opt);

  json j;
  j["version"] = dshap::kVersion;
  j["seed"] = opt.seed;
  j["max_n"] = opt.max_n;
  j["instances"] = opt.instances;
  j["tolerance"] = opt.tolerance;
  j["all_pass"] = report.all_pass();
  j["checks"] = json::array();
  for (const auto& c : report.checks)
    j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  std::cout << j.dump(2) << "\n";

  if (!cfg.empty()) {
    fs::path dir = prepare_output_dir(cfg);
    dshap::write_text_file(dir / ("verify_" + config_hash(cfg) + ".json"), j.dump(2) + "\n");
  }
  return report.all_pass() ? 0 : 1;
}

int cmd_remove(const json& cfg, int threads, const std::string& values_csv, int steps,
               const std::string& ordering) {
  LoadedData data = load_data_section(cfg);
  auto potential = build_potential(cfg, data);
  dshap::ValueTable values = dshap::read_value_table_csv(values_csv);

  dshap::CurveOrder order;
  if (ordering == "by_value_desc") order = dshap::CurveOrder::by_value_desc;
  else if (ordering == "by_value_asc") order = dshap::CurveOrder::by_value_asc;
  else if (ordering == "random") order = dshap::CurveOrder::random;
  else throw dshap::config_error("ordering must be by_value_desc, by_value_asc or random");

  std::uint64_t order_seed = 0;
  if (cfg.contains("estimator"))
    order_seed = get_or<std::uint64_t>(cfg.at("estimator"), "seed", 0);
  (void)threads;
  dshap::RemovalCurve curve =
      dshap::point_removal_experiment(data.train, values, *potential, steps, order, order_seed);

  fs::path dir = prepare_output_dir(cfg);
  std::string hash = config_hash(cfg);
  fs::path csv = dir / ("removal_" + ordering + "_" + hash + ".csv");
  dshap::write_curves_csv({curve}, csv, "fraction_removed");
  json meta;
  meta["version"] = dshap::kVersion;
  meta["config_hash"] = hash;
  meta["ordering"] = ordering;
  meta["steps"] = steps;
  meta["auc"] = curve.auc();
  fs::path sidecar = csv;
  sidecar.replace_extension(".json");
  dshap::write_text_file(sidecar, meta.dump(2) + "\n");

  std::cout << "area under curve: " << dshap::format_double(curve.auc()) << "\n"
            << "curve: " << csv.string() << "\n";
  return 0;
}

int cmd_price(const json& cfg, int threads) {
  if (!cfg.contains("pricing")) throw dshap::config_error("config is missing section 'pricing'");
  const json& pr = cfg.at("pricing");
  int m = require_field<int>(pr, "m", "pricing");
  std::vector<std::uint64_t> seeds =
      get_or<std::vector<std::uint64_t>>(pr, "seeds", {1, 2, 3, 4, 5});
  if (seeds.empty()) throw dshap::config_error("pricing.seeds must not be empty");

  if (!pr.contains("seller") || !pr.contains("buyer") || !pr.contains("sold"))
    throw dshap::config_error("pricing needs seller, buyer and sold data nodes");

  dshap::PricingConfig run_cfg;
  run_cfg.seller.m = m;
  run_cfg.seller.t_max = get_or<std::int64_t>(pr, "T_max", 2000);
  run_cfg.seller.window = get_or<int>(pr, "window", 100);
  run_cfg.seller.threshold = get_or<double>(pr, "threshold", 0.01);
  run_cfg.seller.n_threads = threads;
  run_cfg.seller.schedule = pr.contains("schedule")
                                ? build_schedule(pr.at("schedule"), m)
                                : dshap::WeightSchedule::inverse_power(m, 1.0);
  run_cfg.seller_subsample_p = get_or<double>(pr, "subsample_p", 1.0);
  run_cfg.buyer = build_tmc_config(cfg, threads);
  run_cfg.steps = get_or<int>(pr, "steps", 10);

  std::string potential_name =
      cfg.contains("potential")
          ? get_or<std::string>(cfg.at("potential"), "name", "mean")
          : "mean";

  double feature_noise = 0.0;
  std::vector<double> rebalance;
  if (pr.contains("shift")) {
    feature_noise = get_or<double>(pr.at("shift"), "feature_noise", 0.0);
    rebalance = get_or<std::vector<double>>(pr.at("shift"), "rebalance", {});
  }

  fs::path dir = prepare_output_dir(cfg);
  std::string hash = config_hash(cfg);

  json summary;
  summary["version"] = dshap::kVersion;
  summary["config_hash"] = hash;
  summary["m"] = m;
  summary["potential"] = potential_name;
  summary["per_seed"] = json::array();
  double sum_rho = 0.0, sum_ape = 0.0;
  int ape_count = 0;

  for (std::uint64_t seed : seeds) {
    dshap::Dataset seller = build_dataset(pr.at("seller"), "pricing.seller", seed);
    dshap::Dataset buyer = build_dataset(pr.at("buyer"), "pricing.buyer", seed);
    dshap::Dataset sold = build_dataset(pr.at("sold"), "pricing.sold", seed + 1);
    if (feature_noise > 0.0) buyer = dshap::add_feature_noise(buyer, feature_noise, seed + 2);
    if (!rebalance.empty()) buyer = dshap::rebalance_classes(buyer, rebalance, seed + 3);
    // keep buyer/sold ids disjoint for the merged fixed-set run
    {
      std::vector<dshap::DataPoint> pts = sold.points();
      for (auto& p : pts) p.id += 1000000;
      sold = dshap::Dataset(std::move(pts), sold.label_kind(), sold.n_classes());
    }

    LoadedData pdata;
    if (cfg.contains("data") && cfg.at("data").contains("test"))
      pdata.test = build_dataset(cfg.at("data").at("test"), "data.test", seed + 4);
    dshap::PotentialBuilder builder =
        [&](const dshap::Dataset& ctx) -> std::unique_ptr<dshap::Potential> {
      LoadedData ctx_data;
      ctx_data.train = ctx;
      ctx_data.test = pdata.test;
      return build_potential(cfg, ctx_data);
    };

    run_cfg.seller.seed = seed;
    run_cfg.buyer.seed = seed ^ 0x632be59bd9b4e019ull;
    run_cfg.order_seed = seed;
    dshap::PricingReport report =
        dshap::pricing_case_study(seller, buyer, sold, builder, m, run_cfg);

    fs::path curves = dir / ("pricing_curves_" + hash + "_seed" + std::to_string(seed) + ".csv");
    dshap::write_curves_csv(
        {report.addition_by_val, report.addition_by_sh, report.addition_random}, curves,
        "fraction_added");

    json row;
    row["seed"] = seed;
    row["rank_correlation"] = report.metrics.rank_correlation;
    row["ape"] = report.metrics.ape_valid ? json(report.metrics.ape) : json();
    if (!report.metrics.ape_valid) row["ape_error"] = report.metrics.note;
    row["seller_iterations"] = report.seller_iterations;
    row["buyer_permutations"] = report.buyer_permutations;
    row["curves"] = curves.string();
    summary["per_seed"].push_back(row);
    sum_rho += report.metrics.rank_correlation;
    if (report.metrics.ape_valid) {
      sum_ape += report.metrics.ape;
      ++ape_count;
    }
  }
  summary["mean_rank_correlation"] = sum_rho / static_cast<double>(seeds.size());
  if (ape_count > 0) summary["mean_ape"] = sum_ape / ape_count;

  fs::path out = dir / ("pricing_" + hash + ".json");
  dshap::write_text_file(out, summary.dump(2) + "\n");
  std::cout << "mean rank correlation: "
            << dshap::format_double(summary["mean_rank_correlation"].get<double>()) << "\n";
  if (ape_count > 0)
    std::cout << "mean APE: " << dshap::format_double(summary["mean_ape"].get<double>()) << "\n";
  std::cout << "report: " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributional data valuation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = all cores)");

  auto add_common = [&](CLI::App* sub, bool config_required) {
    sub->add_option("--config", config_path, "JSON config file")->required(config_required);
    sub->add_option("--set", overrides, "override a config key (section.key=value)");
  };

  CLI::App* estimate = app.add_subcommand("estimate", "estimate values for a dataset");
  add_common(estimate, true);

  CLI::App* verify = app.add_subcommand("verify", "run the exact-oracle verification suite");
  add_common(verify, false);
  int max_n = 8, instances = 50;
  double tolerance = 1e-9;
  std::uint64_t verify_seed = 20240501;
  verify->add_option("--max-n", max_n, "largest instance size for enumeration");
  verify->add_option("--instances", instances, "randomized instances per axiom");
  verify->add_option("--tolerance", tolerance, "axiom identity tolerance");
  verify->add_option("--seed", verify_seed, "suite seed");

  CLI::App* remove = app.add_subcommand("remove", "point-removal experiment");
  add_common(remove, true);
  std::string values_csv, ordering = "by_value_desc";
  int steps = 10;
  remove->add_option("--values", values_csv, "value table CSV")->required();
  remove->add_option("--steps", steps, "number of removal batches");
  remove->add_option("--ordering", ordering, "by_value_desc | by_value_asc | random");

  CLI::App* price = app.add_subcommand("price", "two-party pricing study");
  add_common(price, true);

  CLI11_PARSE(app, argc, argv);

  try {
    json cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    for (const auto& o : overrides) apply_override(cfg, o);
    if (cfg.contains("threads") && threads == 0) threads = get_or<int>(cfg, "threads", 0);

    if (estimate->parsed()) return cmd_estimate(cfg, threads);
    if (verify->parsed())
      return cmd_verify(cfg, threads, max_n, instances, tolerance, verify_seed);
    if (remove->parsed()) return cmd_remove(cfg, threads, values_csv, steps, ordering);
    if (price->parsed()) return cmd_price(cfg, threads);
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const dshap::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const dshap::data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
