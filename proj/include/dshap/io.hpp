#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dshap/data.hpp"
#include "dshap/errors.hpp"
#include "dshap/evalharness.hpp"
#include "dshap/value_table.hpp"
#include "dshap/version.hpp"

namespace dshap {

// Shortest round-trip decimal rendering; locale-independent, so identical
// runs serialize byte-identically.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw data_error(context + ": bad numeric value '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

// ---------------------------------------------------------------------------
// Dataset CSV: header "f0,...,f{d-1}[,label]"; decimal literal values;
// categorical labels are non-negative integers. Row order defines point ids.
// ---------------------------------------------------------------------------

inline Dataset read_dataset_csv(const std::filesystem::path& path,
                                LabelKind declared = LabelKind::none,
                                bool infer_label_kind = true) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open dataset file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw data_error("empty dataset file: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto header = split_csv_line(line);
  bool has_label = !header.empty() && header.back() == "label";
  std::size_t d = header.size() - (has_label ? 1 : 0);
  if (d == 0) throw data_error(path.string() + ": no feature columns");
  for (std::size_t j = 0; j < d; ++j)
    if (header[j] != "f" + std::to_string(j))
      throw data_error(path.string() + ": expected column f" + std::to_string(j) +
                       ", found '" + header[j] + "'");

  std::vector<DataPoint> pts;
  bool labels_integral = true;
  std::int64_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw data_error(path.string() + ": row " + std::to_string(row) +
                       " has " + std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(header.size()));
    DataPoint p;
    p.id = row;
    p.features.reserve(d);
    for (std::size_t j = 0; j < d; ++j)
      p.features.push_back(parse_double(fields[j], path.string()));
    if (has_label) {
      double lab = parse_double(fields[d], path.string());
      p.label = lab;
      if (lab < 0.0 || lab != std::floor(lab)) labels_integral = false;
    }
    pts.push_back(std::move(p));
    ++row;
  }
  if (pts.empty()) throw data_error(path.string() + ": no data rows");

  LabelKind kind = declared;
  if (infer_label_kind) {
    if (!has_label)
      kind = LabelKind::none;
    else
      kind = labels_integral ? LabelKind::categorical : LabelKind::real;
  } else if ((kind != LabelKind::none) != has_label) {
    throw data_error(path.string() + ": label column does not match declared kind");
  }
  return Dataset(std::move(pts), kind);
}

inline void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write dataset file: " + path.string());
  for (std::size_t j = 0; j < data.dim(); ++j) out << (j ? ",f" : "f") << j;
  if (data.label_kind() != LabelKind::none) out << ",label";
  out << "\n";
  for (const auto& p : data.points()) {
    for (std::size_t j = 0; j < data.dim(); ++j) {
      if (j) out << ",";
      out << format_double(p.features[j]);
    }
    if (data.label_kind() != LabelKind::none) out << "," << format_double(*p.label);
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// Value table CSV: "id,value,count,interpolated" plus a JSON sidecar with
// everything needed to reproduce the run.
// ---------------------------------------------------------------------------

inline void write_value_table_csv(const ValueTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write value table: " + path.string());
  out << "id,value,count,interpolated\n";
  for (const auto& e : table.entries())
    out << e.id << "," << format_double(e.est.mean) << "," << e.est.count << ","
        << (e.interpolated ? 1 : 0) << "\n";
}

inline ValueTable read_value_table_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open value table: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw data_error("empty value table: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,value,count,interpolated")
    throw data_error(path.string() + ": unexpected value table header");

  std::vector<std::int64_t> ids;
  std::vector<double> values;
  std::vector<std::int64_t> counts;
  std::vector<bool> interp;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 4) throw data_error(path.string() + ": malformed value table row");
    ids.push_back(static_cast<std::int64_t>(parse_double(f[0], path.string())));
    values.push_back(parse_double(f[1], path.string()));
    counts.push_back(static_cast<std::int64_t>(parse_double(f[2], path.string())));
    interp.push_back(f[3] == "1");
  }
  ValueTable table(ids, 0, 0, "loaded", 1);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto& e = table.entries()[i];
    e.est.mean = values[i];
    e.est.count = counts[i];
    e.interpolated = interp[i];
  }
  return table;
}

inline nlohmann::json value_table_sidecar(const ValueTable& table, const RunStats& stats,
                                          double subsample_p, double threshold,
                                          const std::string& config_hash) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["seed"] = table.seed();
  j["m"] = table.m();
  j["schedule"] = table.schedule_name();
  j["window"] = table.window();
  j["threshold"] = threshold;
  j["subsample_p"] = subsample_p;
  j["iterations"] = stats.iterations;
  j["converged"] = stats.converged;
  j["total_training_size"] = stats.total_training_size;
  j["config_hash"] = config_hash;
  return j;
}

// ---------------------------------------------------------------------------
// Experiment reports.
// ---------------------------------------------------------------------------

inline void write_curves_csv(const std::vector<RemovalCurve>& curves,
                             const std::filesystem::path& path,
                             const std::string& fraction_column) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write curve file: " + path.string());
  out << "ordering,step," << fraction_column << ",accuracy\n";
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.fractions.size(); ++i)
      out << c.ordering << "," << i << "," << format_double(c.fractions[i]) << ","
          << format_double(c.accuracy[i]) << "\n";
}

inline void write_speedup_csv(const std::vector<SpeedupPoint>& points,
                              const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write speedup file: " + path.string());
  out << "schedule,b,p,relative_cost,r2_vs_baseline\n";
  for (const auto& pt : points)
    out << (pt.setting.kind == WeightSchedule::Kind::uniform ? "uniform" : "inverse_power")
        << "," << format_double(pt.setting.b) << "," << format_double(pt.setting.p) << ","
        << format_double(pt.relative_cost) << "," << format_double(pt.r2_vs_baseline) << "\n";
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write file: " + path.string());
  out << content;
}

// FNV-1a over the canonical config dump; embedded in output filenames so
// runs with different configs never collide.
inline std::string fnv1a_hex(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[h & 0xF];
    h >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf);
}

}  // namespace dshap
