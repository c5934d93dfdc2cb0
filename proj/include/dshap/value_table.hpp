#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dshap {

// Fixed-capacity ring holding the most recent per-iteration |change| values.
class ChangeWindow {
 public:
  explicit ChangeWindow(int capacity) : buf_(static_cast<std::size_t>(capacity), 0.0) {
    if (capacity < 1) throw std::invalid_argument("window capacity must be >= 1");
  }

  void push(double v) {
    buf_[pos_] = v;
    pos_ = (pos_ + 1) % buf_.size();
    if (filled_ < buf_.size()) ++filled_;
  }

  std::size_t size() const { return filled_; }
  std::size_t capacity() const { return buf_.size(); }
  bool full() const { return filled_ == buf_.size(); }

  double sum() const {
    double s = 0.0;
    for (std::size_t i = 0; i < filled_; ++i) s += buf_[i];
    return s;
  }

  bool all_zero() const {
    for (std::size_t i = 0; i < filled_; ++i)
      if (buf_[i] != 0.0) return false;
    return true;
  }

 private:
  std::vector<double> buf_;
  std::size_t pos_ = 0;
  std::size_t filled_ = 0;
};

// Running mean of reweighted marginal-contribution samples, updated in the
// incremental form val <- (1/t) x + ((t-1)/t) val so a fixed update order
// reproduces bit-identical results. Also tracks the second moment for
// standard errors and the recent |change| window for the stopping rule.
struct ValueEstimate {
  double mean = 0.0;
  double m2 = 0.0;
  std::int64_t count = 0;
  ChangeWindow history;

  explicit ValueEstimate(int window = 100) : history(window) {}

  void update(double x) {
    double prev = mean;
    count += 1;
    double t = static_cast<double>(count);
    mean = (1.0 / t) * x + ((t - 1.0) / t) * mean;
    m2 += (x - prev) * (x - mean);
    history.push(std::fabs(mean - prev));
  }

  double sample_variance() const {
    if (count < 2) return 0.0;
    return m2 / static_cast<double>(count - 1);
  }

  double stderr_of_mean() const {
    if (count < 2) return 0.0;
    return std::sqrt(sample_variance() / static_cast<double>(count));
  }
};

struct ValueEntry {
  std::int64_t id = 0;
  bool interpolated = false;
  ValueEstimate est;

  explicit ValueEntry(std::int64_t id_ = 0, int window = 100)
      : id(id_), est(window) {}
};

// Per-point value estimates for one run, keyed by point id. Entries keep the
// valuation set's order so serialization is deterministic.
class ValueTable {
 public:
  ValueTable() = default;

  ValueTable(std::vector<std::int64_t> ids, int m, std::uint64_t seed,
             std::string schedule_name, int window)
      : m_(m), seed_(seed), schedule_name_(std::move(schedule_name)), window_(window) {
    entries_.reserve(ids.size());
    for (std::int64_t id : ids) {
      index_[id] = entries_.size();
      entries_.emplace_back(id, window);
    }
  }

  std::vector<ValueEntry>& entries() { return entries_; }
  const std::vector<ValueEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  const ValueEntry* find(std::int64_t id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &entries_[it->second];
  }

  double value_of(std::int64_t id) const {
    const ValueEntry* e = find(id);
    if (!e) throw std::out_of_range("value table: unknown id " + std::to_string(id));
    return e->est.mean;
  }

  void append_interpolated(std::int64_t id, double value) {
    index_[id] = entries_.size();
    ValueEntry e(id, window_);
    e.interpolated = true;
    e.est.mean = value;
    entries_.push_back(std::move(e));
  }

  // Mean |value| over estimated (non-interpolated) entries.
  double mean_abs_value() const {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& e : entries_) {
      if (e.interpolated) continue;
      s += std::fabs(e.est.mean);
      ++n;
    }
    return n == 0 ? 0.0 : s / static_cast<double>(n);
  }

  int m() const { return m_; }
  std::uint64_t seed() const { return seed_; }
  const std::string& schedule_name() const { return schedule_name_; }
  int window() const { return window_; }

 private:
  std::vector<ValueEntry> entries_;
  std::unordered_map<std::int64_t, std::size_t> index_;
  int m_ = 0;
  std::uint64_t seed_ = 0;
  std::string schedule_name_;
  int window_ = 100;
};

}  // namespace dshap
