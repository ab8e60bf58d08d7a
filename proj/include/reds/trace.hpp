#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reds/domain.hpp"
#include "reds/errors.hpp"

namespace reds {

enum class StrategyKind { REDS, BPE_MPV, GP_UCB, UniformNoShrink };

inline std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::REDS: return "reds";
    case StrategyKind::BPE_MPV: return "bpe";
    case StrategyKind::GP_UCB: return "gp-ucb";
    case StrategyKind::UniformNoShrink: return "uniform";
  }
  return "unknown";
}

inline StrategyKind parse_strategy(std::string_view s) {
  if (s == "reds" || s == "REDS") return StrategyKind::REDS;
  if (s == "bpe" || s == "BPE" || s == "BPE_MPV" || s == "bpe-mpv") return StrategyKind::BPE_MPV;
  if (s == "gp-ucb" || s == "gp_ucb" || s == "GP_UCB") return StrategyKind::GP_UCB;
  if (s == "uniform" || s == "UniformNoShrink") return StrategyKind::UniformNoShrink;
  throw ConfigError("unknown strategy: " + std::string(s));
}

/// One issued query.
struct QueryRecord {
  std::size_t t = 0;  // 1-based
  int epoch = 1;
  std::size_t point_index = 0;
  Point x;
  double y = 0.0;
  std::optional<double> f_x;  // benchmark mode only
  std::int64_t wall_ns = 0;   // this query's share of selection + fitting compute
};

struct EpochSummary {
  int r = 1;
  std::size_t batch_size = 0;  // N_r as scheduled
  std::size_t queries = 0;     // queries actually issued (smaller for a truncated tail)
  std::size_t active_before = 0;
  std::size_t active_after = 0;
  bool shrunk = false;
  double tau_eff = 0.0;
  double max_active_sigma = 0.0;  // over X_r under this epoch's model; 0 when not fitted
  std::optional<double> gap;        // f(x*) - min over X_r of f
  std::optional<double> gap_bound;  // per-epoch gap bound derived from epoch r-1
  std::optional<bool> x_star_active;
  std::vector<char> active_after_mask;
  std::int64_t fit_wall_ns = 0;
};

/// Worst-case variance measured after the first n queries.
struct Checkpoint {
  std::size_t n = 0;
  double sup_variance = 0.0;
};

struct Trace {
  StrategyKind strategy = StrategyKind::REDS;
  std::vector<QueryRecord> records;
  std::vector<EpochSummary> epochs;
  std::vector<Checkpoint> checkpoints;
  std::int64_t total_wall_ns = 0;
  std::size_t negative_variance_count = 0;
  std::optional<double> f_star;
  std::optional<std::size_t> x_star_index;

  bool benchmark_mode() const { return f_star.has_value(); }

  /// Epochs whose realized gap exceeded the derived bound.
  std::size_t gap_bound_violations() const {
    std::size_t n = 0;
    for (const auto& e : epochs)
      if (e.gap && e.gap_bound && *e.gap > *e.gap_bound + 1e-12) ++n;
    return n;
  }

  /// Whether the benchmark argmax was active in every epoch.
  bool x_star_retained() const {
    for (const auto& e : epochs)
      if (e.x_star_active && !*e.x_star_active) return false;
    return true;
  }
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline std::int64_t elapsed_ns(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count();
}

/// Spreads ns evenly over records[first, first + count), remainder on the last.
inline void spread_wall_ns(std::vector<QueryRecord>& records, std::size_t first, std::size_t count, std::int64_t ns) {
  if (count == 0) return;
  const auto share = ns / static_cast<std::int64_t>(count);
  for (std::size_t i = 0; i < count; ++i) records[first + i].wall_ns += share;
  records[first + count - 1].wall_ns += ns - share * static_cast<std::int64_t>(count);
}

}  // namespace detail

}  // namespace reds
