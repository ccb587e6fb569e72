#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "judgeprobe/common.hpp"
#include "judgeprobe/cues.hpp"
#include "judgeprobe/trial.hpp"

namespace judgeprobe {

class MetricsError : public Error {
 public:
  enum class Kind { EmptyCell };
  Kind kind;
  MetricsError(Kind k, std::string msg) : Error(std::move(msg)), kind(k) {}
};

// Metrics for one (dataset, judge, family, label-pair) cell. vsr_signed is
// the headline number: the difference in first-response selection rate
// between the (a,b) and (b,a) directions, in percentage points, positive
// when label a is favored. vsr_flip is the share of paired items whose
// selection changes between directions; on fully paired cells
// vsr_flip >= |vsr_signed| (a net change of k points needs k points of
// flips). car_avg is the acknowledgment rate averaged over both directions.
struct CellReport {
  std::string dataset_tag;
  std::string judge_id;
  FamilyId family = FamilyId::Temporal;
  CueLabel label_a = CueLabel::New;
  CueLabel label_b = CueLabel::Old;
  std::size_t n_valid_ab = 0;
  std::size_t n_valid_ba = 0;
  std::size_t n_paired = 0;
  double rate_ab = 0.0;
  double rate_ba = 0.0;
  double vsr_signed = 0.0;  // percentage points
  double vsr_flip = 0.0;    // percent of paired items
  double car_avg = 0.0;     // percent
  double failure_rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::string lexicon_version;

  bool operator==(const CellReport&) const = default;
};

// Fraction of valid records selecting response 1. Failed verdicts and
// errored trials are excluded from the denominator.
inline double selection_rate(std::span<const TrialRecord> records) {
  std::size_t n_valid = 0, n_sel1 = 0;
  for (const auto& r : records) {
    if (!trial_valid(r)) continue;
    ++n_valid;
    if (r.verdict.selected == 1) ++n_sel1;
  }
  if (n_valid == 0) {
    throw MetricsError(MetricsError::Kind::EmptyCell, "selection_rate: no valid records");
  }
  return static_cast<double>(n_sel1) / static_cast<double>(n_valid);
}

inline double vsr_signed(std::span<const TrialRecord> dir_ab,
                         std::span<const TrialRecord> dir_ba) {
  return 100.0 * (selection_rate(dir_ab) - selection_rate(dir_ba));
}

namespace detail {

// item_id -> (selected in a-b direction, selected in b-a direction).
// Sorted by item_id so every metric is invariant to record order.
inline std::vector<std::pair<std::optional<int>, std::optional<int>>> paired_selections(
    std::span<const TrialRecord> dir_ab, std::span<const TrialRecord> dir_ba) {
  std::map<std::string, std::pair<std::optional<int>, std::optional<int>>> by_item;
  for (const auto& r : dir_ab) {
    if (trial_valid(r)) by_item[r.item_id].first = r.verdict.selected;
  }
  for (const auto& r : dir_ba) {
    if (trial_valid(r)) by_item[r.item_id].second = r.verdict.selected;
  }
  std::vector<std::pair<std::optional<int>, std::optional<int>>> out;
  out.reserve(by_item.size());
  for (auto& [id, sel] : by_item) out.push_back(sel);
  return out;
}

}  // namespace detail

// Percentage of items whose selected index differs between the two swap
// directions. Items lacking a valid record on either side are excluded
// from the pairing (their count shows up via n_valid/n_paired).
inline double vsr_flip(std::span<const TrialRecord> dir_ab, std::span<const TrialRecord> dir_ba) {
  auto pairs = detail::paired_selections(dir_ab, dir_ba);
  std::size_t n_paired = 0, n_flipped = 0;
  for (const auto& [ab, ba] : pairs) {
    if (!ab || !ba) continue;
    ++n_paired;
    if (*ab != *ba) ++n_flipped;
  }
  if (n_paired == 0) {
    throw MetricsError(MetricsError::Kind::EmptyCell, "vsr_flip: no paired items");
  }
  return 100.0 * static_cast<double>(n_flipped) / static_cast<double>(n_paired);
}

// Mean of the two per-direction acknowledgment fractions, in percent.
// Denominators are the non-failed trials of each direction.
inline double car_avg(std::span<const TrialRecord> dir_ab, std::span<const TrialRecord> dir_ba) {
  auto direction_rate = [](std::span<const TrialRecord> records) {
    std::size_t n_valid = 0, n_acked = 0;
    for (const auto& r : records) {
      if (!trial_valid(r)) continue;
      ++n_valid;
      if (r.acknowledged) ++n_acked;
    }
    if (n_valid == 0) {
      throw MetricsError(MetricsError::Kind::EmptyCell, "car_avg: no valid records");
    }
    return static_cast<double>(n_acked) / static_cast<double>(n_valid);
  };
  return 100.0 * (direction_rate(dir_ab) + direction_rate(dir_ba)) / 2.0;
}

struct BootstrapOptions {
  int resamples = 2000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

// Seeded nonparametric bootstrap over items for vsr_signed. Percentile
// interval, widened if needed so it always brackets the point estimate;
// degenerate cells collapse to a zero-width interval at the estimate.
inline std::pair<double, double> confidence_interval(std::span<const TrialRecord> dir_ab,
                                                     std::span<const TrialRecord> dir_ba,
                                                     const BootstrapOptions& opts = {}) {
  double point = vsr_signed(dir_ab, dir_ba);
  auto pairs = detail::paired_selections(dir_ab, dir_ba);
  const std::size_t n = pairs.size();
  if (n == 0) {
    throw MetricsError(MetricsError::Kind::EmptyCell, "confidence_interval: no items");
  }

  std::mt19937_64 rng(opts.seed);
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(opts.resamples));
  for (int b = 0; b < opts.resamples; ++b) {
    std::size_t ab_n = 0, ab_sel1 = 0, ba_n = 0, ba_sel1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& [ab, ba] = pairs[bounded_uint(rng, n)];
      if (ab) {
        ++ab_n;
        if (*ab == 1) ++ab_sel1;
      }
      if (ba) {
        ++ba_n;
        if (*ba == 1) ++ba_sel1;
      }
    }
    if (ab_n == 0 || ba_n == 0) {
      stats.push_back(point);  // resample lost a whole direction; neutral draw
      continue;
    }
    stats.push_back(100.0 * (static_cast<double>(ab_sel1) / static_cast<double>(ab_n) -
                             static_cast<double>(ba_sel1) / static_cast<double>(ba_n)));
  }
  std::sort(stats.begin(), stats.end());
  double alpha = (1.0 - opts.level) / 2.0;
  auto quantile = [&stats](double q) {
    std::size_t rank = static_cast<std::size_t>(
        std::ceil(q * static_cast<double>(stats.size())));
    if (rank > 0) --rank;
    if (rank >= stats.size()) rank = stats.size() - 1;
    return stats[rank];
  };
  double low = quantile(alpha);
  double high = quantile(1.0 - alpha);
  low = std::min(low, point);
  high = std::max(high, point);
  return {low, high};
}

// Assembles the full cell from the two direction record sets.
inline CellReport build_cell(std::span<const TrialRecord> dir_ab,
                             std::span<const TrialRecord> dir_ba, std::string dataset_tag,
                             std::string judge_id, FamilyId family, CueLabel label_a,
                             CueLabel label_b, const std::string& lexicon_version,
                             const BootstrapOptions& bootstrap = {}) {
  CellReport cell;
  cell.dataset_tag = std::move(dataset_tag);
  cell.judge_id = std::move(judge_id);
  cell.family = family;
  cell.label_a = label_a;
  cell.label_b = label_b;
  cell.lexicon_version = lexicon_version;

  for (const auto& r : dir_ab) {
    if (trial_valid(r)) ++cell.n_valid_ab;
  }
  for (const auto& r : dir_ba) {
    if (trial_valid(r)) ++cell.n_valid_ba;
  }
  std::size_t total = dir_ab.size() + dir_ba.size();
  cell.failure_rate =
      total == 0 ? 0.0
                 : static_cast<double>(total - cell.n_valid_ab - cell.n_valid_ba) /
                       static_cast<double>(total);

  cell.rate_ab = selection_rate(dir_ab);
  cell.rate_ba = selection_rate(dir_ba);
  cell.vsr_signed = 100.0 * (cell.rate_ab - cell.rate_ba);
  cell.vsr_flip = vsr_flip(dir_ab, dir_ba);
  cell.car_avg = car_avg(dir_ab, dir_ba);
  auto pairs = detail::paired_selections(dir_ab, dir_ba);
  for (const auto& [ab, ba] : pairs) {
    if (ab && ba) ++cell.n_paired;
  }
  auto [low, high] = confidence_interval(dir_ab, dir_ba, bootstrap);
  cell.ci_low = low;
  cell.ci_high = high;
  return cell;
}

}  // namespace judgeprobe
