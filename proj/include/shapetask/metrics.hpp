#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "shapetask/grid.hpp"

namespace shapetask {

// 2|P∩G| / (|P|+|G|) on the binary masks of `cls`. Returns nullopt when both
// masks are empty: such cases are excluded from aggregation, not scored.
std::optional<double> dice_score(const LabelMap& pred, const LabelMap& gt, int cls);

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample std, n-1 denominator
  size_t count = 0;
  bool single = false;  // std undefined, reported as 0
};

// Mean ± sample standard deviation. Empty input is an error; a single score
// reports std 0 with the `single` flag set.
Aggregate aggregate(std::span<const double> scores);

// Renders "mean ± std" with 4 decimals.
std::string format_aggregate(const Aggregate& a);

struct WilcoxonResult {
  double w = 0.0;        // min(W+, W-)
  double p_value = 1.0;  // two-sided
  int n_used = 0;        // pairs remaining after dropping zero differences
  bool exact = false;    // full enumeration vs normal approximation
  bool degenerate = false;  // all differences were zero
};

// Wilcoxon signed-rank test on paired samples: zero differences dropped,
// mid-ranks for tied magnitudes, W = min(W+, W-). Exact p by enumerating all
// 2^n sign assignments when n <= 12; otherwise a normal approximation with
// tie-corrected variance and continuity correction.
WilcoxonResult wilcoxon_signed_rank(std::span<const std::pair<double, double>> pairs);

}  // namespace shapetask
