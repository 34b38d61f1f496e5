#pragma once

#include <span>
#include <vector>

namespace planeval::stats {

// Percentile of already sorted data by linear interpolation between closest
// ranks: index = (n - 1) * pct / 100. pct is clamped to [0, 100].
double percentile_sorted(std::span<const double> sorted, double pct);

// Sorts a copy and delegates to percentile_sorted.
double percentile(std::span<const double> values, double pct);

// Median with the same convention (mean of the two middle order statistics
// for even counts).
double median(std::span<const double> values);

// Average ranks, 1-based; tied values share the mean of their rank span.
std::vector<double> average_ranks(std::span<const double> values);

double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace planeval::stats
