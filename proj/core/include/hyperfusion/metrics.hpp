#pragma once

#include <span>
#include <vector>

namespace hyperfusion {

// Fractional (average) ranks, 1-based; ties share the mean of their rank
// range. O(n log n).
std::vector<double> fractional_ranks(std::span<const double> values);

// Spearman rank correlation: Pearson correlation of fractional rank
// vectors. Without ties this equals 1 - 6*sum(d^2)/(n(n^2-1)). Throws for
// n < 2 or a constant vector (undefined correlation).
double spearman_src(std::span<const double> y, std::span<const double> yhat);

// Mean absolute error. Throws on length mismatch or empty input.
double mae(std::span<const double> y, std::span<const double> yhat);

}  // namespace hyperfusion
