#include "hyperfusion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hyperfusion/errors.hpp"

namespace hyperfusion {

std::vector<double> fractional_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });

  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // 1-based ranks i+1 .. j averaged over the tie group.
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = avg;
    i = j;
  }
  return ranks;
}

namespace {

void check_finite(std::span<const double> v, const char* name) {
  for (double x : v)
    if (!std::isfinite(x))
      throw DataError(std::string("metrics: non-finite value in ") + name);
}

}  // namespace

double spearman_src(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size())
    throw DataError("spearman_src: length mismatch " + std::to_string(y.size()) +
                    " vs " + std::to_string(yhat.size()));
  const std::size_t n = y.size();
  if (n < 2) throw DataError("spearman_src: undefined correlation for n < 2");
  check_finite(y, "labels");
  check_finite(yhat, "predictions");

  const std::vector<double> ra = fractional_ranks(y);
  const std::vector<double> rb = fractional_ranks(yhat);

  const double mean = 0.5 * static_cast<double>(n + 1);
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = ra[i] - mean;
    const double db = rb[i] - mean;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0)
    throw DataError("spearman_src: undefined correlation for a constant vector");
  return sab / std::sqrt(saa * sbb);
}

double mae(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size())
    throw DataError("mae: length mismatch " + std::to_string(y.size()) + " vs " +
                    std::to_string(yhat.size()));
  if (y.empty()) throw DataError("mae: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += std::abs(y[i] - yhat[i]);
  return total / static_cast<double>(y.size());
}

}  // namespace hyperfusion
