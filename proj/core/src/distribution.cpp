#include "hyperfusion/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "hyperfusion/errors.hpp"
#include "hyperfusion/features.hpp"

namespace hyperfusion {

namespace {

// Silverman's rule of thumb: 0.9 * min(std, IQR/1.349) * n^(-1/5).
double silverman_bandwidth(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n < 2) return 1.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n - 1);
  const double sd = std::sqrt(var);

  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr =
      quantile_type7(sorted, 0.75) - quantile_type7(sorted, 0.25);

  double spread = sd;
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.349);
  if (spread <= 0.0) return 1.0;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

void kde(std::span<const double> v, const std::vector<double>& grid,
         std::vector<double>& out) {
  const double h = silverman_bandwidth(v);
  const double norm =
      1.0 / (static_cast<double>(v.size()) * h * std::sqrt(2.0 * 3.14159265358979323846));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double acc = 0.0;
    for (double x : v) {
      const double z = (grid[g] - x) / h;
      acc += std::exp(-0.5 * z * z);
    }
    out[g] = acc * norm;
  }
}

}  // namespace

DistributionExport distribution_export(
    std::span<const double> y, std::span<const double> yhat, int bins,
    std::optional<std::pair<double, double>> range) {
  if (bins < 1) throw ConfigError("distribution_export: bins must be >= 1");
  if (y.empty() || yhat.empty())
    throw DataError("distribution_export: empty input");

  double lo, hi;
  if (range) {
    lo = range->first;
    hi = range->second;
    if (!(lo <= hi)) throw ConfigError("distribution_export: invalid range");
  } else {
    lo = std::min(*std::min_element(y.begin(), y.end()),
                  *std::min_element(yhat.begin(), yhat.end()));
    hi = std::max(*std::max_element(y.begin(), y.end()),
                  *std::max_element(yhat.begin(), yhat.end()));
  }
  if (lo == hi) {  // point mass still needs a well-defined bin width
    lo -= 0.5;
    hi += 0.5;
  }

  DistributionExport out;
  const double width = (hi - lo) / static_cast<double>(bins);
  out.histogram.resize(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    out.histogram[static_cast<std::size_t>(b)].bin_left = lo + b * width;
    out.histogram[static_cast<std::size_t>(b)].bin_right =
        b + 1 == bins ? hi : lo + (b + 1) * width;
  }

  auto bin_of = [&](double x) {
    const int b = static_cast<int>(std::floor((x - lo) / width));
    return static_cast<std::size_t>(std::clamp(b, 0, bins - 1));
  };
  for (double x : y) out.histogram[bin_of(x)].count_true++;
  for (double x : yhat) out.histogram[bin_of(x)].count_pred++;

  constexpr std::size_t kGridPoints = 200;
  std::vector<double> grid(kGridPoints);
  for (std::size_t g = 0; g < kGridPoints; ++g)
    grid[g] = lo + (hi - lo) * static_cast<double>(g) /
                       static_cast<double>(kGridPoints - 1);
  std::vector<double> dt(kGridPoints), dp(kGridPoints);
  kde(y, grid, dt);
  kde(yhat, grid, dp);
  out.density.resize(kGridPoints);
  for (std::size_t g = 0; g < kGridPoints; ++g)
    out.density[g] = DensityRow{grid[g], dt[g], dp[g]};
  return out;
}

std::string DistributionExport::histogram_csv() const {
  std::string out = "bin_left,bin_right,count_true,count_pred\n";
  char buf[128];
  for (const auto& row : histogram) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%zu,%zu\n", row.bin_left,
                  row.bin_right, row.count_true, row.count_pred);
    out += buf;
  }
  return out;
}

std::string DistributionExport::density_csv() const {
  std::string out = "x,density_true,density_pred\n";
  char buf[128];
  for (const auto& row : density) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g\n", row.x, row.density_true,
                  row.density_pred);
    out += buf;
  }
  return out;
}

}  // namespace hyperfusion
