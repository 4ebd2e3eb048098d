#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hyperfusion {

struct HistogramRow {
  double bin_left = 0.0;
  double bin_right = 0.0;
  std::size_t count_true = 0;
  std::size_t count_pred = 0;
};

struct DensityRow {
  double x = 0.0;
  double density_true = 0.0;
  double density_pred = 0.0;
};

struct DistributionExport {
  std::vector<HistogramRow> histogram;
  std::vector<DensityRow> density;  // 200 grid points

  std::string histogram_csv() const;  // bin_left,bin_right,count_true,count_pred
  std::string density_csv() const;    // x,density_true,density_pred
};

// Equal-width bins over the joint min/max (or the given range; out-of-range
// values land in the boundary bins so counts are conserved exactly), plus
// Gaussian-kernel density samples with Silverman bandwidth.
DistributionExport distribution_export(
    std::span<const double> y, std::span<const double> yhat, int bins,
    std::optional<std::pair<double, double>> range = std::nullopt);

}  // namespace hyperfusion
