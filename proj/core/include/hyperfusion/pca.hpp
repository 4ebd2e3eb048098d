#pragma once

#include <cstddef>

#include "hyperfusion/types.hpp"

namespace hyperfusion {

struct PcaModel {
  Vector mean;                // length D
  Matrix components;          // k x D, rows orthonormal
  Vector explained_variance;  // length k, nonincreasing
};

// Rows of components are the top-k right singular vectors of the centered
// data; explained_variance holds the matching sample-covariance eigenvalues.
// Requires 1 <= k <= min(R-1, D).
PcaModel fit_pca(const Matrix& x, std::size_t k);

// (X - mean) * components^T.
Matrix apply_pca(const PcaModel& model, const Matrix& x);

}  // namespace hyperfusion
