#pragma once

#include "hyperfusion/types.hpp"

namespace hyperfusion {

struct RidgeModel {
  Vector weights;
  double bias = 0.0;
  double l2 = 0.0;

  Vector predict(const Matrix& x) const;
};

// Solves (Xc^T W Xc + l2 I) w = Xc^T W (y - ybar) on centered data via LDLT.
// Requires l2 > 0 or full column rank; the normal-equation residual is
// checked against 1e-8 * ||X^T y||.
RidgeModel ridge_fit(const Matrix& x, const Vector& y, double l2,
                     const Vector* sample_weight = nullptr);

}  // namespace hyperfusion
