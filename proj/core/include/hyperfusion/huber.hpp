#pragma once

#include <cmath>

#include "hyperfusion/errors.hpp"
#include "hyperfusion/types.hpp"

namespace hyperfusion {

struct HuberParams {
  double delta = 1.0;  // transition between quadratic and linear zones
};

struct HuberEval {
  double loss = 0.0;
  double dloss_dyhat = 0.0;
};

// Quadratic for |y - yhat| <= delta, linear beyond; loss and gradient are
// continuous at the transition. Gradient magnitude never exceeds delta.
inline HuberEval huber_loss(double y, double yhat, HuberParams p) {
  if (!(p.delta > 0.0) || !std::isfinite(p.delta))
    throw ConfigError("huber: delta must be finite and positive");
  const double r = y - yhat;
  HuberEval out;
  if (std::abs(r) <= p.delta) {
    out.loss = 0.5 * r * r;
    out.dloss_dyhat = -r;
  } else {
    out.loss = p.delta * std::abs(r) - 0.5 * p.delta * p.delta;
    out.dloss_dyhat = r > 0.0 ? -p.delta : p.delta;
  }
  return out;
}

// Weighted mean Huber loss over a prediction vector.
inline double huber_total(const Vector& y, const Vector& yhat, HuberParams p,
                          const Vector* weights = nullptr) {
  if (y.size() != yhat.size()) throw DataError("huber_total: length mismatch");
  double total = 0.0, wsum = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double w = weights ? (*weights)(i) : 1.0;
    total += w * huber_loss(y(i), yhat(i), p).loss;
    wsum += w;
  }
  return wsum > 0.0 ? total / wsum : 0.0;
}

}  // namespace hyperfusion
