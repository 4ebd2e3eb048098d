#include "hyperfusion/ridge.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "hyperfusion/errors.hpp"

namespace hyperfusion {

Vector RidgeModel::predict(const Matrix& x) const {
  if (x.cols() != weights.size())
    throw DataError("ridge predict: shape error, expected " +
                    std::to_string(weights.size()) + " features, got " +
                    std::to_string(x.cols()));
  return (x * weights).array() + bias;
}

RidgeModel ridge_fit(const Matrix& x, const Vector& y, double l2,
                     const Vector* sample_weight) {
  const auto rows = x.rows();
  const auto cols = x.cols();
  if (rows == 0 || cols == 0) throw DataError("ridge: shape error, empty matrix");
  if (y.size() != rows) throw DataError("ridge: shape error, label length mismatch");
  if (l2 < 0.0 || !std::isfinite(l2)) throw ConfigError("ridge: l2 must be >= 0");
  if (sample_weight && sample_weight->size() != rows)
    throw DataError("ridge: weight length mismatch");

  const Vector w = sample_weight ? *sample_weight : Vector(Vector::Ones(rows));
  const double wsum = w.sum();
  if (!(wsum > 0.0)) throw DataError("ridge: degenerate sample weights");

  const Vector col_mean = (x.transpose() * w) / wsum;
  const double y_mean = y.dot(w) / wsum;

  const Matrix xc = x.rowwise() - col_mean.transpose();
  const Vector yc = y.array() - y_mean;

  const Matrix xcw = xc.array().colwise() * w.array();
  Matrix normal = xc.transpose() * xcw;
  normal.diagonal().array() += l2;
  const Vector rhs = xcw.transpose() * yc;

  Eigen::LDLT<Matrix> solver(normal);
  Vector coef = solver.solve(rhs);

  const double residual = (normal * coef - rhs).norm();
  const double scale = (x.transpose() * y).norm();
  if (residual > 1e-8 * std::max(scale, 1.0)) {
    if (l2 == 0.0)
      throw DataError("ridge: singularity error, system is rank deficient with l2=0");
    throw InternalError("ridge: normal equations residual " +
                        std::to_string(residual) + " exceeds tolerance");
  }

  RidgeModel model;
  model.weights = std::move(coef);
  model.bias = y_mean - col_mean.dot(model.weights);
  model.l2 = l2;
  return model;
}

}  // namespace hyperfusion
