#include "hyperfusion/pca.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "hyperfusion/errors.hpp"

namespace hyperfusion {

PcaModel fit_pca(const Matrix& x, std::size_t k) {
  const auto rows = x.rows();
  const auto cols = x.cols();
  if (rows < 2) throw DataError("pca: need at least 2 rows");
  const std::size_t max_k =
      std::min(static_cast<std::size_t>(rows - 1), static_cast<std::size_t>(cols));
  if (k == 0 || k > max_k)
    throw DataError("pca: rank error, k=" + std::to_string(k) +
                    " outside [1, " + std::to_string(max_k) + "]");

  PcaModel model;
  model.mean = x.colwise().mean();
  const Matrix centered = x.rowwise() - model.mean.transpose();
  const Matrix cov =
      (centered.transpose() * centered) / static_cast<double>(rows - 1);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success)
    throw InternalError("pca: eigendecomposition failed");

  model.components.resize(static_cast<Eigen::Index>(k), cols);
  model.explained_variance.resize(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    const Eigen::Index src = cols - 1 - static_cast<Eigen::Index>(i);
    const auto dst = static_cast<Eigen::Index>(i);
    model.explained_variance(dst) = std::max(0.0, eig.eigenvalues()(src));
    Vector comp = eig.eigenvectors().col(src);
    // Sign convention: largest-magnitude entry positive, lowest index on ties.
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index r = 0; r < comp.size(); ++r) {
      const double a = std::abs(comp(r));
      if (a > best) {
        best = a;
        arg = r;
      }
    }
    if (comp(arg) < 0.0) comp = -comp;
    model.components.row(dst) = comp.transpose();
  }
  return model;
}

Matrix apply_pca(const PcaModel& model, const Matrix& x) {
  if (x.cols() != model.mean.size())
    throw DataError("pca: column count mismatch, model has " +
                    std::to_string(model.mean.size()) + ", data has " +
                    std::to_string(x.cols()));
  return (x.rowwise() - model.mean.transpose()) * model.components.transpose();
}

}  // namespace hyperfusion
