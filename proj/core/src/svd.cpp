#include "hyperfusion/svd.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "hyperfusion/errors.hpp"

namespace hyperfusion {

namespace {

// Largest-magnitude entry of each right factor is made positive (lowest
// index wins ties) so factorizations are reproducible across runs.
void fix_signs(Matrix& u, Matrix& v) {
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      const double a = std::abs(v(r, c));
      if (a > best) {  // strict: lowest index wins ties
        best = a;
        arg = r;
      }
    }
    if (v(arg, c) < 0.0) {
      v.col(c) = -v.col(c);
      u.col(c) = -u.col(c);
    }
  }
}

// Modified Gram-Schmidt pass; columns that vanish are replaced by the first
// standard basis vector with a nonzero residual.
void orthonormalize_columns(Matrix& q) {
  const Eigen::Index rows = q.rows();
  for (Eigen::Index c = 0; c < q.cols(); ++c) {
    for (Eigen::Index p = 0; p < c; ++p)
      q.col(c) -= q.col(p).dot(q.col(c)) * q.col(p);
    double norm = q.col(c).norm();
    if (norm < 1e-10) {
      for (Eigen::Index basis = 0; basis < rows; ++basis) {
        Vector cand = Vector::Zero(rows);
        cand(basis) = 1.0;
        for (Eigen::Index p = 0; p < c; ++p)
          cand -= q.col(p).dot(cand) * q.col(p);
        const double cn = cand.norm();
        if (cn > 1e-6) {
          q.col(c) = cand / cn;
          norm = 1.0;
          break;
        }
      }
      if (norm < 1e-10)
        throw InternalError("svd: unable to complete orthonormal basis");
    } else {
      q.col(c) /= norm;
    }
  }
}

// Exact top-k via eigendecomposition of the smaller Gram matrix.
SvdResult gram_svd(const Matrix& m, std::size_t k) {
  const bool tall = m.rows() >= m.cols();
  const Matrix gram = tall ? Matrix(m.transpose() * m) : Matrix(m * m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success)
    throw InternalError("svd: eigendecomposition failed");

  const Eigen::Index g = gram.rows();
  SvdResult out;
  out.sigma.resize(static_cast<Eigen::Index>(k));
  Matrix small(g, static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    // Eigenvalues come back ascending.
    const Eigen::Index src = g - 1 - static_cast<Eigen::Index>(i);
    out.sigma(static_cast<Eigen::Index>(i)) =
        std::sqrt(std::max(0.0, eig.eigenvalues()(src)));
    small.col(static_cast<Eigen::Index>(i)) = eig.eigenvectors().col(src);
  }

  const double scale = m.norm();
  Matrix other(tall ? m.rows() : m.cols(), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    const auto ci = static_cast<Eigen::Index>(i);
    const double s = out.sigma(ci);
    if (s > 1e-12 * std::max(1.0, scale))
      other.col(ci) = (tall ? m * small.col(ci) : m.transpose() * small.col(ci)) / s;
    else
      other.col(ci).setZero();  // completed below
  }
  orthonormalize_columns(other);

  if (tall) {
    out.v = std::move(small);
    out.u = std::move(other);
  } else {
    out.u = std::move(small);
    out.v = std::move(other);
  }
  fix_signs(out.u, out.v);
  return out;
}

// Randomized subspace iteration for matrices too large for a dense Gram
// eigendecomposition.
SvdResult randomized_svd(const Matrix& m, std::size_t k, int iterations,
                         RngSeed seed) {
  const auto rows = m.rows();
  const auto cols = m.cols();
  const std::size_t min_dim = static_cast<std::size_t>(std::min(rows, cols));
  const std::size_t p = std::min<std::size_t>(min_dim - k, std::max<std::size_t>(8, k / 4));
  const auto width = static_cast<Eigen::Index>(k + p);

  Rng rng(seed);
  Matrix gauss(cols, width);
  for (Eigen::Index r = 0; r < cols; ++r)
    for (Eigen::Index c = 0; c < width; ++c) gauss(r, c) = rng.normal();

  Matrix q = m * gauss;
  orthonormalize_columns(q);
  for (int it = 0; it < std::max(1, iterations); ++it) {
    Matrix z = m.transpose() * q;
    orthonormalize_columns(z);
    q = m * z;
    orthonormalize_columns(q);
  }

  const Matrix b = q.transpose() * m;  // width x cols
  SvdResult small = gram_svd(b, k);
  SvdResult out;
  out.u = q * small.u;
  out.sigma = std::move(small.sigma);
  out.v = std::move(small.v);
  fix_signs(out.u, out.v);
  return out;
}

}  // namespace

SvdResult truncated_svd(const Matrix& m, std::size_t k, int iterations,
                        RngSeed seed) {
  if (m.rows() == 0 || m.cols() == 0)
    throw DataError("svd: degenerate input, empty matrix");
  const std::size_t min_dim =
      static_cast<std::size_t>(std::min(m.rows(), m.cols()));
  if (k == 0 || k > min_dim)
    throw DataError("svd: rank error, k=" + std::to_string(k) +
                    " outside [1, " + std::to_string(min_dim) + "]");
  // The Gram path is exact and cheap at desk scale; the randomized path
  // covers genuinely large matrices.
  if (min_dim <= 400) return gram_svd(m, k);
  return randomized_svd(m, k, iterations, seed);
}

const std::unordered_map<std::string, std::size_t>& SvdModel::row_index() const {
  if (index_.empty() && !entity_ids.empty()) {
    index_.reserve(entity_ids.size());
    for (std::size_t i = 0; i < entity_ids.size(); ++i)
      index_.emplace(entity_ids[i], i);
  }
  return index_;
}

std::string location_cell(double latitude, double longitude,
                          double grid_degrees) {
  const auto ilat =
      static_cast<long long>(std::floor(latitude / grid_degrees));
  const auto ilon =
      static_cast<long long>(std::floor(longitude / grid_degrees));
  return "cell_" + std::to_string(ilat) + "_" + std::to_string(ilon);
}

InteractionMatrix build_interaction_matrix(const std::vector<Post>& posts,
                                           EntityKind kind,
                                           double location_grid_degrees) {
  auto entity_of = [&](const Post& p) -> std::string {
    if (kind == EntityKind::kUser) return p.user_id;
    const double lat = p.latitude.value_or(0.0);
    const double lon = p.longitude.value_or(0.0);
    return location_cell(lat, lon, location_grid_degrees);
  };

  std::set<std::string> entity_set, context_set;
  for (const auto& p : posts) {
    entity_set.insert(entity_of(p));
    for (const auto& t : p.tags) context_set.insert(t);
  }

  InteractionMatrix out;
  out.entity_ids.assign(entity_set.begin(), entity_set.end());
  out.context_ids.assign(context_set.begin(), context_set.end());

  std::unordered_map<std::string, std::size_t> erow, crow;
  for (std::size_t i = 0; i < out.entity_ids.size(); ++i)
    erow.emplace(out.entity_ids[i], i);
  for (std::size_t i = 0; i < out.context_ids.size(); ++i)
    crow.emplace(out.context_ids[i], i);

  out.counts = Matrix::Zero(static_cast<Eigen::Index>(out.entity_ids.size()),
                            static_cast<Eigen::Index>(out.context_ids.size()));
  for (const auto& p : posts) {
    const auto e = static_cast<Eigen::Index>(erow.at(entity_of(p)));
    for (const auto& t : p.tags)
      out.counts(e, static_cast<Eigen::Index>(crow.at(t))) += 1.0;
  }
  out.counts = out.counts.unaryExpr([](double c) { return std::log1p(c); });
  return out;
}

SvdModel fit_svd_embeddings(const std::vector<Post>& posts, EntityKind kind,
                            std::size_t k, int iterations, RngSeed seed,
                            double location_grid_degrees) {
  InteractionMatrix interaction =
      build_interaction_matrix(posts, kind, location_grid_degrees);
  if (interaction.entity_ids.empty() || interaction.context_ids.empty())
    throw DataError("svd embeddings: degenerate input, empty interaction matrix");
  const std::size_t min_dim = std::min(interaction.entity_ids.size(),
                                       interaction.context_ids.size());
  if (k > min_dim)
    throw DataError("svd embeddings: rank error, k=" + std::to_string(k) +
                    " exceeds min(entities, contexts)=" + std::to_string(min_dim));

  SvdResult svd = truncated_svd(interaction.counts, k, iterations, seed);
  SvdModel model;
  model.left_factors = std::move(svd.u);
  model.singular_values = std::move(svd.sigma);
  model.right_factors = std::move(svd.v);
  model.rank = k;
  model.entity_ids = std::move(interaction.entity_ids);
  model.context_ids = std::move(interaction.context_ids);
  model.fitted_on = kind == EntityKind::kUser ? "user" : "location";
  return model;
}

EmbeddingColumns embedding_columns(const SvdModel& model,
                                   const std::vector<std::string>& ids) {
  const auto k = static_cast<Eigen::Index>(model.rank);
  // Symmetric factor split: embeddings are rows of U_k * Sigma_k^{1/2}.
  const Matrix emb =
      model.left_factors * model.singular_values.cwiseSqrt().asDiagonal();

  EmbeddingColumns out;
  out.names.reserve(model.rank + 1);
  for (std::size_t i = 0; i < model.rank; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "svd_%03zu", i);
    out.names.emplace_back(buf);
  }
  out.names.emplace_back("svd_unseen");

  out.data = Matrix::Zero(static_cast<Eigen::Index>(ids.size()), k + 1);
  const auto& index = model.row_index();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    auto it = index.find(ids[i]);
    if (it == index.end())
      out.data(row, k) = 1.0;
    else
      out.data.row(row).head(k) = emb.row(static_cast<Eigen::Index>(it->second));
  }
  return out;
}

FeatureMatrix embed_entities(const SvdModel& model,
                             const std::vector<std::string>& ids) {
  EmbeddingColumns cols = embedding_columns(model, ids);
  return make_block(model.fitted_on, ids, cols.names, std::move(cols.data));
}

}  // namespace hyperfusion
