#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "hyperfusion/rng.hpp"
#include "hyperfusion/types.hpp"

namespace hyperfusion {

struct SvdResult {
  Matrix u;         // m x k, orthonormal columns
  Vector sigma;     // k, nonincreasing, >= 0
  Matrix v;         // n x k, orthonormal columns
};

// Rank-k factorization via randomized subspace iteration. Deterministic
// given the seed. Requires 1 <= k <= min(m, n).
SvdResult truncated_svd(const Matrix& m, std::size_t k, int iterations,
                        RngSeed seed);

enum class EntityKind { kUser, kLocation };

struct SvdModel {
  Matrix left_factors;      // m x k rows = entity embeddings source (U)
  Vector singular_values;   // k, nonincreasing, >= 0
  Matrix right_factors;     // n x k (V)
  std::size_t rank = 0;
  std::vector<std::string> entity_ids;   // row order of left_factors
  std::vector<std::string> context_ids;  // row order of right_factors
  std::string fitted_on;                 // "user" | "location"

  const std::unordered_map<std::string, std::size_t>& row_index() const;

 private:
  mutable std::unordered_map<std::string, std::size_t> index_;
};

// Entity x tag-vocabulary co-occurrence counts, log(1+count)-damped.
// Location entities are 0.1-degree grid cells by default; posts without
// geo coordinates map to the cell of (0, 0).
struct InteractionMatrix {
  Matrix counts;
  std::vector<std::string> entity_ids;
  std::vector<std::string> context_ids;
};

std::string location_cell(double latitude, double longitude,
                          double grid_degrees);

InteractionMatrix build_interaction_matrix(const std::vector<Post>& posts,
                                           EntityKind kind,
                                           double location_grid_degrees);

// Fits the interaction matrix factorization; the embedding for entity e is
// row e of U_k * Sigma_k^{1/2}.
SvdModel fit_svd_embeddings(const std::vector<Post>& posts, EntityKind kind,
                            std::size_t k, int iterations, RngSeed seed,
                            double location_grid_degrees = 0.1);

// Embedding lookup block: width k + 1; unseen ids get a zero vector and an
// unseen-flag of 1.
struct EmbeddingColumns {
  std::vector<std::string> names;
  Matrix data;
};

EmbeddingColumns embedding_columns(const SvdModel& model,
                                   const std::vector<std::string>& ids);

FeatureMatrix embed_entities(const SvdModel& model,
                             const std::vector<std::string>& ids);

}  // namespace hyperfusion
