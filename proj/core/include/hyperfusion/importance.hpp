#pragma once

#include <string>
#include <vector>

#include "hyperfusion/ensemble.hpp"

namespace hyperfusion {

struct FeatureImportance {
  std::string name;
  double importance = 0.0;       // mean MAE increase over repeats
  double std_over_repeats = 0.0;
};

struct ImportanceResult {
  std::vector<FeatureImportance> per_column;
  std::vector<FeatureImportance> per_block;  // summed over block columns
  double baseline_mae = 0.0;
};

// Permutation importance: mean over repeats of the MAE increase when one
// feature column is shuffled (the same row permutation applied in every
// fold's transformed matrix). A column the model never reads scores exactly
// zero. Deterministic given the seed, at any worker count.
ImportanceResult permutation_importance(const EnsembleModel& model,
                                        const std::vector<Post>& posts,
                                        const std::vector<EmbeddingTable>& tables,
                                        const std::vector<double>& y,
                                        int repeats, RngSeed seed,
                                        int workers = 1);

}  // namespace hyperfusion
