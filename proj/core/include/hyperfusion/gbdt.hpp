#pragma once

#include <cstdint>
#include <vector>

#include "hyperfusion/huber.hpp"
#include "hyperfusion/rng.hpp"
#include "hyperfusion/types.hpp"

namespace hyperfusion {

struct GbdtParams {
  int n_trees = 200;
  int max_depth = 4;
  int min_leaf = 20;
  double learning_rate = 0.1;
};

// Binary regression tree in array form. feature == -1 marks a leaf.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;  // leaf output, already scaled by the learning rate
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict_row(const double* row) const {
    std::int32_t at = 0;
    while (nodes[at].feature >= 0)
      at = row[nodes[at].feature] <= nodes[at].threshold ? nodes[at].left
                                                         : nodes[at].right;
    return nodes[at].value;
  }
};

struct GbdtModel {
  double base_score = 0.0;
  std::vector<Tree> trees;
  double learning_rate = 0.1;
  int max_depth = 0;
  int min_leaf = 0;
  std::size_t feature_count = 0;
  std::vector<double> training_loss;  // mean Huber loss after each round

  Vector predict(const Matrix& x) const;
};

// Boosted trees on negative Huber gradients with exact greedy
// variance-reduction splits. base_score is the (weighted) median of y; leaf
// values are mean negative gradients scaled by the learning rate. Split
// tie-break: lowest feature index, then lowest threshold. Deterministic
// given (data, params, seed).
GbdtModel gbdt_fit(const Matrix& x, const Vector& y, const GbdtParams& params,
                   HuberParams huber, RngSeed seed,
                   const Vector* sample_weight = nullptr);

}  // namespace hyperfusion
