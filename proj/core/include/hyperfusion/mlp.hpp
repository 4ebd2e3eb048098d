#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hyperfusion/huber.hpp"
#include "hyperfusion/rng.hpp"
#include "hyperfusion/types.hpp"

namespace hyperfusion {

struct MlpParams {
  std::size_t proj_dim = 16;            // shared width of modality projections
  std::vector<std::size_t> hidden = {32, 16};
  int epochs = 40;
  std::size_t batch = 256;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double bn_decay = 0.99;  // running-average decay for inference statistics
  double bn_eps = 1e-5;
};

// Feed-forward regressor with softmax attention over modality blocks.
// Blocks of width >= 2 are projected to proj_dim and fused by learned
// per-sample attention weights; width-1 blocks bypass the fusion and join
// the hidden stack directly. Hidden layers are linear -> per-batch
// standardization with trained gain/shift -> ReLU.
struct MlpModel {
  struct Block {
    std::string name;
    std::size_t begin = 0;
    std::size_t width = 0;
    bool wide = false;
  };

  std::vector<Block> blocks;
  std::size_t proj_dim = 0;
  std::size_t feature_count = 0;

  // Parameters, in flatten order.
  std::vector<Matrix> proj_w;   // per wide block: width x proj_dim
  std::vector<Vector> proj_b;   // per wide block: proj_dim
  std::vector<Vector> attn_w;   // per wide block: proj_dim
  std::vector<double> attn_b;   // per wide block
  std::vector<Matrix> hidden_w; // layer l: in x out
  std::vector<Vector> hidden_b;
  std::vector<Vector> gamma, beta;
  std::vector<Vector> run_mean, run_var;  // inference normalization stats
  Vector out_w;
  double out_b = 0.0;

  MlpParams params;
  HuberParams huber;

  Vector predict(const Matrix& x) const;

  // Per-sample softmax weights over the wide blocks (diagnostic export).
  Matrix attention(const Matrix& x) const;
  std::vector<std::string> wide_block_names() const;

  // Flat parameter access for optimization and gradient checks.
  Vector flatten_parameters() const;
  void set_parameters(const Vector& theta);

  // Weighted mean Huber loss and its gradient in flatten order, computed in
  // training mode (batch statistics). update_running folds the batch stats
  // into the running averages.
  double loss_and_gradient(const Matrix& x, const Vector& y, const Vector* w,
                           Vector* grad, bool update_running);
};

// Mini-batch gradient descent with momentum on the Huber objective.
// Deterministic given (data, params, seed). Throws on non-finite training
// loss, reporting the epoch and learning rate.
MlpModel mlp_fit(const Matrix& x, const Vector& y,
                 const std::vector<std::pair<std::string, ColumnRange>>& block_spans,
                 const MlpParams& params, HuberParams huber, RngSeed seed,
                 const Vector* sample_weight = nullptr);

}  // namespace hyperfusion
