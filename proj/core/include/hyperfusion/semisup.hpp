#pragma once

#include <string>
#include <vector>

#include "hyperfusion/ensemble.hpp"

namespace hyperfusion {

struct PseudoLabelConfig {
  double alpha = 0.5;          // selection strictness in tau = mu + alpha*sigma
  int max_iterations = 2;      // total training iterations, including the base fit
  enum class Confidence { kNegStd } rule = Confidence::kNegStd;
  double sample_weight = 0.5;  // loss weight of pseudo-labeled rows
};

// Per-row agreement score: negative population std over the K*N member
// predictions. Higher means more agreement; exact agreement scores 0.
Vector confidence_scores(const Matrix& member_predictions);

struct PseudoSelection {
  std::vector<std::size_t> rows;  // indices into the unlabeled pool
  std::vector<double> labels;     // ensemble predictions for those rows
  double weight = 0.0;
  double tau = 0.0;
  double confidence_mean = 0.0;
  double confidence_std = 0.0;
};

// Select rows with confidence >= tau where tau = mean + alpha*std of the
// confidence distribution. A zero-spread distribution selects everything.
PseudoSelection select_pseudo(const Vector& confidences,
                              const Vector& predictions,
                              const PseudoLabelConfig& config);

struct PseudoIterationStats {
  int iteration = 0;
  std::size_t selected = 0;
  double tau = 0.0;
  double confidence_mean = 0.0;
  double confidence_std = 0.0;
  double val_src_before = 0.0;
  double val_mae_before = 0.0;
  double val_src_after = 0.0;
  double val_mae_after = 0.0;
};

struct PseudoLabelReport {
  std::vector<PseudoIterationStats> iterations;

  // One JSON object per iteration, one per line.
  std::string to_jsonl() const;
};

struct PseudoLabelOutput {
  EnsembleModel model;
  PseudoLabelReport report;
  Vector oof_predictions;
  double val_src = 0.0;
  double val_mae = 0.0;
};

// Iteration 0 trains on labeled rows only; each later iteration refreshes
// pseudo-labels from the current model (never stacking across iterations)
// and retrains from scratch. Stops at max_iterations or as soon as the
// out-of-fold MAE fails to improve by more than 1e-6, keeping the best
// model seen. Rows with real labels never enter the unlabeled pool.
PseudoLabelOutput pseudo_label_loop(const std::vector<Post>& labeled_posts,
                                    const std::vector<Post>& unlabeled_posts,
                                    const std::vector<EmbeddingTable>& tables,
                                    const EnsembleConfig& ensemble_config,
                                    const PseudoLabelConfig& pseudo_config,
                                    RngSeed seed);

}  // namespace hyperfusion
