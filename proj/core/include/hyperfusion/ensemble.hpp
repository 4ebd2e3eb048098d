#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hyperfusion/pipeline.hpp"
#include "hyperfusion/regressor.hpp"
#include "hyperfusion/rng.hpp"
#include "hyperfusion/types.hpp"

namespace hyperfusion {

struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;  // per-row fold index in [0, K)
  RngSeed seed;
};

// Seeded shuffle then round-robin assignment; fold sizes differ by at most
// one. With labels given, rows are stratified into label deciles first.
FoldPlan make_folds(std::size_t n, int k, RngSeed seed,
                    const std::vector<double>* stratify_labels = nullptr);

enum class WeightMetric { kMae, kSrc };

// Simplex weight search by coordinate moves with grid refinement (step 0.1
// halved to 1/160). The uniform vector and every pure single-member vector
// are evaluated up front, so the result never loses to a single member.
// Exact ties break toward the vector closest to uniform.
Vector optimize_weights(const Matrix& member_preds,  // N x V
                        const Vector& y, WeightMetric metric);

struct MemberConfig {
  bool gbdt = true;
  bool mlp = true;
  bool ridge = true;
  GbdtParams gbdt_params;
  MlpParams mlp_params;
  double ridge_l2 = 1.0;
};

struct EnsembleConfig {
  int k_folds = 5;
  bool stratified = false;
  WeightMetric metric = WeightMetric::kMae;
  HuberParams huber;
  MemberConfig members;
  FeatureConfig features;
  bool iqr_enabled = true;
  double iqr_multiplier = 1.5;
  // Single 80/20 split instead of K-fold cross-validation (ablation mode).
  bool single_split = false;
  double holdout_fraction = 0.2;
  int workers = 1;
};

// Extra training rows carrying assigned labels and a loss weight
// (pseudo-labeled examples). They never enter validation folds or
// preprocessing fits.
struct WeightedExample {
  Post post;
  double label = 0.0;
  double weight = 1.0;
};

struct FoldState {
  FeaturePipeline pipeline;
  double label_mean = 0.0;
  double label_std = 1.0;
  std::vector<Regressor> members;
  Vector weights;
  double val_src = 0.0;
  double val_mae = 0.0;
  std::vector<double> member_val_mae;  // per member, original label scale
};

struct EnsembleModel {
  std::vector<FoldState> folds;
  std::vector<MemberKind> member_kinds;
  WeightMetric metric_used = WeightMetric::kMae;
  RngSeed seed;

  int k() const { return static_cast<int>(folds.size()); }
  std::size_t member_count() const { return member_kinds.size(); }

  // Fold-averaged weighted prediction, ascending fold order.
  Vector predict(const std::vector<Post>& posts,
                 const std::vector<EmbeddingTable>& tables) const;

  // All K*N member predictions per row (original label scale). Column order
  // is fold-major: fold 0 members, fold 1 members, ...
  Matrix member_predictions(const std::vector<Post>& posts,
                            const std::vector<EmbeddingTable>& tables) const;

  // Per-fold transformed feature matrices (the model's own input space).
  std::vector<FeatureMatrix> transform_per_fold(
      const std::vector<Post>& posts,
      const std::vector<EmbeddingTable>& tables) const;

  // Prediction from already-transformed per-fold matrices.
  Vector predict_from_features(const std::vector<Matrix>& fold_features) const;

  void save(const std::filesystem::path& path) const;
  static EnsembleModel load(const std::filesystem::path& path);
};

struct TrainOutput {
  EnsembleModel model;
  Vector oof_predictions;  // out-of-fold prediction per labeled row
  double oof_src = 0.0;
  double oof_mae = 0.0;
};

// K-fold training: per fold, preprocessing and the IQR filter are fitted on
// the K-1 training folds only, all members are fitted on the filtered rows
// (plus any extra weighted examples), and the fold's weights are optimized
// on its held-out predictions. Deterministic at any worker count.
TrainOutput train_ensemble(const std::vector<Post>& labeled_posts,
                           const std::vector<EmbeddingTable>& tables,
                           const EnsembleConfig& config, RngSeed seed,
                           const std::vector<WeightedExample>& extra = {});

}  // namespace hyperfusion
