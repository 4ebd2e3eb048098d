#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hyperfusion/features.hpp"
#include "hyperfusion/ingest.hpp"
#include "hyperfusion/pca.hpp"
#include "hyperfusion/rng.hpp"
#include "hyperfusion/serialize.hpp"
#include "hyperfusion/svd.hpp"
#include "hyperfusion/types.hpp"

namespace hyperfusion {

struct FeatureConfig {
  // Modality toggles; a disabled block disappears from block_spans.
  bool visual = true;
  bool textual = true;
  bool spatial = true;
  bool user = true;
  bool cross = true;

  std::size_t pca_visual_k = 0;   // 0 = off
  std::size_t pca_textual_k = 0;  // applies to the text-embedding columns
  std::size_t svd_user_k = 16;
  std::size_t svd_location_k = 0;  // 0 = off
  int svd_iterations = 4;
  double location_grid_degrees = 0.1;
  bool standardize = true;

  std::string visual_tag = "visual_clip";
  std::string text_tag = "text_clip";
  std::string tag_vector_tag = "tags_glove";

  ImputationPolicy imputation;
};

// Fitted preprocessing state: imputation statistics, optional PCA models,
// SVD entity embeddings, and the column scaler. Fit only ever sees training
// rows; transform is pure.
class FeaturePipeline {
 public:
  static FeaturePipeline fit(const std::vector<Post>& train_posts,
                             const std::vector<EmbeddingTable>& tables,
                             const FeatureConfig& config, RngSeed seed);

  FeatureMatrix transform(const std::vector<Post>& posts,
                          const std::vector<EmbeddingTable>& tables) const;

  const FeatureConfig& config() const { return cfg_; }
  const std::optional<SvdModel>& svd_user() const { return svd_user_; }
  const ScalerModel& scaler() const { return scaler_; }

  void serialize(io::Writer& w) const;
  static FeaturePipeline deserialize(io::Reader& r);

  // Single versioned artifact file; round-trip is bit-exact.
  void save(const std::filesystem::path& path) const;
  static FeaturePipeline load(const std::filesystem::path& path);

 private:
  FeatureConfig cfg_;
  ImputationStats imputation_;
  std::optional<PcaModel> pca_visual_;
  std::optional<PcaModel> pca_textual_;
  std::optional<SvdModel> svd_user_;
  std::optional<SvdModel> svd_location_;
  std::size_t glove_dim_ = 0;  // 0 when no tag-vector table was present
  ScalerModel scaler_;

  FeatureMatrix assemble(const std::vector<Post>& posts,
                         const std::vector<EmbeddingTable>& tables) const;
};

// Fit on the given posts and transform them in one step.
FeatureMatrix build_features(const std::vector<Post>& posts,
                             const std::vector<EmbeddingTable>& tables,
                             const FeatureConfig& config, RngSeed seed);

}  // namespace hyperfusion
