#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hyperfusion/types.hpp"

namespace hyperfusion {

// Precomputed encoder outputs keyed by an entity id (post id for CLIP
// tables, tag string for the tag-vector table).
struct EmbeddingTable {
  std::vector<std::string> ids;
  Matrix data;  // R x dim
  std::string source_tag;

  std::size_t dim() const { return static_cast<std::size_t>(data.cols()); }
  std::size_t rows() const { return static_cast<std::size_t>(data.rows()); }

  // Lazily built id -> row lookup.
  const std::unordered_map<std::string, std::size_t>& index() const;

 private:
  mutable std::unordered_map<std::string, std::size_t> index_;
};

// Validates id uniqueness, finite entries and shape.
EmbeddingTable make_embedding_table(std::vector<std::string> ids, Matrix data,
                                    std::string source_tag);

// PFE1 binary format, little-endian throughout:
//   magic "PFE1", u32 row count, u32 dim, u8 tag length + tag bytes,
//   then per row: u16 id length, id bytes, dim x f32.
// Values narrow to f32 on write; read_embeddings round-trips those bits.
void write_embeddings(const std::filesystem::path& path,
                      const EmbeddingTable& table);
EmbeddingTable read_embeddings(const std::filesystem::path& path);

// One JSON object per line; unknown keys ignored, absent key = missing.
std::vector<Post> read_posts(const std::filesystem::path& path);
void write_posts(const std::filesystem::path& path,
                 const std::vector<Post>& posts);

enum class AlignPolicy { kInner, kRequireAll };

struct AlignResult {
  std::vector<Post> posts;
  std::vector<EmbeddingTable> tables;
  std::size_t dropped_posts = 0;
};

// Align posts with post-keyed tables onto one id order (post file order
// filtered to the join). Tables whose source_tag appears in passthrough_tags
// are keyed by something other than post ids (the tag-vector table) and are
// returned untouched.
AlignResult align(const std::vector<Post>& posts,
                  const std::vector<EmbeddingTable>& tables,
                  AlignPolicy policy,
                  const std::vector<std::string>& passthrough_tags = {});

struct ImputationPolicy {
  enum class NumericRule { kMedian, kConstant };
  enum class CategoricalRule { kMode, kSentinel };

  NumericRule numeric_rule = NumericRule::kMedian;
  double numeric_constant = 0.0;
  CategoricalRule categorical_rule = CategoricalRule::kSentinel;
  // Geo rule is fixed: sentinel (0,0) plus a companion missing-flag feature.
};

// Per-field fill values fitted on training rows only.
struct ImputationStats {
  std::optional<double> geo_accuracy;
  std::optional<double> followers;
  std::optional<double> following;
  std::optional<double> user_post_count;
  bool is_pro = false;
};

struct ImputationReport {
  std::map<std::string, std::size_t> counts;  // field -> imputations applied
};

struct ImputeResult {
  std::vector<Post> posts;
  std::vector<std::uint8_t> geo_was_missing;  // drives the geo_missing column
  ImputationReport report;
};

ImputationStats fit_imputation(const std::vector<Post>& training_posts,
                               const ImputationPolicy& policy);

ImputeResult apply_imputation(const std::vector<Post>& posts,
                              const ImputationStats& stats,
                              const ImputationPolicy& policy);

// Convenience wrapper: statistics from rows flagged as training, applied to
// all rows. Never alters a present value.
ImputeResult impute(const std::vector<Post>& posts,
                    const ImputationPolicy& policy,
                    const std::vector<std::uint8_t>& is_training);

}  // namespace hyperfusion
