#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hyperfusion {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// One social-media record. Optional fields model missing metadata; absent
// means the key was not present in the source file.
struct Post {
  std::string post_id;
  std::string user_id;
  std::int64_t timestamp = 0;  // unix seconds
  std::optional<double> latitude;
  std::optional<double> longitude;
  std::optional<std::int64_t> geo_accuracy;
  std::string caption;
  std::vector<std::string> tags;
  std::optional<std::int64_t> followers;
  std::optional<std::int64_t> following;
  std::optional<std::int64_t> user_post_count;
  std::optional<bool> is_pro;
  std::optional<double> label;
};

// Half-open column range [begin, end).
struct ColumnRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t width() const { return end - begin; }
};

// Dense row-major feature matrix with named columns, aligned post ids and
// per-modality block spans. Immutable by convention after construction.
struct FeatureMatrix {
  std::vector<std::string> ids;
  std::vector<std::string> col_names;
  Matrix data;
  // Block name -> contiguous column range, in construction order.
  std::vector<std::pair<std::string, ColumnRange>> block_spans;

  std::size_t rows() const { return static_cast<std::size_t>(data.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(data.cols()); }

  const ColumnRange* find_block(const std::string& name) const {
    for (const auto& [block, range] : block_spans)
      if (block == name) return &range;
    return nullptr;
  }
};

// Build a single-block matrix. Column names become "<block>.<name>" so a
// modality ablation is a column-range drop.
FeatureMatrix make_block(const std::string& block,
                         std::vector<std::string> ids,
                         const std::vector<std::string>& col_names,
                         Matrix data);

// Horizontal concatenation of blocks sharing one id order. The result's
// block_spans records each source range in input order. Throws DataError on
// id mismatch or duplicate column names, naming the offending block.
FeatureMatrix concat_blocks(const std::vector<FeatureMatrix>& blocks);

}  // namespace hyperfusion
