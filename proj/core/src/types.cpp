#include "hyperfusion/types.hpp"

#include <unordered_set>

#include "hyperfusion/errors.hpp"

namespace hyperfusion {

FeatureMatrix make_block(const std::string& block,
                         std::vector<std::string> ids,
                         const std::vector<std::string>& col_names,
                         Matrix data) {
  if (static_cast<std::size_t>(data.rows()) != ids.size())
    throw DataError("block '" + block + "': row count " +
                    std::to_string(data.rows()) + " does not match id count " +
                    std::to_string(ids.size()));
  if (static_cast<std::size_t>(data.cols()) != col_names.size())
    throw DataError("block '" + block + "': column count mismatch");

  FeatureMatrix out;
  out.ids = std::move(ids);
  out.col_names.reserve(col_names.size());
  for (const auto& name : col_names) out.col_names.push_back(block + "." + name);
  out.data = std::move(data);
  out.block_spans.push_back({block, ColumnRange{0, out.col_names.size()}});
  return out;
}

FeatureMatrix concat_blocks(const std::vector<FeatureMatrix>& blocks) {
  if (blocks.empty()) throw DataError("concat_blocks: no blocks given");

  const auto& ids = blocks.front().ids;
  std::size_t total_cols = 0;
  for (const auto& b : blocks) {
    const std::string label =
        b.block_spans.empty() ? std::string("<unnamed>") : b.block_spans.front().first;
    if (b.ids != ids)
      throw DataError("alignment error: block '" + label +
                      "' ids do not match the first block");
    total_cols += b.cols();
  }

  FeatureMatrix out;
  out.ids = ids;
  out.col_names.reserve(total_cols);
  out.data.resize(static_cast<Eigen::Index>(ids.size()),
                  static_cast<Eigen::Index>(total_cols));

  std::unordered_set<std::string> seen;
  seen.reserve(total_cols);
  std::size_t offset = 0;
  for (const auto& b : blocks) {
    for (const auto& name : b.col_names) {
      if (!seen.insert(name).second) {
        const std::string label =
            b.block_spans.empty() ? std::string("<unnamed>") : b.block_spans.front().first;
        throw DataError("alignment error: duplicate column '" + name +
                        "' introduced by block '" + label + "'");
      }
      out.col_names.push_back(name);
    }
    if (b.cols() > 0)
      out.data.middleCols(static_cast<Eigen::Index>(offset),
                          static_cast<Eigen::Index>(b.cols())) = b.data;
    for (const auto& [name, range] : b.block_spans)
      out.block_spans.push_back(
          {name, ColumnRange{offset + range.begin, offset + range.end}});
    offset += b.cols();
  }
  return out;
}

}  // namespace hyperfusion
