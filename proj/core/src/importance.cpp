#include "hyperfusion/importance.hpp"

#include <cmath>
#include <numeric>

#include "hyperfusion/errors.hpp"
#include "hyperfusion/metrics.hpp"
#include "hyperfusion/parallel.hpp"

namespace hyperfusion {

ImportanceResult permutation_importance(const EnsembleModel& model,
                                        const std::vector<Post>& posts,
                                        const std::vector<EmbeddingTable>& tables,
                                        const std::vector<double>& y,
                                        int repeats, RngSeed seed,
                                        int workers) {
  if (repeats < 1) throw ConfigError("permutation_importance: repeats must be >= 1");
  if (y.size() != posts.size())
    throw DataError("permutation_importance: label length mismatch");

  const std::vector<FeatureMatrix> folds = model.transform_per_fold(posts, tables);
  if (folds.empty()) throw DataError("permutation_importance: untrained model");
  const auto& schema = folds.front();
  const std::size_t n_cols = schema.cols();
  const std::size_t n_rows = schema.rows();

  std::vector<Matrix> base_features;
  base_features.reserve(folds.size());
  for (const auto& f : folds) base_features.push_back(f.data);

  const Vector baseline = model.predict_from_features(base_features);
  std::vector<double> base_pred(baseline.data(), baseline.data() + baseline.size());
  const double baseline_mae = mae(y, base_pred);

  // deltas[col][rep] = permuted MAE - baseline MAE.
  std::vector<std::vector<double>> deltas(n_cols,
                                          std::vector<double>(static_cast<std::size_t>(repeats)));

  parallel_for(n_cols, workers, [&](std::size_t col) {
    std::vector<Matrix> features = base_features;  // task-local copy
    const auto c = static_cast<Eigen::Index>(col);
    for (int rep = 0; rep < repeats; ++rep) {
      std::vector<std::size_t> perm(n_rows);
      std::iota(perm.begin(), perm.end(), 0);
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(rep), col));
      rng.shuffle(perm);

      for (std::size_t f = 0; f < features.size(); ++f)
        for (std::size_t r = 0; r < n_rows; ++r)
          features[f](static_cast<Eigen::Index>(r), c) =
              base_features[f](static_cast<Eigen::Index>(perm[r]), c);

      const Vector pred = model.predict_from_features(features);
      std::vector<double> pv(pred.data(), pred.data() + pred.size());
      deltas[col][static_cast<std::size_t>(rep)] = mae(y, pv) - baseline_mae;
    }
    for (std::size_t f = 0; f < features.size(); ++f)
      features[f].col(c) = base_features[f].col(c);
  });

  ImportanceResult out;
  out.baseline_mae = baseline_mae;
  out.per_column.reserve(n_cols);
  for (std::size_t col = 0; col < n_cols; ++col) {
    FeatureImportance fi;
    fi.name = schema.col_names[col];
    double mean = 0.0;
    for (double d : deltas[col]) mean += d;
    mean /= static_cast<double>(repeats);
    double var = 0.0;
    for (double d : deltas[col]) var += (d - mean) * (d - mean);
    var /= static_cast<double>(repeats);
    fi.importance = mean;
    fi.std_over_repeats = std::sqrt(var);
    out.per_column.push_back(std::move(fi));
  }

  for (const auto& [block, range] : schema.block_spans) {
    FeatureImportance fi;
    fi.name = block;
    std::vector<double> block_rep(static_cast<std::size_t>(repeats), 0.0);
    for (std::size_t col = range.begin; col < range.end; ++col)
      for (int rep = 0; rep < repeats; ++rep)
        block_rep[static_cast<std::size_t>(rep)] += deltas[col][static_cast<std::size_t>(rep)];
    double mean = 0.0;
    for (double d : block_rep) mean += d;
    mean /= static_cast<double>(repeats);
    double var = 0.0;
    for (double d : block_rep) var += (d - mean) * (d - mean);
    var /= static_cast<double>(repeats);
    fi.importance = mean;
    fi.std_over_repeats = std::sqrt(var);
    out.per_block.push_back(std::move(fi));
  }
  return out;
}

}  // namespace hyperfusion
