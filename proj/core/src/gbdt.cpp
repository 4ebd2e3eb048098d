#include "hyperfusion/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hyperfusion/errors.hpp"

namespace hyperfusion {

namespace {

constexpr double kMinGain = 1e-12;

double weighted_median(const Vector& y, const Vector& w) {
  const auto n = y.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return y(a) < y(b); });
  const double total = w.sum();
  const double half = 0.5 * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    cum += w(order[i]);
    if (cum > half) return y(order[i]);
    if (cum == half) {
      // Exact boundary: average with the next value, matching the plain
      // even-count median under unit weights.
      if (i + 1 < order.size()) return 0.5 * (y(order[i]) + y(order[i + 1]));
      return y(order[i]);
    }
  }
  return y(order.back());
}

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  std::size_t left_count = 0;
  double gain = 0.0;
};

// Per-node state: row ids presorted by every feature, so each split scan is
// a single pass and partitioning is stable.
struct NodeWork {
  std::vector<std::vector<std::int32_t>> sorted_rows;  // [feature][position]
  int depth = 0;
  std::int32_t node_id = 0;
};

}  // namespace

Vector GbdtModel::predict(const Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != feature_count)
    throw DataError("gbdt predict: shape error, expected " +
                    std::to_string(feature_count) + " features, got " +
                    std::to_string(x.cols()));
  // Row-major copy so each row is contiguous for the tree walk.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      xr = x;
  Vector out(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double acc = base_score;
    const double* row = xr.data() + r * x.cols();
    for (const auto& tree : trees) acc += tree.predict_row(row);
    out(r) = acc;
  }
  return out;
}

GbdtModel gbdt_fit(const Matrix& x, const Vector& y, const GbdtParams& params,
                   HuberParams huber, RngSeed seed,
                   const Vector* sample_weight) {
  (void)seed;  // exact greedy fitting draws no randomness
  const auto n = x.rows();
  const auto d = x.cols();
  if (n == 0 || d == 0) throw DataError("gbdt: shape error, empty matrix");
  if (y.size() != n) throw DataError("gbdt: shape error, label length mismatch");
  if (params.min_leaf < 1 || params.max_depth < 1 || params.n_trees < 0)
    throw ConfigError("gbdt: invalid parameters");
  if (n < 2 * params.min_leaf)
    throw DataError("gbdt: shape error, need at least 2*min_leaf rows");
  if (!x.allFinite() || !y.allFinite())
    throw DataError("gbdt: non-finite input");

  Vector w = sample_weight ? *sample_weight : Vector(Vector::Ones(n));
  if (w.size() != n) throw DataError("gbdt: weight length mismatch");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(w(i) > 0.0) || !std::isfinite(w(i)))
      throw DataError("gbdt: sample weights must be positive and finite");

  GbdtModel model;
  model.base_score = weighted_median(y, w);
  model.learning_rate = params.learning_rate;
  model.max_depth = params.max_depth;
  model.min_leaf = params.min_leaf;
  model.feature_count = static_cast<std::size_t>(d);
  model.trees.reserve(static_cast<std::size_t>(params.n_trees));

  // Presort once; every tree starts from this ordering.
  std::vector<std::vector<std::int32_t>> presorted(
      static_cast<std::size_t>(d), std::vector<std::int32_t>(static_cast<std::size_t>(n)));
  for (Eigen::Index f = 0; f < d; ++f) {
    auto& ord = presorted[static_cast<std::size_t>(f)];
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&](std::int32_t a, std::int32_t b) {
      const double va = x(a, f), vb = x(b, f);
      if (va != vb) return va < vb;
      return a < b;
    });
  }

  Vector preds = Vector::Constant(n, model.base_score);
  Vector grad(n);  // negative Huber gradient

  const std::size_t min_leaf = static_cast<std::size_t>(params.min_leaf);

  for (int round = 0; round < params.n_trees; ++round) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = y(i) - preds(i);
      grad(i) = std::abs(r) <= huber.delta
                    ? r
                    : (r > 0.0 ? huber.delta : -huber.delta);
    }

    Tree tree;
    tree.nodes.push_back(TreeNode{});

    std::vector<NodeWork> stack;
    stack.push_back(NodeWork{presorted, 0, 0});
    std::vector<std::pair<std::int32_t, double>> leaf_updates;  // row -> delta

    while (!stack.empty()) {
      NodeWork work = std::move(stack.back());
      stack.pop_back();
      const auto& rows0 = work.sorted_rows[0];
      const std::size_t count = rows0.size();

      double sum_g = 0.0, sum_w = 0.0;
      for (std::int32_t r : rows0) {
        sum_g += w(r) * grad(r);
        sum_w += w(r);
      }

      SplitChoice best;
      if (work.depth < params.max_depth && count >= 2 * min_leaf) {
        const double parent_score = sum_g * sum_g / sum_w;
        for (Eigen::Index f = 0; f < d; ++f) {
          const auto& rows = work.sorted_rows[static_cast<std::size_t>(f)];
          double left_g = 0.0, left_w = 0.0;
          for (std::size_t i = 0; i + 1 < count; ++i) {
            const std::int32_t r = rows[i];
            left_g += w(r) * grad(r);
            left_w += w(r);
            const double va = x(r, f);
            const double vb = x(rows[i + 1], f);
            if (va == vb) continue;
            const std::size_t left_count = i + 1;
            if (left_count < min_leaf || count - left_count < min_leaf) continue;
            const double right_g = sum_g - left_g;
            const double right_w = sum_w - left_w;
            const double gain = left_g * left_g / left_w +
                                right_g * right_g / right_w - parent_score;
            // Strict improvement keeps the lowest feature index, then the
            // lowest threshold, on exact ties.
            if (gain > kMinGain && gain > best.gain) {
              double thr = 0.5 * (va + vb);
              if (!(thr < vb)) thr = va;  // rounding guard
              best.found = true;
              best.feature = static_cast<int>(f);
              best.threshold = thr;
              best.left_count = left_count;
              best.gain = gain;
            }
          }
        }
      }

      if (!best.found) {
        const double value = params.learning_rate * (sum_g / sum_w);
        tree.nodes[static_cast<std::size_t>(work.node_id)].value = value;
        for (std::int32_t r : rows0) leaf_updates.emplace_back(r, value);
        continue;
      }

      // Stable partition of every feature's ordering.
      std::vector<std::uint8_t> goes_left(static_cast<std::size_t>(n), 0);
      for (std::int32_t r : work.sorted_rows[static_cast<std::size_t>(best.feature)])
        if (x(r, best.feature) <= best.threshold)
          goes_left[static_cast<std::size_t>(r)] = 1;

      NodeWork left, right;
      left.depth = right.depth = work.depth + 1;
      left.sorted_rows.resize(static_cast<std::size_t>(d));
      right.sorted_rows.resize(static_cast<std::size_t>(d));
      for (Eigen::Index f = 0; f < d; ++f) {
        auto& src = work.sorted_rows[static_cast<std::size_t>(f)];
        auto& lv = left.sorted_rows[static_cast<std::size_t>(f)];
        auto& rv = right.sorted_rows[static_cast<std::size_t>(f)];
        lv.reserve(best.left_count);
        rv.reserve(count - best.left_count);
        for (std::int32_t r : src)
          (goes_left[static_cast<std::size_t>(r)] ? lv : rv).push_back(r);
      }

      const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.push_back(TreeNode{});
      const auto right_id = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.push_back(TreeNode{});
      auto& parent = tree.nodes[static_cast<std::size_t>(work.node_id)];
      parent.feature = best.feature;
      parent.threshold = best.threshold;
      parent.left = left_id;
      parent.right = right_id;
      left.node_id = left_id;
      right.node_id = right_id;
      stack.push_back(std::move(right));
      stack.push_back(std::move(left));
    }

    for (const auto& [r, delta] : leaf_updates) preds(r) += delta;
    model.trees.push_back(std::move(tree));
    model.training_loss.push_back(huber_total(y, preds, huber, &w));
  }

  return model;
}

}  // namespace hyperfusion
