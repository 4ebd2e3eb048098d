#include "hyperfusion/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hyperfusion/errors.hpp"
#include "hyperfusion/features.hpp"
#include "hyperfusion/metrics.hpp"
#include "hyperfusion/parallel.hpp"
#include <limits>

#include "hyperfusion/version.hpp"

namespace hyperfusion {

FoldPlan make_folds(std::size_t n, int k, RngSeed seed,
                    const std::vector<double>* stratify_labels) {
  if (k < 2) throw ConfigError("make_folds: K must be at least 2");
  if (n < static_cast<std::size_t>(k))
    throw DataError("make_folds: fold error, n=" + std::to_string(n) +
                    " < K=" + std::to_string(k));
  if (stratify_labels && stratify_labels->size() != n)
    throw DataError("make_folds: stratification label length mismatch");

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  if (!stratify_labels) {
    rng.shuffle(order);
  } else {
    // Label-decile stratification: sort by label, shuffle within each
    // decile bucket, then deal round-robin so every fold spans the range.
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double la = (*stratify_labels)[a], lb = (*stratify_labels)[b];
      if (la != lb) return la < lb;
      return a < b;
    });
    std::vector<std::size_t> shuffled;
    shuffled.reserve(n);
    for (std::size_t bucket = 0; bucket < 10; ++bucket) {
      const std::size_t lo = bucket * n / 10;
      const std::size_t hi = (bucket + 1) * n / 10;
      std::vector<std::size_t> group(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                     order.begin() + static_cast<std::ptrdiff_t>(hi));
      rng.shuffle(group);
      shuffled.insert(shuffled.end(), group.begin(), group.end());
    }
    order = std::move(shuffled);
  }

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    plan.assignments[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  return plan;
}

namespace {

double weight_score(const Matrix& preds, const Vector& y, const Vector& w,
                    WeightMetric metric) {
  const Vector combo = preds.transpose() * w;
  std::vector<double> yv(y.data(), y.data() + y.size());
  std::vector<double> cv(combo.data(), combo.data() + combo.size());
  if (metric == WeightMetric::kMae) return mae(yv, cv);
  try {
    return -spearman_src(yv, cv);  // minimize negative SRC
  } catch (const DataError&) {
    return 2.0;  // constant predictions rank below any real correlation
  }
}

double dist_to_uniform(const Vector& w) {
  const double u = 1.0 / static_cast<double>(w.size());
  return (w.array() - u).matrix().squaredNorm();
}

}  // namespace

Vector optimize_weights(const Matrix& member_preds, const Vector& y,
                        WeightMetric metric) {
  const auto n_members = member_preds.rows();
  const auto n_val = member_preds.cols();
  if (n_members < 1) throw DataError("optimize_weights: need at least 1 member");
  if (n_val < 2) throw DataError("optimize_weights: need at least 2 validation rows");
  if (y.size() != n_val)
    throw DataError("optimize_weights: label length mismatch");
  if (!member_preds.allFinite())
    throw DataError("optimize_weights: input error, non-finite predictions");

  constexpr double kImprove = 1e-12;
  const Vector uniform = Vector::Constant(n_members, 1.0 / static_cast<double>(n_members));

  Vector best = uniform;
  double best_score = weight_score(member_preds, y, best, metric);
  double best_dist = dist_to_uniform(best);

  auto consider = [&](const Vector& cand) {
    const double score = weight_score(member_preds, y, cand, metric);
    if (score < best_score - kImprove) {
      best = cand;
      best_score = score;
      best_dist = dist_to_uniform(cand);
      return true;
    }
    if (std::abs(score - best_score) <= kImprove) {
      const double dist = dist_to_uniform(cand);
      if (dist < best_dist - 1e-15) {
        best = cand;
        best_score = std::min(best_score, score);
        best_dist = dist;
        return true;
      }
    }
    return false;
  };

  // Pure single-member vectors are always in the search space, forcing the
  // result to match or beat every individual member.
  for (Eigen::Index i = 0; i < n_members; ++i) {
    Vector pure = Vector::Zero(n_members);
    pure(i) = 1.0;
    consider(pure);
  }

  if (n_members > 1) {
    const double steps[] = {0.1, 0.05, 0.025, 0.0125, 1.0 / 160.0};
    for (double step : steps) {
      bool improved = true;
      while (improved) {
        improved = false;
        for (Eigen::Index to = 0; to < n_members; ++to) {
          for (Eigen::Index from = 0; from < n_members; ++from) {
            if (to == from) continue;
            const double move = std::min(step, best(from));
            if (move <= 1e-15) continue;
            Vector cand = best;
            cand(from) -= move;
            cand(to) += move;
            if (cand(from) < 1e-15) cand(from) = 0.0;
            if (consider(cand)) improved = true;
          }
        }
      }
    }
  }

  best = best.cwiseMax(0.0);
  best /= best.sum();
  return best;
}

namespace {

std::vector<MemberKind> enabled_members(const MemberConfig& cfg) {
  std::vector<MemberKind> kinds;
  if (cfg.gbdt) kinds.push_back(MemberKind::kGbdt);
  if (cfg.mlp) kinds.push_back(MemberKind::kMlp);
  if (cfg.ridge) kinds.push_back(MemberKind::kRidge);
  if (kinds.empty()) throw ConfigError("ensemble: no members enabled");
  return kinds;
}

Regressor fit_member(MemberKind kind, const FeatureMatrix& x, const Vector& y,
                     const EnsembleConfig& cfg, RngSeed seed, const Vector* w) {
  switch (kind) {
    case MemberKind::kGbdt:
      return gbdt_fit(x.data, y, cfg.members.gbdt_params, cfg.huber, seed, w);
    case MemberKind::kMlp: {
      MlpParams params = cfg.members.mlp_params;
      params.batch = std::min<std::size_t>(params.batch,
                                           static_cast<std::size_t>(x.data.rows()));
      return mlp_fit(x.data, y, x.block_spans, params, cfg.huber, seed, w);
    }
    case MemberKind::kRidge:
      return ridge_fit(x.data, y, cfg.members.ridge_l2, w);
  }
  throw InternalError("ensemble: unknown member kind");
}

struct FoldIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

std::vector<FoldIndices> plan_indices(const std::vector<int>& assignments, int k) {
  std::vector<FoldIndices> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < assignments.size(); ++i)
    for (int f = 0; f < k; ++f) {
      if (assignments[i] == f)
        folds[static_cast<std::size_t>(f)].val.push_back(i);
      else
        folds[static_cast<std::size_t>(f)].train.push_back(i);
    }
  return folds;
}

}  // namespace

TrainOutput train_ensemble(const std::vector<Post>& labeled_posts,
                           const std::vector<EmbeddingTable>& tables,
                           const EnsembleConfig& config, RngSeed seed,
                           const std::vector<WeightedExample>& extra) {
  const std::size_t n = labeled_posts.size();
  if (n == 0) throw DataError("train_ensemble: no labeled posts");
  std::vector<double> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!labeled_posts[i].label)
      throw DataError("train_ensemble: post '" + labeled_posts[i].post_id +
                      "' has no label");
    labels[i] = *labeled_posts[i].label;
  }

  const std::vector<MemberKind> kinds = enabled_members(config.members);
  const std::size_t n_members = kinds.size();

  // Fold layout: K-fold cross-validation, or one holdout split when
  // single_split is set.
  std::vector<int> assignments;
  int k_folds = 0;
  if (config.single_split) {
    k_folds = 1;
    assignments.assign(n, -1);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    const auto holdout = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::floor(config.holdout_fraction * static_cast<double>(n))));
    if (holdout >= n)
      throw DataError("train_ensemble: holdout fraction leaves no training rows");
    for (std::size_t i = 0; i < holdout; ++i) assignments[order[i]] = 0;
  } else {
    FoldPlan plan = make_folds(n, config.k_folds, seed,
                               config.stratified ? &labels : nullptr);
    assignments = plan.assignments;
    k_folds = plan.k;
  }

  std::vector<FoldIndices> folds;
  if (config.single_split) {
    FoldIndices fi;
    for (std::size_t i = 0; i < n; ++i)
      (assignments[i] == 0 ? fi.val : fi.train).push_back(i);
    folds.push_back(std::move(fi));
  } else {
    folds = plan_indices(assignments, k_folds);
  }

  EnsembleModel model;
  model.metric_used = config.metric;
  model.seed = seed;
  model.member_kinds = kinds;
  model.folds.resize(folds.size());

  struct FoldWork {
    std::vector<Post> train_posts;
    Vector train_y_std;       // standardized training labels
    Vector train_weights;
    std::vector<Post> val_posts;
    Vector val_y;             // original scale
    FeatureMatrix train_x;
    FeatureMatrix val_x;
  };
  std::vector<FoldWork> work(folds.size());

  // Phase 1: per-fold preprocessing (IQR filter, pipeline, label scaler).
  parallel_for(folds.size(), config.workers, [&](std::size_t f) {
    const auto& fi = folds[f];
    FoldWork& fw = work[f];
    FoldState& state = model.folds[f];

    std::vector<double> train_labels;
    train_labels.reserve(fi.train.size());
    for (std::size_t i : fi.train) train_labels.push_back(labels[i]);

    std::vector<std::size_t> kept = fi.train;
    if (config.iqr_enabled && train_labels.size() >= 4) {
      const auto keep = iqr_filter(train_labels, config.iqr_multiplier);
      kept.clear();
      for (std::size_t j = 0; j < fi.train.size(); ++j)
        if (keep[j]) kept.push_back(fi.train[j]);
    }
    if (kept.empty())
      throw DataError("train_ensemble: fold " + std::to_string(f) +
                      " has no training rows after IQR filtering");

    fw.train_posts.reserve(kept.size() + extra.size());
    std::vector<double> kept_labels;
    kept_labels.reserve(kept.size());
    for (std::size_t i : kept) {
      fw.train_posts.push_back(labeled_posts[i]);
      kept_labels.push_back(labels[i]);
    }

    state.pipeline = FeaturePipeline::fit(fw.train_posts, tables, config.features,
                                          derive_seed(seed, f, 0xF17));

    double mean = 0.0;
    for (double v : kept_labels) mean += v;
    mean /= static_cast<double>(kept_labels.size());
    double var = 0.0;
    for (double v : kept_labels) var += (v - mean) * (v - mean);
    var /= static_cast<double>(kept_labels.size());
    state.label_mean = mean;
    state.label_std = std::max(std::sqrt(var), 1e-12);

    // Pseudo-labeled rows join training only, after the preprocessing fit.
    std::vector<Post> all_train = fw.train_posts;
    fw.train_y_std.resize(static_cast<Eigen::Index>(kept.size() + extra.size()));
    fw.train_weights.resize(fw.train_y_std.size());
    for (std::size_t j = 0; j < kept_labels.size(); ++j) {
      fw.train_y_std(static_cast<Eigen::Index>(j)) =
          (kept_labels[j] - state.label_mean) / state.label_std;
      fw.train_weights(static_cast<Eigen::Index>(j)) = 1.0;
    }
    for (std::size_t e = 0; e < extra.size(); ++e) {
      all_train.push_back(extra[e].post);
      fw.train_y_std(static_cast<Eigen::Index>(kept.size() + e)) =
          (extra[e].label - state.label_mean) / state.label_std;
      fw.train_weights(static_cast<Eigen::Index>(kept.size() + e)) =
          extra[e].weight;
    }
    fw.train_x = state.pipeline.transform(all_train, tables);

    fw.val_posts.reserve(fi.val.size());
    fw.val_y.resize(static_cast<Eigen::Index>(fi.val.size()));
    for (std::size_t j = 0; j < fi.val.size(); ++j) {
      fw.val_posts.push_back(labeled_posts[fi.val[j]]);
      fw.val_y(static_cast<Eigen::Index>(j)) = labels[fi.val[j]];
    }
    fw.val_x = state.pipeline.transform(fw.val_posts, tables);
    model.folds[f].members.resize(n_members);
  });

  // Phase 2: member fits, flattened over (fold, member).
  parallel_for(folds.size() * n_members, config.workers, [&](std::size_t task) {
    const std::size_t f = task / n_members;
    const std::size_t m = task % n_members;
    const FoldWork& fw = work[f];
    try {
      model.folds[f].members[m] =
          fit_member(kinds[m], fw.train_x, fw.train_y_std, config,
                     derive_seed(seed, f, m + 1), &fw.train_weights);
    } catch (const Error& e) {
      throw DataError("train_ensemble: fold " + std::to_string(f) + " member " +
                      member_kind_name(kinds[m]) + ": " + e.what());
    }
  });

  // Phase 3: per-fold weight optimization and validation metrics.
  TrainOutput out;
  out.oof_predictions =
      Vector::Constant(static_cast<Eigen::Index>(n),
                       std::numeric_limits<double>::quiet_NaN());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    FoldState& state = model.folds[f];
    const FoldWork& fw = work[f];
    const auto v = static_cast<Eigen::Index>(fw.val_posts.size());

    Matrix member_preds(static_cast<Eigen::Index>(n_members), v);
    state.member_val_mae.resize(n_members);
    for (std::size_t m = 0; m < n_members; ++m) {
      Vector p = predict(state.members[m], fw.val_x.data);
      p = (p.array() * state.label_std + state.label_mean).matrix();
      member_preds.row(static_cast<Eigen::Index>(m)) = p.transpose();
      std::vector<double> yv(fw.val_y.data(), fw.val_y.data() + v);
      std::vector<double> pv(p.data(), p.data() + v);
      state.member_val_mae[m] = mae(yv, pv);
    }

    state.weights = optimize_weights(member_preds, fw.val_y, config.metric);

    const Vector combo = member_preds.transpose() * state.weights;
    std::vector<double> yv(fw.val_y.data(), fw.val_y.data() + v);
    std::vector<double> cv(combo.data(), combo.data() + v);
    state.val_mae = mae(yv, cv);
    try {
      state.val_src = spearman_src(yv, cv);
    } catch (const DataError&) {
      state.val_src = std::numeric_limits<double>::quiet_NaN();
    }
    for (std::size_t j = 0; j < folds[f].val.size(); ++j)
      out.oof_predictions(static_cast<Eigen::Index>(folds[f].val[j])) =
          combo(static_cast<Eigen::Index>(j));
  }

  // Out-of-fold metrics over every row that holds an OOF prediction.
  std::vector<double> oof_y, oof_p;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = out.oof_predictions(static_cast<Eigen::Index>(i));
    if (std::isfinite(p)) {
      oof_y.push_back(labels[i]);
      oof_p.push_back(p);
    }
  }
  out.oof_mae = mae(oof_y, oof_p);
  try {
    out.oof_src = spearman_src(oof_y, oof_p);
  } catch (const DataError&) {
    out.oof_src = std::numeric_limits<double>::quiet_NaN();
  }
  out.model = std::move(model);
  return out;
}

std::vector<FeatureMatrix> EnsembleModel::transform_per_fold(
    const std::vector<Post>& posts,
    const std::vector<EmbeddingTable>& tables) const {
  std::vector<FeatureMatrix> out;
  out.reserve(folds.size());
  for (const auto& fold : folds) out.push_back(fold.pipeline.transform(posts, tables));
  return out;
}

Vector EnsembleModel::predict_from_features(
    const std::vector<Matrix>& fold_features) const {
  if (fold_features.size() != folds.size())
    throw DataError("ensemble predict: fold count mismatch");
  if (folds.empty()) throw DataError("ensemble predict: untrained model");
  const auto rows = fold_features.front().rows();
  Vector acc = Vector::Zero(rows);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const FoldState& fold = folds[f];
    Vector fold_pred = Vector::Zero(rows);
    for (std::size_t m = 0; m < fold.members.size(); ++m) {
      const Vector p = predict(fold.members[m], fold_features[f]);
      fold_pred += fold.weights(static_cast<Eigen::Index>(m)) *
                   (p.array() * fold.label_std + fold.label_mean).matrix();
    }
    acc += fold_pred;
  }
  return acc / static_cast<double>(folds.size());
}

Vector EnsembleModel::predict(const std::vector<Post>& posts,
                              const std::vector<EmbeddingTable>& tables) const {
  std::vector<Matrix> features;
  features.reserve(folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    try {
      features.push_back(folds[f].pipeline.transform(posts, tables).data);
    } catch (const Error& e) {
      throw DataError("ensemble predict: fold " + std::to_string(f) +
                      " pipeline: " + e.what());
    }
  }
  return predict_from_features(features);
}

Matrix EnsembleModel::member_predictions(
    const std::vector<Post>& posts,
    const std::vector<EmbeddingTable>& tables) const {
  const auto rows = static_cast<Eigen::Index>(posts.size());
  const auto n_members = static_cast<Eigen::Index>(member_kinds.size());
  Matrix out(rows, static_cast<Eigen::Index>(folds.size()) * n_members);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const FoldState& fold = folds[f];
    const Matrix x = fold.pipeline.transform(posts, tables).data;
    for (std::size_t m = 0; m < fold.members.size(); ++m) {
      const Vector p = hyperfusion::predict(fold.members[m], x);
      out.col(static_cast<Eigen::Index>(f) * n_members +
              static_cast<Eigen::Index>(m)) =
          (p.array() * fold.label_std + fold.label_mean).matrix();
    }
  }
  return out;
}

void EnsembleModel::save(const std::filesystem::path& path) const {
  std::vector<io::Section> sections;
  io::Writer manifest;
  manifest.u32(static_cast<std::uint32_t>(folds.size()));
  manifest.u32(static_cast<std::uint32_t>(member_kinds.size()));
  for (MemberKind kind : member_kinds)
    manifest.u8(static_cast<std::uint8_t>(kind));
  manifest.u8(static_cast<std::uint8_t>(metric_used));
  manifest.u64(seed.value);
  sections.push_back({"manifest", manifest.take()});

  for (std::size_t f = 0; f < folds.size(); ++f) {
    const FoldState& fold = folds[f];
    io::Writer w;
    fold.pipeline.serialize(w);
    w.f64(fold.label_mean);
    w.f64(fold.label_std);
    w.u32(static_cast<std::uint32_t>(fold.members.size()));
    for (const auto& member : fold.members) serialize_regressor(w, member);
    w.vector(fold.weights);
    w.f64(fold.val_src);
    w.f64(fold.val_mae);
    w.u32(static_cast<std::uint32_t>(fold.member_val_mae.size()));
    for (double v : fold.member_val_mae) w.f64(v);
    sections.push_back({"fold_" + std::to_string(f), w.take()});
  }
  io::write_sections_file(path, "HFE1", kArtifactVersion, sections);
}

EnsembleModel EnsembleModel::load(const std::filesystem::path& path) {
  const auto sections = io::read_sections_file(path, "HFE1", kArtifactVersion);
  const auto* manifest = io::find_section(sections, "manifest");
  if (!manifest) throw DataError("ensemble artifact missing manifest");
  io::Reader mr(manifest->payload);
  const std::uint32_t k = mr.u32();
  const std::uint32_t n_members = mr.u32();

  EnsembleModel model;
  for (std::uint32_t m = 0; m < n_members; ++m)
    model.member_kinds.push_back(static_cast<MemberKind>(mr.u8()));
  model.metric_used = static_cast<WeightMetric>(mr.u8());
  model.seed.value = mr.u64();

  model.folds.resize(k);
  for (std::uint32_t f = 0; f < k; ++f) {
    const auto* s = io::find_section(sections, "fold_" + std::to_string(f));
    if (!s) throw DataError("ensemble artifact missing fold " + std::to_string(f));
    io::Reader r(s->payload);
    FoldState& fold = model.folds[f];
    fold.pipeline = FeaturePipeline::deserialize(r);
    fold.label_mean = r.f64();
    fold.label_std = r.f64();
    const std::uint32_t mc = r.u32();
    fold.members.reserve(mc);
    for (std::uint32_t m = 0; m < mc; ++m)
      fold.members.push_back(deserialize_regressor(r));
    fold.weights = r.vector();
    fold.val_src = r.f64();
    fold.val_mae = r.f64();
    const std::uint32_t vc = r.u32();
    fold.member_val_mae.resize(vc);
    for (std::uint32_t i = 0; i < vc; ++i) fold.member_val_mae[i] = r.f64();
  }
  return model;
}

}  // namespace hyperfusion
