#include "hyperfusion/semisup.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "hyperfusion/errors.hpp"

namespace hyperfusion {

Vector confidence_scores(const Matrix& member_predictions) {
  const auto rows = member_predictions.rows();
  const auto members = member_predictions.cols();
  if (members < 2)
    throw DataError("confidence_scores: degenerate confidence, need K*N >= 2 "
                    "member predictions per row");
  Vector out(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mean = member_predictions.row(r).mean();
    const double var =
        (member_predictions.row(r).array() - mean).square().sum() /
        static_cast<double>(members);
    out(r) = -std::sqrt(var);
  }
  return out;
}

PseudoSelection select_pseudo(const Vector& confidences,
                              const Vector& predictions,
                              const PseudoLabelConfig& config) {
  if (confidences.size() != predictions.size())
    throw DataError("select_pseudo: length mismatch");
  PseudoSelection sel;
  sel.weight = config.sample_weight;
  const auto n = confidences.size();
  if (n == 0) return sel;  // empty pool is a valid, empty selection
  if (!confidences.allFinite())
    throw DataError("select_pseudo: non-finite confidence");

  sel.confidence_mean = confidences.mean();
  const double var = (confidences.array() - sel.confidence_mean).square().sum() /
                     static_cast<double>(n);
  sel.confidence_std = std::sqrt(var);
  sel.tau = sel.confidence_mean + config.alpha * sel.confidence_std;

  for (Eigen::Index i = 0; i < n; ++i) {
    if (confidences(i) >= sel.tau) {
      sel.rows.push_back(static_cast<std::size_t>(i));
      sel.labels.push_back(predictions(i));
    }
  }
  return sel;
}

std::string PseudoLabelReport::to_jsonl() const {
  std::string out;
  for (const auto& it : iterations) {
    nlohmann::json j;
    j["iteration"] = it.iteration;
    j["selected"] = it.selected;
    j["tau"] = it.tau;
    j["confidence_mean"] = it.confidence_mean;
    j["confidence_std"] = it.confidence_std;
    j["val_src_before"] = it.val_src_before;
    j["val_mae_before"] = it.val_mae_before;
    j["val_src_after"] = it.val_src_after;
    j["val_mae_after"] = it.val_mae_after;
    out += j.dump();
    out += '\n';
  }
  return out;
}

PseudoLabelOutput pseudo_label_loop(const std::vector<Post>& labeled_posts,
                                    const std::vector<Post>& unlabeled_posts,
                                    const std::vector<EmbeddingTable>& tables,
                                    const EnsembleConfig& ensemble_config,
                                    const PseudoLabelConfig& pseudo_config,
                                    RngSeed seed) {
  if (labeled_posts.empty())
    throw DataError("pseudo_label_loop: no labeled posts");
  if (pseudo_config.max_iterations < 1)
    throw ConfigError("pseudo_label_loop: max_iterations must be >= 1");
  for (const auto& p : unlabeled_posts)
    if (p.label)
      throw DataError("pseudo_label_loop: post '" + p.post_id +
                      "' in the unlabeled pool carries a label");

  TrainOutput base = train_ensemble(labeled_posts, tables, ensemble_config, seed);

  PseudoLabelOutput out;
  out.report.iterations.push_back(PseudoIterationStats{
      0, 0, 0.0, 0.0, 0.0, base.oof_src, base.oof_mae, base.oof_src,
      base.oof_mae});

  TrainOutput best = std::move(base);
  TrainOutput current;
  const TrainOutput* latest = &best;

  for (int iter = 1; iter < pseudo_config.max_iterations; ++iter) {
    PseudoIterationStats stats;
    stats.iteration = iter;
    stats.val_src_before = latest->oof_src;
    stats.val_mae_before = latest->oof_mae;

    if (unlabeled_posts.empty()) {
      stats.val_src_after = latest->oof_src;
      stats.val_mae_after = latest->oof_mae;
      out.report.iterations.push_back(stats);
      break;
    }

    const Matrix member_preds =
        latest->model.member_predictions(unlabeled_posts, tables);
    const Vector confidences = confidence_scores(member_preds);
    const Vector predictions =
        latest->model.predict(unlabeled_posts, tables);
    const PseudoSelection sel =
        select_pseudo(confidences, predictions, pseudo_config);

    stats.selected = sel.rows.size();
    stats.tau = sel.tau;
    stats.confidence_mean = sel.confidence_mean;
    stats.confidence_std = sel.confidence_std;

    if (sel.rows.empty()) {
      // Retraining with no extra rows reproduces the same model.
      stats.val_src_after = latest->oof_src;
      stats.val_mae_after = latest->oof_mae;
      out.report.iterations.push_back(stats);
      break;
    }

    std::vector<WeightedExample> extra;
    extra.reserve(sel.rows.size());
    for (std::size_t j = 0; j < sel.rows.size(); ++j)
      extra.push_back(WeightedExample{unlabeled_posts[sel.rows[j]],
                                      sel.labels[j], sel.weight});

    current = train_ensemble(labeled_posts, tables, ensemble_config, seed, extra);
    stats.val_src_after = current.oof_src;
    stats.val_mae_after = current.oof_mae;
    out.report.iterations.push_back(stats);

    if (current.oof_mae < best.oof_mae - 1e-6) {
      best = std::move(current);
      latest = &best;
    } else {
      break;  // early stop keeps the best model so far
    }
  }

  out.model = std::move(best.model);
  out.oof_predictions = std::move(best.oof_predictions);
  out.val_src = best.oof_src;
  out.val_mae = best.oof_mae;
  return out;
}

}  // namespace hyperfusion
