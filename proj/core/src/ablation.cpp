#include "hyperfusion/ablation.hpp"

#include <cstdio>

#include "hyperfusion/errors.hpp"
#include "hyperfusion/metrics.hpp"

namespace hyperfusion {

std::string toggle_name(AblationToggle t) {
  switch (t) {
    case AblationToggle::kDropVisual: return "drop-visual";
    case AblationToggle::kDropTextual: return "drop-textual";
    case AblationToggle::kDropUser: return "drop-user";
    case AblationToggle::kDropGeo: return "drop-geo";
    case AblationToggle::kNoPseudo: return "no-pseudo";
    case AblationToggle::kNoIqr: return "no-iqr";
    case AblationToggle::kSingleSplit: return "single-split";
  }
  return "unknown";
}

AblationToggle parse_toggle(const std::string& name) {
  for (AblationToggle t :
       {AblationToggle::kDropVisual, AblationToggle::kDropTextual,
        AblationToggle::kDropUser, AblationToggle::kDropGeo,
        AblationToggle::kNoPseudo, AblationToggle::kNoIqr,
        AblationToggle::kSingleSplit})
    if (toggle_name(t) == name) return t;
  throw ConfigError("ablation: unknown toggle '" + name + "'");
}

namespace {

AblationRow run_variant(const std::string& name,
                        const EnsembleConfig& ensemble_config,
                        const PseudoLabelConfig& pseudo_config,
                        const std::vector<Post>& train_labeled,
                        const std::vector<Post>& train_unlabeled,
                        const std::vector<Post>& eval_posts,
                        const std::vector<double>& eval_labels,
                        const std::vector<EmbeddingTable>& tables,
                        RngSeed seed) {
  const PseudoLabelOutput trained = pseudo_label_loop(
      train_labeled, train_unlabeled, tables, ensemble_config, pseudo_config, seed);
  const Vector pred = trained.model.predict(eval_posts, tables);
  std::vector<double> pv(pred.data(), pred.data() + pred.size());

  AblationRow row;
  row.variant = name;
  row.mae = mae(eval_labels, pv);
  row.src = spearman_src(eval_labels, pv);
  return row;
}

}  // namespace

std::vector<AblationRow> ablation_run(
    const EnsembleConfig& ensemble_config,
    const PseudoLabelConfig& pseudo_config,
    const std::set<AblationToggle>& toggles,
    const std::vector<Post>& train_labeled,
    const std::vector<Post>& train_unlabeled,
    const std::vector<Post>& eval_posts,
    const std::vector<EmbeddingTable>& tables, RngSeed seed) {
  std::vector<double> eval_labels;
  eval_labels.reserve(eval_posts.size());
  for (const auto& p : eval_posts) {
    if (!p.label)
      throw DataError("ablation: evaluation post '" + p.post_id +
                      "' has no label");
    eval_labels.push_back(*p.label);
  }

  std::vector<AblationRow> rows;
  rows.push_back(run_variant("full", ensemble_config, pseudo_config,
                             train_labeled, train_unlabeled, eval_posts,
                             eval_labels, tables, seed));

  for (AblationToggle t : toggles) {
    EnsembleConfig ec = ensemble_config;
    PseudoLabelConfig pc = pseudo_config;
    switch (t) {
      case AblationToggle::kDropVisual: ec.features.visual = false; break;
      case AblationToggle::kDropTextual: ec.features.textual = false; break;
      case AblationToggle::kDropUser: ec.features.user = false; break;
      case AblationToggle::kDropGeo: ec.features.spatial = false; break;
      case AblationToggle::kNoPseudo: pc.max_iterations = 1; break;
      case AblationToggle::kNoIqr: ec.iqr_enabled = false; break;
      case AblationToggle::kSingleSplit: ec.single_split = true; break;
    }
    rows.push_back(run_variant(toggle_name(t), ec, pc, train_labeled,
                               train_unlabeled, eval_posts, eval_labels, tables,
                               seed));
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "variant,src,mae\n";
  char buf[128];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f\n", row.variant.c_str(),
                  row.src, row.mae);
    out += buf;
  }
  return out;
}

}  // namespace hyperfusion
