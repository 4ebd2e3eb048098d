#pragma once

#include <set>
#include <string>
#include <vector>

#include "hyperfusion/semisup.hpp"

namespace hyperfusion {

enum class AblationToggle {
  kDropVisual,
  kDropTextual,
  kDropUser,
  kDropGeo,
  kNoPseudo,
  kNoIqr,
  kSingleSplit,
};

// Canonical names: drop-visual, drop-textual, drop-user, drop-geo,
// no-pseudo, no-iqr, single-split.
std::string toggle_name(AblationToggle t);
AblationToggle parse_toggle(const std::string& name);

struct AblationRow {
  std::string variant;
  double src = 0.0;
  double mae = 0.0;
};

// Runs the full pipeline once per variant (the unmodified model first, then
// each toggle in canonical order) and scores it on the evaluation posts.
std::vector<AblationRow> ablation_run(
    const EnsembleConfig& ensemble_config,
    const PseudoLabelConfig& pseudo_config,
    const std::set<AblationToggle>& toggles,
    const std::vector<Post>& train_labeled,
    const std::vector<Post>& train_unlabeled,
    const std::vector<Post>& eval_posts,
    const std::vector<EmbeddingTable>& tables, RngSeed seed);

std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace hyperfusion
