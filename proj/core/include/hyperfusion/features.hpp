#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hyperfusion/types.hpp"

namespace hyperfusion {

// ---------------------------------------------------------------------------
// Statistical text features
// ---------------------------------------------------------------------------

inline constexpr std::size_t kTextStatCount = 7;

const std::array<std::string, kTextStatCount>& text_stat_names();

// char_count counts UTF-8 code points; word_count splits on whitespace;
// digit/uppercase ratios are ASCII-class counts over code points; the
// hashtag count is caption tokens starting with '#'. Empty text is valid.
std::array<double, kTextStatCount> text_stats(const std::string& caption,
                                              const std::vector<std::string>& tags);

// ---------------------------------------------------------------------------
// Temporal encodings
// ---------------------------------------------------------------------------

inline constexpr std::size_t kTemporalCount = 7;

const std::array<std::string, kTemporalCount>& temporal_names();

// Cyclic sin/cos pairs for hour of day, day of week and month, plus the raw
// day index since the epoch. Requires timestamp >= 0.
std::array<double, kTemporalCount> temporal_features(std::int64_t timestamp);

// ---------------------------------------------------------------------------
// Cross-modal coherence
// ---------------------------------------------------------------------------

// Cosine similarity in [-1, 1]; zero vector on either side maps to 0 so
// imputed-missing embeddings stay neutral. Throws on dimension mismatch.
double cross_modal_similarity(const Vector& v, const Vector& t);

// ---------------------------------------------------------------------------
// Column standardization
// ---------------------------------------------------------------------------

struct ScalerModel {
  Vector means;
  Vector stds;                         // population std, floored at 1e-12
  std::vector<std::uint8_t> constant;  // floored columns map to exactly 0
};

ScalerModel fit_scaler(const Matrix& X);
Matrix apply_scaler(const ScalerModel& model, const Matrix& X);

// ---------------------------------------------------------------------------
// IQR outlier filter
// ---------------------------------------------------------------------------

// Linear-interpolation quantile at position (n-1)*q over sorted values
// (the type-7 rule).
double quantile_type7(const std::vector<double>& sorted_values, double q);

// Keep indicator for labels within [Q1 - m*IQR, Q3 + m*IQR]. Quartile
// conventions change keep-sets at small n, so the rule is pinned to type-7.
// Requires at least 4 labels. Never applied to validation or test rows.
std::vector<std::uint8_t> iqr_filter(const std::vector<double>& labels,
                                     double multiplier = 1.5);

}  // namespace hyperfusion
