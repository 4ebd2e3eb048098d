#include "hyperfusion/features.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "hyperfusion/errors.hpp"

namespace hyperfusion {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

// UTF-8 code points = bytes that are not continuation bytes.
std::size_t utf8_length(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

}  // namespace

const std::array<std::string, kTextStatCount>& text_stat_names() {
  static const std::array<std::string, kTextStatCount> names = {
      "char_count",     "word_count",  "tag_count",    "mean_word_length",
      "digit_ratio",    "uppercase_ratio", "hashtag_count"};
  return names;
}

std::array<double, kTextStatCount> text_stats(
    const std::string& caption, const std::vector<std::string>& tags) {
  const std::size_t chars = utf8_length(caption);

  std::size_t words = 0, hashtags = 0, word_chars = 0;
  std::size_t i = 0;
  while (i < caption.size()) {
    while (i < caption.size() && is_space(caption[i])) ++i;
    if (i >= caption.size()) break;
    const std::size_t start = i;
    while (i < caption.size() && !is_space(caption[i])) ++i;
    ++words;
    const std::string token = caption.substr(start, i - start);
    word_chars += utf8_length(token);
    if (token[0] == '#') ++hashtags;
  }

  std::size_t digits = 0, uppers = 0;
  for (char c : caption) {
    if (c >= '0' && c <= '9') ++digits;
    if (c >= 'A' && c <= 'Z') ++uppers;
  }

  std::array<double, kTextStatCount> out{};
  out[0] = static_cast<double>(chars);
  out[1] = static_cast<double>(words);
  out[2] = static_cast<double>(tags.size());
  out[3] = words > 0 ? static_cast<double>(word_chars) / static_cast<double>(words)
                     : 0.0;
  out[4] = chars > 0 ? static_cast<double>(digits) / static_cast<double>(chars)
                     : 0.0;
  out[5] = chars > 0 ? static_cast<double>(uppers) / static_cast<double>(chars)
                     : 0.0;
  out[6] = static_cast<double>(hashtags);
  return out;
}

const std::array<std::string, kTemporalCount>& temporal_names() {
  static const std::array<std::string, kTemporalCount> names = {
      "hour_sin", "hour_cos", "dow_sin", "dow_cos",
      "month_sin", "month_cos", "day_index"};
  return names;
}

std::array<double, kTemporalCount> temporal_features(std::int64_t timestamp) {
  if (timestamp < 0)
    throw DataError("temporal_features: negative timestamp " +
                    std::to_string(timestamp));
  using namespace std::chrono;

  const std::int64_t second_of_day = timestamp % 86400;
  const std::int64_t day_index = timestamp / 86400;

  const double hour_angle =
      2.0 * kPi * static_cast<double>(second_of_day) / 86400.0;

  const sys_days day{days{day_index}};
  const unsigned dow = weekday{day}.c_encoding();  // 0 = Sunday
  const double dow_angle = 2.0 * kPi * static_cast<double>(dow) / 7.0;

  const year_month_day ymd{day};
  const double month_angle =
      2.0 * kPi * static_cast<double>(unsigned(ymd.month()) - 1) / 12.0;

  return {std::sin(hour_angle), std::cos(hour_angle),
          std::sin(dow_angle),  std::cos(dow_angle),
          std::sin(month_angle), std::cos(month_angle),
          static_cast<double>(day_index)};
}

double cross_modal_similarity(const Vector& v, const Vector& t) {
  if (v.size() != t.size())
    throw DataError("cross_modal_similarity: dimension mismatch " +
                    std::to_string(v.size()) + " vs " + std::to_string(t.size()));
  const double nv = v.norm();
  const double nt = t.norm();
  if (nv == 0.0 || nt == 0.0) return 0.0;
  const double s = v.dot(t) / (nv * nt);
  return std::clamp(s, -1.0, 1.0);
}

ScalerModel fit_scaler(const Matrix& X) {
  const auto rows = X.rows();
  const auto cols = X.cols();
  ScalerModel m;
  m.means =
      rows > 0 ? Vector(X.colwise().mean()) : Vector(Vector::Zero(cols));
  m.stds.resize(cols);
  m.constant.assign(static_cast<std::size_t>(cols), 0);
  constexpr double kFloor = 1e-12;
  for (Eigen::Index c = 0; c < cols; ++c) {
    double var = 0.0;
    if (rows > 0) {
      const double mu = m.means(c);
      var = (X.col(c).array() - mu).square().sum() / static_cast<double>(rows);
    }
    const double sd = std::sqrt(var);
    if (sd <= kFloor) {
      m.stds(c) = kFloor;
      m.constant[static_cast<std::size_t>(c)] = 1;
    } else {
      m.stds(c) = sd;
    }
  }
  return m;
}

Matrix apply_scaler(const ScalerModel& model, const Matrix& X) {
  if (X.cols() != model.means.size())
    throw DataError("apply_scaler: column count mismatch");
  Matrix out(X.rows(), X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    if (model.constant[static_cast<std::size_t>(c)])
      out.col(c).setZero();
    else
      out.col(c) = (X.col(c).array() - model.means(c)) / model.stds(c);
  }
  return out;
}

double quantile_type7(const std::vector<double>& sorted_values, double q) {
  const std::size_t n = sorted_values.size();
  if (n == 0) throw DataError("quantile of empty set");
  if (n == 1) return sorted_values[0];
  const double pos = static_cast<double>(n - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, n - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted_values[lo] + frac * (sorted_values[hi] - sorted_values[lo]);
}

std::vector<std::uint8_t> iqr_filter(const std::vector<double>& labels,
                                     double multiplier) {
  if (labels.size() < 4)
    throw DataError("iqr_filter: degenerate input, need at least 4 labels");
  std::vector<double> sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  const double q1 = quantile_type7(sorted, 0.25);
  const double q3 = quantile_type7(sorted, 0.75);
  const double iqr = q3 - q1;
  // iqr == 0 keeps the interval degenerate at [q1, q3] even for infinite
  // multipliers (inf * 0 would be NaN).
  const double margin = iqr == 0.0 ? 0.0 : multiplier * iqr;
  const double lo = q1 - margin;
  const double hi = q3 + margin;
  std::vector<std::uint8_t> keep(labels.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i)
    keep[i] = (labels[i] >= lo && labels[i] <= hi) ? 1 : 0;
  return keep;
}

}  // namespace hyperfusion
