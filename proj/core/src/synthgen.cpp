#include "hyperfusion/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hyperfusion/errors.hpp"
#include "hyperfusion/metrics.hpp"

namespace hyperfusion {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::size_t kGloveDim = 16;
constexpr std::int64_t kEpochStart = 1420070400;   // 2015-01-01T00:00Z
constexpr std::int64_t kWindowSeconds = 41990400;  // ~16 months

double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::string padded_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%06zu", prefix, i);
  return buf;
}

const char* kLexicon[] = {
    "sunset", "coffee", "city",   "beach",  "vibes",  "morning", "travel",
    "light",  "friends", "street", "golden", "quiet",  "work",    "home",
    "spring", "winter", "food",   "ocean",  "forest", "night",   "rain",
    "sun",    "roadtrip", "studio", "museum", "garden", "market",  "river"};
constexpr std::size_t kLexiconSize = sizeof(kLexicon) / sizeof(kLexicon[0]);

void validate(const SynthConfig& c) {
  if (c.n_posts == 0 || c.n_users == 0 || c.n_locations == 0)
    throw ConfigError("synth: counts must be positive");
  if (c.visual_dim < 1 || c.text_dim < 1 || c.tag_vocab < 1)
    throw ConfigError("synth: dims must be >= 1");
  if (!(c.labeled_fraction > 0.0) || c.labeled_fraction > 1.0)
    throw ConfigError("synth: labeled_fraction must be in (0, 1]");
  for (double e : {c.user_effect, c.visual_effect, c.text_effect,
                   c.temporal_effect, c.coherence_effect, c.noise_std,
                   c.label_shift, c.label_scale})
    if (!std::isfinite(e)) throw ConfigError("synth: non-finite parameter");
  if (c.coherence_effect != 0.0 && c.visual_dim != c.text_dim)
    throw ConfigError(
        "synth: coherence planting needs visual_dim == text_dim");
}

}  // namespace

SynthDataset generate(const SynthConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);

  SynthDataset out;
  const std::size_t n = cfg.n_posts;

  // Planted structure: one informative axis per embedding space and a shared
  // direction carrying cross-modal coherence.
  const std::size_t planted_visual = rng.below(cfg.visual_dim);
  const std::size_t planted_text = rng.below(cfg.text_dim);
  Vector coherence_dir(static_cast<Eigen::Index>(cfg.visual_dim));
  for (Eigen::Index d = 0; d < coherence_dir.size(); ++d)
    coherence_dir(d) = rng.normal();
  coherence_dir.normalize();

  // Users: latent quality drives follower counts, activity, and tag taste.
  struct UserRow {
    std::string id;
    double quality;
    std::int64_t followers, following, post_count;
    bool is_pro;
    std::size_t tag_center;
  };
  std::vector<UserRow> users;
  users.reserve(cfg.n_users);
  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    UserRow row;
    row.id = padded_id("u", u);
    row.quality = rng.normal();
    row.followers =
        std::llround(std::exp(4.0 + 1.1 * row.quality + 0.25 * rng.normal()));
    row.following = std::llround(std::exp(3.5 + 0.4 * rng.normal()));
    row.post_count =
        std::llround(std::exp(2.5 + 0.3 * row.quality + 0.4 * rng.normal()));
    row.is_pro = row.quality > 1.0;
    row.tag_center = static_cast<std::size_t>(
        std::min<double>(static_cast<double>(cfg.tag_vocab) - 1.0,
                         std::floor(normal_cdf(row.quality) *
                                    static_cast<double>(cfg.tag_vocab))));
    out.truth.user_quality[row.id] = row.quality;
    users.push_back(std::move(row));
  }

  struct LocationRow {
    double lat, lon;
  };
  std::vector<LocationRow> locations;
  locations.reserve(cfg.n_locations);
  for (std::size_t l = 0; l < cfg.n_locations; ++l)
    locations.push_back(
        {rng.uniform(-59.95, 59.95), rng.uniform(-179.95, 179.95)});

  Matrix visual(static_cast<Eigen::Index>(n),
                static_cast<Eigen::Index>(cfg.visual_dim));
  Matrix text(static_cast<Eigen::Index>(n),
              static_cast<Eigen::Index>(cfg.text_dim));
  std::vector<std::string> post_ids;
  post_ids.reserve(n);

  out.posts.reserve(n);
  out.truth.latent.reserve(n);
  const double half_normal_mean = std::sqrt(2.0 / kPi);

  for (std::size_t p = 0; p < n; ++p) {
    const UserRow& user = users[rng.below(cfg.n_users)];
    const LocationRow& loc = locations[rng.below(cfg.n_locations)];

    Post post;
    post.post_id = padded_id("p", p);
    post.user_id = user.id;
    post.timestamp =
        kEpochStart + static_cast<std::int64_t>(
                          rng.below(static_cast<std::uint64_t>(kWindowSeconds)));
    post.latitude = loc.lat + (rng.uniform() - 0.5) * 0.08;
    post.longitude = loc.lon + (rng.uniform() - 0.5) * 0.08;
    post.geo_accuracy = static_cast<std::int64_t>(1 + rng.below(16));
    post.followers = user.followers;
    post.following = user.following;
    post.user_post_count = user.post_count;
    post.is_pro = user.is_pro;

    const double beta = rng.normal();        // visual latent
    const double gamma = rng.normal();       // textual latent
    const double alpha = std::abs(rng.normal());  // coherence latent

    // Tags cluster around the user's taste; their index carries quality.
    const std::size_t tag_count = 1 + rng.below(4);
    for (std::size_t t = 0; t < tag_count; ++t) {
      const auto offset = static_cast<long long>(rng.below(7)) - 3;
      const auto idx = static_cast<std::size_t>(
          ((static_cast<long long>(user.tag_center) + offset) %
               static_cast<long long>(cfg.tag_vocab) +
           static_cast<long long>(cfg.tag_vocab)) %
          static_cast<long long>(cfg.tag_vocab));
      const std::string tag = padded_id("tag", idx);
      if (std::find(post.tags.begin(), post.tags.end(), tag) == post.tags.end())
        post.tags.push_back(tag);
    }

    // Caption length tracks the textual latent.
    const auto word_target = static_cast<std::size_t>(
        2 + std::floor(std::exp(1.1 + 0.45 * gamma)));
    std::string caption;
    for (std::size_t wdx = 0; wdx < word_target; ++wdx) {
      if (!caption.empty()) caption += ' ';
      std::string word = kLexicon[rng.below(kLexiconSize)];
      const std::uint64_t decoration = rng.below(12);
      if (decoration == 0)
        word = "#" + word;
      else if (decoration == 1)
        word[0] = static_cast<char>(word[0] - 'a' + 'A');
      else if (decoration == 2)
        word += "2015";
      caption += word;
    }
    post.caption = std::move(caption);

    for (Eigen::Index dim = 0; dim < visual.cols(); ++dim)
      visual(static_cast<Eigen::Index>(p), dim) =
          0.55 * rng.normal() +
          (static_cast<std::size_t>(dim) == planted_visual ? 1.3 * beta : 0.0) +
          (cfg.coherence_effect != 0.0 ? 0.9 * alpha * coherence_dir(dim) : 0.0);
    for (Eigen::Index dim = 0; dim < text.cols(); ++dim)
      text(static_cast<Eigen::Index>(p), dim) =
          0.55 * rng.normal() +
          (static_cast<std::size_t>(dim) == planted_text ? 1.2 * gamma : 0.0) +
          (cfg.coherence_effect != 0.0 ? 0.9 * alpha * coherence_dir(dim) : 0.0);

    const double hour_signal =
        std::sin(2.0 * kPi *
                 static_cast<double>(post.timestamp % 86400) / 86400.0);

    const double latent = cfg.user_effect * user.quality +
                          cfg.visual_effect * beta + cfg.text_effect * gamma +
                          cfg.temporal_effect * hour_signal +
                          cfg.coherence_effect * (alpha - half_normal_mean);
    out.truth.latent.push_back(latent);

    const double noisy = latent + cfg.noise_std * rng.normal();
    post.label = cfg.label_shift + cfg.label_scale * softplus(noisy);

    post_ids.push_back(post.post_id);
    out.posts.push_back(std::move(post));
  }

  // Tag vectors: a little index gradient plus noise, so pooled tag features
  // echo user taste.
  std::vector<std::string> tag_ids;
  tag_ids.reserve(cfg.tag_vocab);
  Matrix glove(static_cast<Eigen::Index>(cfg.tag_vocab),
               static_cast<Eigen::Index>(kGloveDim));
  for (std::size_t t = 0; t < cfg.tag_vocab; ++t) {
    tag_ids.push_back(padded_id("tag", t));
    const double gradient =
        cfg.tag_vocab > 1
            ? 2.0 * (static_cast<double>(t) /
                         static_cast<double>(cfg.tag_vocab - 1) -
                     0.5)
            : 0.0;
    for (Eigen::Index dim = 0; dim < glove.cols(); ++dim)
      glove(static_cast<Eigen::Index>(t), dim) =
          0.3 * rng.normal() + (dim == 0 ? 1.5 * gradient : 0.0);
  }

  // Label visibility: exactly floor(labeled_fraction * n) posts keep labels.
  const auto labeled_count = static_cast<std::size_t>(
      std::floor(cfg.labeled_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  for (std::size_t i = labeled_count; i < n; ++i)
    out.posts[order[i]].label.reset();

  out.tables.push_back(
      make_embedding_table(post_ids, std::move(visual), "visual_clip"));
  out.tables.push_back(
      make_embedding_table(post_ids, std::move(text), "text_clip"));
  out.tables.push_back(
      make_embedding_table(tag_ids, std::move(glove), "tags_glove"));

  out.truth.planted_columns["visual"] = {planted_visual};
  out.truth.planted_columns["textual"] = {planted_text};
  return out;
}

double oracle_src_bound(std::span<const double> latent,
                        std::span<const double> labels) {
  return spearman_src(latent, labels);
}

}  // namespace hyperfusion
