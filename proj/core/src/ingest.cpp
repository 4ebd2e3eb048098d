#include "hyperfusion/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <unordered_set>

#include "hyperfusion/errors.hpp"
#include "hyperfusion/serialize.hpp"

namespace hyperfusion {

using nlohmann::json;

const std::unordered_map<std::string, std::size_t>& EmbeddingTable::index() const {
  if (index_.empty() && !ids.empty()) {
    index_.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) index_.emplace(ids[i], i);
  }
  return index_;
}

EmbeddingTable make_embedding_table(std::vector<std::string> ids, Matrix data,
                                    std::string source_tag) {
  if (ids.size() != static_cast<std::size_t>(data.rows()))
    throw DataError("embedding table '" + source_tag + "': id count " +
                    std::to_string(ids.size()) + " != row count " +
                    std::to_string(data.rows()));
  std::unordered_set<std::string> seen;
  seen.reserve(ids.size());
  for (const auto& id : ids)
    if (!seen.insert(id).second)
      throw DataError("embedding table '" + source_tag + "': duplicate id '" +
                      id + "'");
  if (!data.allFinite())
    throw DataError("embedding table '" + source_tag + "': non-finite entry");
  EmbeddingTable t;
  t.ids = std::move(ids);
  t.data = std::move(data);
  t.source_tag = std::move(source_tag);
  return t;
}

void write_embeddings(const std::filesystem::path& path,
                      const EmbeddingTable& table) {
  io::Writer w;
  w.bytes("PFE1", 4);
  w.u32(static_cast<std::uint32_t>(table.rows()));
  w.u32(static_cast<std::uint32_t>(table.dim()));
  if (table.source_tag.size() > 255)
    throw DataError("source_tag longer than 255 bytes");
  w.u8(static_cast<std::uint8_t>(table.source_tag.size()));
  w.bytes(table.source_tag.data(), table.source_tag.size());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto& id = table.ids[r];
    if (id.size() > 65535) throw DataError("id longer than 65535 bytes");
    w.u16(static_cast<std::uint16_t>(id.size()));
    w.bytes(id.data(), id.size());
    for (std::size_t c = 0; c < table.dim(); ++c)
      w.f32(static_cast<float>(table.data(static_cast<Eigen::Index>(r),
                                          static_cast<Eigen::Index>(c))));
  }
  io::atomic_write_file(path, w.buffer());
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  io::Reader r(io::read_file_bytes(path));
  const char* magic = r.take(4);
  if (std::string(magic, 4) != "PFE1")
    throw DataError("format error at byte offset 0: bad magic in " +
                    path.string());
  const std::uint32_t rows = r.u32();
  const std::uint32_t dim = r.u32();
  const std::uint8_t tag_len = r.u8();
  const char* tag = r.take(tag_len);
  std::string source_tag(tag, tag_len);

  std::vector<std::string> ids;
  ids.reserve(rows);
  Matrix data(rows, dim);
  for (std::uint32_t row = 0; row < rows; ++row) {
    const std::uint16_t id_len = r.u16();
    const char* id = r.take(id_len);
    ids.emplace_back(id, id_len);
    for (std::uint32_t c = 0; c < dim; ++c) {
      const std::size_t value_offset = r.offset();
      const float v = r.f32();
      if (!std::isfinite(v))
        throw DataError("format error at byte offset " +
                        std::to_string(value_offset) + ": non-finite value in " +
                        path.string());
      data(row, c) = static_cast<double>(v);
    }
  }
  if (!r.at_end())
    throw DataError("format error at byte offset " + std::to_string(r.offset()) +
                    ": trailing bytes in " + path.string());
  return make_embedding_table(std::move(ids), std::move(data),
                              std::move(source_tag));
}

namespace {

void validate_post(const Post& p, std::size_t line_no) {
  const std::string where = " (line " + std::to_string(line_no) + ")";
  if (p.post_id.empty()) throw DataError("empty post_id" + where);
  if (p.latitude && (*p.latitude < -90.0 || *p.latitude > 90.0))
    throw DataError("range error: latitude " + std::to_string(*p.latitude) +
                    " outside [-90, 90]" + where);
  if (p.longitude && (*p.longitude < -180.0 || *p.longitude > 180.0))
    throw DataError("range error: longitude " + std::to_string(*p.longitude) +
                    " outside [-180, 180]" + where);
  if (p.label && !std::isfinite(*p.label))
    throw DataError("range error: label not finite" + where);
  auto check_nonneg = [&](const std::optional<std::int64_t>& v,
                          const char* name) {
    if (v && *v < 0)
      throw DataError("range error: " + std::string(name) + " negative" + where);
  };
  check_nonneg(p.followers, "followers");
  check_nonneg(p.following, "following");
  check_nonneg(p.user_post_count, "user_post_count");
}

}  // namespace

std::vector<Post> read_posts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::vector<Post> posts;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("parse error at line " + std::to_string(line_no) + ": " +
                      e.what());
    }
    if (!j.is_object())
      throw DataError("parse error at line " + std::to_string(line_no) +
                      ": expected a JSON object");
    Post p;
    try {
      p.post_id = j.value("post_id", std::string{});
      p.user_id = j.value("user_id", std::string{});
      p.timestamp = j.value("timestamp", std::int64_t{0});
      if (j.contains("latitude")) p.latitude = j["latitude"].get<double>();
      if (j.contains("longitude")) p.longitude = j["longitude"].get<double>();
      if (j.contains("geo_accuracy"))
        p.geo_accuracy = j["geo_accuracy"].get<std::int64_t>();
      p.caption = j.value("caption", std::string{});
      if (j.contains("tags")) p.tags = j["tags"].get<std::vector<std::string>>();
      if (j.contains("followers")) p.followers = j["followers"].get<std::int64_t>();
      if (j.contains("following")) p.following = j["following"].get<std::int64_t>();
      if (j.contains("user_post_count"))
        p.user_post_count = j["user_post_count"].get<std::int64_t>();
      if (j.contains("is_pro")) p.is_pro = j["is_pro"].get<bool>();
      if (j.contains("label")) p.label = j["label"].get<double>();
    } catch (const json::exception& e) {
      throw DataError("parse error at line " + std::to_string(line_no) + ": " +
                      e.what());
    }
    validate_post(p, line_no);
    if (!seen_ids.insert(p.post_id).second)
      throw DataError("duplicate post_id '" + p.post_id + "' at line " +
                      std::to_string(line_no));
    posts.push_back(std::move(p));
  }
  return posts;
}

void write_posts(const std::filesystem::path& path,
                 const std::vector<Post>& posts) {
  std::string out;
  for (const auto& p : posts) {
    json j;
    j["post_id"] = p.post_id;
    j["user_id"] = p.user_id;
    j["timestamp"] = p.timestamp;
    if (p.latitude) j["latitude"] = *p.latitude;
    if (p.longitude) j["longitude"] = *p.longitude;
    if (p.geo_accuracy) j["geo_accuracy"] = *p.geo_accuracy;
    j["caption"] = p.caption;
    j["tags"] = p.tags;
    if (p.followers) j["followers"] = *p.followers;
    if (p.following) j["following"] = *p.following;
    if (p.user_post_count) j["user_post_count"] = *p.user_post_count;
    if (p.is_pro) j["is_pro"] = *p.is_pro;
    if (p.label) j["label"] = *p.label;
    out += j.dump();
    out += '\n';
  }
  io::atomic_write_file(path, out);
}

AlignResult align(const std::vector<Post>& posts,
                  const std::vector<EmbeddingTable>& tables,
                  AlignPolicy policy,
                  const std::vector<std::string>& passthrough_tags) {
  auto passes_through = [&](const EmbeddingTable& t) {
    return std::find(passthrough_tags.begin(), passthrough_tags.end(),
                     t.source_tag) != passthrough_tags.end();
  };
  std::vector<const EmbeddingTable*> keyed;
  for (const auto& t : tables)
    if (!passes_through(t)) keyed.push_back(&t);

  std::vector<std::size_t> kept;
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    bool in_all = true;
    for (const auto* t : keyed)
      if (!t->index().count(posts[i].post_id)) {
        in_all = false;
        break;
      }
    if (in_all)
      kept.push_back(i);
    else if (missing.size() < 10)
      missing.push_back(posts[i].post_id);
  }

  if (policy == AlignPolicy::kRequireAll && kept.size() != posts.size()) {
    std::string msg = "alignment error: posts missing from an embedding table:";
    for (const auto& id : missing) msg += " " + id;
    throw DataError(msg);
  }

  AlignResult out;
  out.dropped_posts = posts.size() - kept.size();
  out.posts.reserve(kept.size());
  for (std::size_t i : kept) out.posts.push_back(posts[i]);
  for (const auto& t : tables) {
    if (passes_through(t)) {
      out.tables.push_back(t);
      continue;
    }
    const auto& idx = t.index();
    EmbeddingTable aligned;
    aligned.source_tag = t.source_tag;
    aligned.ids.reserve(kept.size());
    aligned.data.resize(static_cast<Eigen::Index>(kept.size()),
                        static_cast<Eigen::Index>(t.dim()));
    Eigen::Index row = 0;
    for (std::size_t i : kept) {
      const auto& id = posts[i].post_id;
      aligned.ids.push_back(id);
      aligned.data.row(row++) = t.data.row(static_cast<Eigen::Index>(idx.at(id)));
    }
    out.tables.push_back(std::move(aligned));
  }
  return out;
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::optional<double> numeric_fill(const std::vector<double>& present,
                                   const ImputationPolicy& policy,
                                   const char* field) {
  if (policy.numeric_rule == ImputationPolicy::NumericRule::kConstant)
    return policy.numeric_constant;
  if (present.empty()) return std::nullopt;  // caught on first use of `field`
  (void)field;
  return median_of(present);
}

}  // namespace

ImputationStats fit_imputation(const std::vector<Post>& training_posts,
                               const ImputationPolicy& policy) {
  std::vector<double> geo_acc, followers, following, post_count;
  std::size_t pro_true = 0, pro_present = 0;
  for (const auto& p : training_posts) {
    if (p.geo_accuracy) geo_acc.push_back(static_cast<double>(*p.geo_accuracy));
    if (p.followers) followers.push_back(static_cast<double>(*p.followers));
    if (p.following) following.push_back(static_cast<double>(*p.following));
    if (p.user_post_count)
      post_count.push_back(static_cast<double>(*p.user_post_count));
    if (p.is_pro) {
      ++pro_present;
      if (*p.is_pro) ++pro_true;
    }
  }
  ImputationStats stats;
  stats.geo_accuracy = numeric_fill(geo_acc, policy, "geo_accuracy");
  stats.followers = numeric_fill(followers, policy, "followers");
  stats.following = numeric_fill(following, policy, "following");
  stats.user_post_count = numeric_fill(post_count, policy, "user_post_count");
  if (policy.categorical_rule == ImputationPolicy::CategoricalRule::kMode)
    stats.is_pro = pro_present > 0 && pro_true * 2 > pro_present;
  else
    stats.is_pro = false;
  return stats;
}

ImputeResult apply_imputation(const std::vector<Post>& posts,
                              const ImputationStats& stats,
                              const ImputationPolicy& policy) {
  (void)policy;
  ImputeResult out;
  out.posts = posts;
  out.geo_was_missing.assign(posts.size(), 0);
  auto& counts = out.report.counts;
  counts["latitude"] = 0;
  counts["longitude"] = 0;
  counts["geo_accuracy"] = 0;
  counts["followers"] = 0;
  counts["following"] = 0;
  counts["user_post_count"] = 0;
  counts["is_pro"] = 0;

  auto fill_numeric = [&](std::optional<std::int64_t>& field,
                          const std::optional<double>& stat, const char* name) {
    if (field) return;
    if (!stat)
      throw DataError(std::string("unimputable field '") + name +
                      "': absent in every training row");
    field = static_cast<std::int64_t>(std::llround(*stat));
    ++counts[name];
  };

  for (std::size_t i = 0; i < out.posts.size(); ++i) {
    Post& p = out.posts[i];
    if (!p.latitude || !p.longitude) {
      out.geo_was_missing[i] = 1;
      if (!p.latitude) {
        p.latitude = 0.0;
        ++counts["latitude"];
      }
      if (!p.longitude) {
        p.longitude = 0.0;
        ++counts["longitude"];
      }
    }
    fill_numeric(p.geo_accuracy, stats.geo_accuracy, "geo_accuracy");
    fill_numeric(p.followers, stats.followers, "followers");
    fill_numeric(p.following, stats.following, "following");
    fill_numeric(p.user_post_count, stats.user_post_count, "user_post_count");
    if (!p.is_pro) {
      p.is_pro = stats.is_pro;
      ++counts["is_pro"];
    }
  }
  return out;
}

ImputeResult impute(const std::vector<Post>& posts,
                    const ImputationPolicy& policy,
                    const std::vector<std::uint8_t>& is_training) {
  if (is_training.size() != posts.size())
    throw DataError("impute: training indicator length mismatch");
  std::vector<Post> training;
  for (std::size_t i = 0; i < posts.size(); ++i)
    if (is_training[i]) training.push_back(posts[i]);
  return apply_imputation(posts, fit_imputation(training, policy), policy);
}

}  // namespace hyperfusion
