#include "hyperfusion/pipeline.hpp"

#include <cmath>

#include "hyperfusion/errors.hpp"
#include "hyperfusion/version.hpp"

namespace hyperfusion {

namespace {

const EmbeddingTable* find_table(const std::vector<EmbeddingTable>& tables,
                                 const std::string& tag) {
  for (const auto& t : tables)
    if (t.source_tag == tag) return &t;
  return nullptr;
}

const EmbeddingTable& require_table(const std::vector<EmbeddingTable>& tables,
                                    const std::string& tag) {
  const auto* t = find_table(tables, tag);
  if (!t) throw DataError("missing embedding table '" + tag + "'");
  return *t;
}

// Rows of `table` gathered in post order.
Matrix gather_rows(const EmbeddingTable& table, const std::vector<Post>& posts) {
  Matrix out(static_cast<Eigen::Index>(posts.size()),
             static_cast<Eigen::Index>(table.dim()));
  const auto& index = table.index();
  for (std::size_t i = 0; i < posts.size(); ++i) {
    auto it = index.find(posts[i].post_id);
    if (it == index.end())
      throw DataError("alignment error: post '" + posts[i].post_id +
                      "' missing from table '" + table.source_tag + "'");
    out.row(static_cast<Eigen::Index>(i)) =
        table.data.row(static_cast<Eigen::Index>(it->second));
  }
  return out;
}

std::vector<std::string> numbered_names(const std::string& prefix, std::size_t n) {
  std::vector<std::string> names;
  names.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%03zu", prefix.c_str(), i);
    names.emplace_back(buf);
  }
  return names;
}

void write_optional_pca(io::Writer& w, const std::optional<PcaModel>& m) {
  w.u8(m.has_value() ? 1 : 0);
  if (!m) return;
  w.vector(m->mean);
  w.matrix(m->components);
  w.vector(m->explained_variance);
}

std::optional<PcaModel> read_optional_pca(io::Reader& r) {
  if (r.u8() == 0) return std::nullopt;
  PcaModel m;
  m.mean = r.vector();
  m.components = r.matrix();
  m.explained_variance = r.vector();
  return m;
}

void write_optional_svd(io::Writer& w, const std::optional<SvdModel>& m) {
  w.u8(m.has_value() ? 1 : 0);
  if (!m) return;
  w.matrix(m->left_factors);
  w.vector(m->singular_values);
  w.matrix(m->right_factors);
  w.u64(m->rank);
  w.string_list(m->entity_ids);
  w.string_list(m->context_ids);
  w.str(m->fitted_on);
}

std::optional<SvdModel> read_optional_svd(io::Reader& r) {
  if (r.u8() == 0) return std::nullopt;
  SvdModel m;
  m.left_factors = r.matrix();
  m.singular_values = r.vector();
  m.right_factors = r.matrix();
  m.rank = r.u64();
  m.entity_ids = r.string_list();
  m.context_ids = r.string_list();
  m.fitted_on = r.str();
  return m;
}

void write_optional_stat(io::Writer& w, const std::optional<double>& v) {
  w.u8(v.has_value() ? 1 : 0);
  w.f64(v.value_or(0.0));
}

std::optional<double> read_optional_stat(io::Reader& r) {
  const bool present = r.u8() != 0;
  const double v = r.f64();
  return present ? std::optional<double>(v) : std::nullopt;
}

}  // namespace

FeaturePipeline FeaturePipeline::fit(const std::vector<Post>& train_posts,
                                     const std::vector<EmbeddingTable>& tables,
                                     const FeatureConfig& config, RngSeed seed) {
  if (train_posts.empty()) throw DataError("pipeline fit: no training posts");

  FeaturePipeline p;
  p.cfg_ = config;
  p.imputation_ = fit_imputation(train_posts, config.imputation);
  const ImputeResult imputed =
      apply_imputation(train_posts, p.imputation_, config.imputation);

  if (config.visual && config.pca_visual_k > 0) {
    const auto& visual = require_table(tables, config.visual_tag);
    p.pca_visual_ = fit_pca(gather_rows(visual, imputed.posts), config.pca_visual_k);
  }
  if (config.textual && config.pca_textual_k > 0) {
    const auto& text = require_table(tables, config.text_tag);
    p.pca_textual_ = fit_pca(gather_rows(text, imputed.posts), config.pca_textual_k);
  }
  if (config.textual) {
    const auto* glove = find_table(tables, config.tag_vector_tag);
    p.glove_dim_ = glove ? glove->dim() : 0;
  }
  if (config.user && config.svd_user_k > 0)
    p.svd_user_ = fit_svd_embeddings(imputed.posts, EntityKind::kUser,
                                     config.svd_user_k, config.svd_iterations,
                                     derive_seed(seed, 11), 0.0);
  if (config.spatial && config.svd_location_k > 0)
    p.svd_location_ = fit_svd_embeddings(
        imputed.posts, EntityKind::kLocation, config.svd_location_k,
        config.svd_iterations, derive_seed(seed, 12),
        config.location_grid_degrees);

  const FeatureMatrix raw = p.assemble(train_posts, tables);
  p.scaler_ = fit_scaler(raw.data);
  return p;
}

FeatureMatrix FeaturePipeline::assemble(
    const std::vector<Post>& posts,
    const std::vector<EmbeddingTable>& tables) const {
  const ImputeResult imputed = apply_imputation(posts, imputation_, cfg_.imputation);
  const std::vector<Post>& rows = imputed.posts;
  const auto n = static_cast<Eigen::Index>(rows.size());

  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (const auto& p : rows) ids.push_back(p.post_id);

  std::vector<FeatureMatrix> blocks;

  if (cfg_.visual) {
    const auto& visual = require_table(tables, cfg_.visual_tag);
    Matrix emb = gather_rows(visual, rows);
    if (pca_visual_) {
      Matrix reduced = apply_pca(*pca_visual_, emb);
      blocks.push_back(make_block(
          "visual", ids,
          numbered_names("pca_", static_cast<std::size_t>(reduced.cols())),
          std::move(reduced)));
    } else {
      blocks.push_back(make_block(
          "visual", ids,
          numbered_names("emb_", static_cast<std::size_t>(emb.cols())),
          std::move(emb)));
    }
  }

  if (cfg_.textual) {
    const auto& text = require_table(tables, cfg_.text_tag);
    Matrix emb = gather_rows(text, rows);
    std::vector<std::string> names;
    Matrix clip_part;
    if (pca_textual_) {
      clip_part = apply_pca(*pca_textual_, emb);
      names = numbered_names("pca_", static_cast<std::size_t>(clip_part.cols()));
    } else {
      clip_part = std::move(emb);
      names = numbered_names("clip_", static_cast<std::size_t>(clip_part.cols()));
    }

    const auto* glove = find_table(tables, cfg_.tag_vector_tag);
    const auto glove_dim = static_cast<Eigen::Index>(glove_dim_);
    Matrix glove_mean = Matrix::Zero(n, glove_dim);
    if (glove_dim_ > 0) {
      if (!glove)
        throw DataError("missing embedding table '" + cfg_.tag_vector_tag +
                        "' required by the fitted pipeline");
      const auto& index = glove->index();
      for (Eigen::Index i = 0; i < n; ++i) {
        int hits = 0;
        for (const auto& tag : rows[static_cast<std::size_t>(i)].tags) {
          auto it = index.find(tag);
          if (it == index.end()) continue;  // unseen tag contributes nothing
          glove_mean.row(i) +=
              glove->data.row(static_cast<Eigen::Index>(it->second));
          ++hits;
        }
        if (hits > 0) glove_mean.row(i) /= static_cast<double>(hits);
      }
    }

    const auto& stat_names = text_stat_names();
    Matrix stats(n, static_cast<Eigen::Index>(kTextStatCount));
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& p = rows[static_cast<std::size_t>(i)];
      const auto s = text_stats(p.caption, p.tags);
      for (std::size_t c = 0; c < kTextStatCount; ++c)
        stats(i, static_cast<Eigen::Index>(c)) = s[c];
    }

    Matrix block(n, clip_part.cols() + glove_dim +
                        static_cast<Eigen::Index>(kTextStatCount));
    block << clip_part, glove_mean, stats;
    for (const auto& g : numbered_names("glove_", glove_dim_)) names.push_back(g);
    for (const auto& s : stat_names) names.push_back(s);
    blocks.push_back(make_block("textual", ids, names, std::move(block)));
  }

  if (cfg_.spatial) {
    std::vector<std::string> names(temporal_names().begin(), temporal_names().end());
    names.insert(names.end(),
                 {"latitude", "longitude", "geo_accuracy", "geo_missing"});
    Matrix block(n, static_cast<Eigen::Index>(names.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& p = rows[static_cast<std::size_t>(i)];
      const auto t = temporal_features(p.timestamp);
      for (std::size_t c = 0; c < kTemporalCount; ++c)
        block(i, static_cast<Eigen::Index>(c)) = t[c];
      block(i, 7) = *p.latitude;
      block(i, 8) = *p.longitude;
      block(i, 9) = static_cast<double>(*p.geo_accuracy);
      block(i, 10) = imputed.geo_was_missing[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    }
    if (svd_location_) {
      std::vector<std::string> cells;
      cells.reserve(rows.size());
      for (const auto& p : rows)
        cells.push_back(
            location_cell(*p.latitude, *p.longitude, cfg_.location_grid_degrees));
      EmbeddingColumns loc = embedding_columns(*svd_location_, cells);
      Matrix joined(n, block.cols() + loc.data.cols());
      joined << block, loc.data;
      block = std::move(joined);
      for (const auto& nm : loc.names) names.push_back("loc_" + nm);
    }
    blocks.push_back(make_block("spatial", ids, names, std::move(block)));
  }

  if (cfg_.user) {
    std::vector<std::string> names = {"followers", "following", "post_count",
                                      "is_pro", "log1p_followers"};
    Matrix block(n, 5);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& p = rows[static_cast<std::size_t>(i)];
      block(i, 0) = static_cast<double>(*p.followers);
      block(i, 1) = static_cast<double>(*p.following);
      block(i, 2) = static_cast<double>(*p.user_post_count);
      block(i, 3) = *p.is_pro ? 1.0 : 0.0;
      block(i, 4) = std::log1p(static_cast<double>(*p.followers));
    }
    if (svd_user_) {
      std::vector<std::string> users;
      users.reserve(rows.size());
      for (const auto& p : rows) users.push_back(p.user_id);
      EmbeddingColumns emb = embedding_columns(*svd_user_, users);
      Matrix joined(n, block.cols() + emb.data.cols());
      joined << block, emb.data;
      block = std::move(joined);
      names.insert(names.end(), emb.names.begin(), emb.names.end());
    }
    blocks.push_back(make_block("user", ids, names, std::move(block)));
  }

  if (cfg_.cross) {
    const auto& visual = require_table(tables, cfg_.visual_tag);
    const auto& text = require_table(tables, cfg_.text_tag);
    if (visual.dim() != text.dim())
      throw DataError("cross block: visual dim " + std::to_string(visual.dim()) +
                      " != text dim " + std::to_string(text.dim()));
    const Matrix v = gather_rows(visual, rows);
    const Matrix t = gather_rows(text, rows);
    Matrix block(n, 1);
    for (Eigen::Index i = 0; i < n; ++i)
      block(i, 0) = cross_modal_similarity(v.row(i).transpose(), t.row(i).transpose());
    blocks.push_back(make_block("cross", ids, {"clip_cosine"}, std::move(block)));
  }

  if (blocks.empty()) throw ConfigError("all feature blocks disabled");
  return concat_blocks(blocks);
}

FeatureMatrix FeaturePipeline::transform(
    const std::vector<Post>& posts,
    const std::vector<EmbeddingTable>& tables) const {
  FeatureMatrix out = assemble(posts, tables);
  if (cfg_.standardize) out.data = apply_scaler(scaler_, out.data);
  return out;
}

void FeaturePipeline::serialize(io::Writer& w) const {
  w.u8(cfg_.visual);
  w.u8(cfg_.textual);
  w.u8(cfg_.spatial);
  w.u8(cfg_.user);
  w.u8(cfg_.cross);
  w.u64(cfg_.pca_visual_k);
  w.u64(cfg_.pca_textual_k);
  w.u64(cfg_.svd_user_k);
  w.u64(cfg_.svd_location_k);
  w.u32(static_cast<std::uint32_t>(cfg_.svd_iterations));
  w.f64(cfg_.location_grid_degrees);
  w.u8(cfg_.standardize);
  w.str(cfg_.visual_tag);
  w.str(cfg_.text_tag);
  w.str(cfg_.tag_vector_tag);
  w.u8(static_cast<std::uint8_t>(cfg_.imputation.numeric_rule));
  w.f64(cfg_.imputation.numeric_constant);
  w.u8(static_cast<std::uint8_t>(cfg_.imputation.categorical_rule));

  write_optional_stat(w, imputation_.geo_accuracy);
  write_optional_stat(w, imputation_.followers);
  write_optional_stat(w, imputation_.following);
  write_optional_stat(w, imputation_.user_post_count);
  w.u8(imputation_.is_pro ? 1 : 0);

  write_optional_pca(w, pca_visual_);
  write_optional_pca(w, pca_textual_);
  write_optional_svd(w, svd_user_);
  write_optional_svd(w, svd_location_);
  w.u64(glove_dim_);

  w.vector(scaler_.means);
  w.vector(scaler_.stds);
  w.u64(scaler_.constant.size());
  for (auto c : scaler_.constant) w.u8(c);
}

FeaturePipeline FeaturePipeline::deserialize(io::Reader& r) {
  FeaturePipeline p;
  p.cfg_.visual = r.u8() != 0;
  p.cfg_.textual = r.u8() != 0;
  p.cfg_.spatial = r.u8() != 0;
  p.cfg_.user = r.u8() != 0;
  p.cfg_.cross = r.u8() != 0;
  p.cfg_.pca_visual_k = r.u64();
  p.cfg_.pca_textual_k = r.u64();
  p.cfg_.svd_user_k = r.u64();
  p.cfg_.svd_location_k = r.u64();
  p.cfg_.svd_iterations = static_cast<int>(r.u32());
  p.cfg_.location_grid_degrees = r.f64();
  p.cfg_.standardize = r.u8() != 0;
  p.cfg_.visual_tag = r.str();
  p.cfg_.text_tag = r.str();
  p.cfg_.tag_vector_tag = r.str();
  p.cfg_.imputation.numeric_rule =
      static_cast<ImputationPolicy::NumericRule>(r.u8());
  p.cfg_.imputation.numeric_constant = r.f64();
  p.cfg_.imputation.categorical_rule =
      static_cast<ImputationPolicy::CategoricalRule>(r.u8());

  p.imputation_.geo_accuracy = read_optional_stat(r);
  p.imputation_.followers = read_optional_stat(r);
  p.imputation_.following = read_optional_stat(r);
  p.imputation_.user_post_count = read_optional_stat(r);
  p.imputation_.is_pro = r.u8() != 0;

  p.pca_visual_ = read_optional_pca(r);
  p.pca_textual_ = read_optional_pca(r);
  p.svd_user_ = read_optional_svd(r);
  p.svd_location_ = read_optional_svd(r);
  p.glove_dim_ = r.u64();

  p.scaler_.means = r.vector();
  p.scaler_.stds = r.vector();
  const std::uint64_t cn = r.u64();
  p.scaler_.constant.resize(cn);
  for (std::uint64_t i = 0; i < cn; ++i) p.scaler_.constant[i] = r.u8();
  return p;
}

void FeaturePipeline::save(const std::filesystem::path& path) const {
  io::Writer w;
  serialize(w);
  io::write_sections_file(path, "HFP1", kArtifactVersion,
                          {{"pipeline", w.take()}});
}

FeaturePipeline FeaturePipeline::load(const std::filesystem::path& path) {
  const auto sections = io::read_sections_file(path, "HFP1", kArtifactVersion);
  const auto* s = io::find_section(sections, "pipeline");
  if (!s) throw DataError("pipeline artifact missing 'pipeline' section");
  io::Reader r(s->payload);
  return deserialize(r);
}

FeatureMatrix build_features(const std::vector<Post>& posts,
                             const std::vector<EmbeddingTable>& tables,
                             const FeatureConfig& config, RngSeed seed) {
  return FeaturePipeline::fit(posts, tables, config, seed).transform(posts, tables);
}

}  // namespace hyperfusion
