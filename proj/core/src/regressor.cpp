#include "hyperfusion/regressor.hpp"

#include "hyperfusion/errors.hpp"

namespace hyperfusion {

std::string member_kind_name(MemberKind kind) {
  switch (kind) {
    case MemberKind::kGbdt: return "gbdt";
    case MemberKind::kMlp: return "mlp";
    case MemberKind::kRidge: return "ridge";
  }
  return "unknown";
}

Vector predict(const Regressor& model, const Matrix& x) {
  if (x.rows() == 0) return Vector(0);
  return std::visit([&](const auto& m) { return m.predict(x); }, model);
}

std::size_t feature_count(const Regressor& model) {
  if (const auto* g = std::get_if<GbdtModel>(&model)) return g->feature_count;
  if (const auto* m = std::get_if<MlpModel>(&model)) return m->feature_count;
  const auto& r = std::get<RidgeModel>(model);
  return static_cast<std::size_t>(r.weights.size());
}

MemberKind kind_of(const Regressor& model) {
  if (std::holds_alternative<GbdtModel>(model)) return MemberKind::kGbdt;
  if (std::holds_alternative<MlpModel>(model)) return MemberKind::kMlp;
  return MemberKind::kRidge;
}

namespace {

void write_gbdt(io::Writer& w, const GbdtModel& m) {
  w.f64(m.base_score);
  w.f64(m.learning_rate);
  w.u32(static_cast<std::uint32_t>(m.max_depth));
  w.u32(static_cast<std::uint32_t>(m.min_leaf));
  w.u64(m.feature_count);
  w.u64(m.trees.size());
  for (const auto& tree : m.trees) {
    w.u64(tree.nodes.size());
    for (const auto& n : tree.nodes) {
      w.u32(std::bit_cast<std::uint32_t>(n.feature));
      w.f64(n.threshold);
      w.u32(std::bit_cast<std::uint32_t>(n.left));
      w.u32(std::bit_cast<std::uint32_t>(n.right));
      w.f64(n.value);
    }
  }
  w.u64(m.training_loss.size());
  for (double v : m.training_loss) w.f64(v);
}

GbdtModel read_gbdt(io::Reader& r) {
  GbdtModel m;
  m.base_score = r.f64();
  m.learning_rate = r.f64();
  m.max_depth = static_cast<int>(r.u32());
  m.min_leaf = static_cast<int>(r.u32());
  m.feature_count = r.u64();
  const std::uint64_t tree_count = r.u64();
  m.trees.reserve(tree_count);
  for (std::uint64_t t = 0; t < tree_count; ++t) {
    Tree tree;
    const std::uint64_t node_count = r.u64();
    tree.nodes.reserve(node_count);
    for (std::uint64_t i = 0; i < node_count; ++i) {
      TreeNode n;
      n.feature = std::bit_cast<std::int32_t>(r.u32());
      n.threshold = r.f64();
      n.left = std::bit_cast<std::int32_t>(r.u32());
      n.right = std::bit_cast<std::int32_t>(r.u32());
      n.value = r.f64();
      tree.nodes.push_back(n);
    }
    m.trees.push_back(std::move(tree));
  }
  const std::uint64_t loss_count = r.u64();
  m.training_loss.reserve(loss_count);
  for (std::uint64_t i = 0; i < loss_count; ++i) m.training_loss.push_back(r.f64());
  return m;
}

void write_mlp(io::Writer& w, const MlpModel& m) {
  w.u64(m.blocks.size());
  for (const auto& b : m.blocks) {
    w.str(b.name);
    w.u64(b.begin);
    w.u64(b.width);
    w.u8(b.wide ? 1 : 0);
  }
  w.u64(m.proj_dim);
  w.u64(m.feature_count);
  w.u64(m.proj_w.size());
  for (std::size_t b = 0; b < m.proj_w.size(); ++b) {
    w.matrix(m.proj_w[b]);
    w.vector(m.proj_b[b]);
    w.vector(m.attn_w[b]);
    w.f64(m.attn_b[b]);
  }
  w.u64(m.hidden_w.size());
  for (std::size_t l = 0; l < m.hidden_w.size(); ++l) {
    w.matrix(m.hidden_w[l]);
    w.vector(m.hidden_b[l]);
    w.vector(m.gamma[l]);
    w.vector(m.beta[l]);
    w.vector(m.run_mean[l]);
    w.vector(m.run_var[l]);
  }
  w.vector(m.out_w);
  w.f64(m.out_b);
  w.u64(m.params.proj_dim);
  w.u64(m.params.hidden.size());
  for (std::size_t h : m.params.hidden) w.u64(h);
  w.u32(static_cast<std::uint32_t>(m.params.epochs));
  w.u64(m.params.batch);
  w.f64(m.params.learning_rate);
  w.f64(m.params.momentum);
  w.f64(m.params.bn_decay);
  w.f64(m.params.bn_eps);
  w.f64(m.huber.delta);
}

MlpModel read_mlp(io::Reader& r) {
  MlpModel m;
  const std::uint64_t block_count = r.u64();
  for (std::uint64_t i = 0; i < block_count; ++i) {
    MlpModel::Block b;
    b.name = r.str();
    b.begin = r.u64();
    b.width = r.u64();
    b.wide = r.u8() != 0;
    m.blocks.push_back(std::move(b));
  }
  m.proj_dim = r.u64();
  m.feature_count = r.u64();
  const std::uint64_t wide_count = r.u64();
  for (std::uint64_t b = 0; b < wide_count; ++b) {
    m.proj_w.push_back(r.matrix());
    m.proj_b.push_back(r.vector());
    m.attn_w.push_back(r.vector());
    m.attn_b.push_back(r.f64());
  }
  const std::uint64_t layer_count = r.u64();
  for (std::uint64_t l = 0; l < layer_count; ++l) {
    m.hidden_w.push_back(r.matrix());
    m.hidden_b.push_back(r.vector());
    m.gamma.push_back(r.vector());
    m.beta.push_back(r.vector());
    m.run_mean.push_back(r.vector());
    m.run_var.push_back(r.vector());
  }
  m.out_w = r.vector();
  m.out_b = r.f64();
  m.params.proj_dim = r.u64();
  const std::uint64_t hidden_count = r.u64();
  m.params.hidden.clear();
  for (std::uint64_t i = 0; i < hidden_count; ++i) m.params.hidden.push_back(r.u64());
  m.params.epochs = static_cast<int>(r.u32());
  m.params.batch = r.u64();
  m.params.learning_rate = r.f64();
  m.params.momentum = r.f64();
  m.params.bn_decay = r.f64();
  m.params.bn_eps = r.f64();
  m.huber.delta = r.f64();
  return m;
}

void write_ridge(io::Writer& w, const RidgeModel& m) {
  w.vector(m.weights);
  w.f64(m.bias);
  w.f64(m.l2);
}

RidgeModel read_ridge(io::Reader& r) {
  RidgeModel m;
  m.weights = r.vector();
  m.bias = r.f64();
  m.l2 = r.f64();
  return m;
}

}  // namespace

void serialize_regressor(io::Writer& w, const Regressor& model) {
  const MemberKind kind = kind_of(model);
  w.u8(static_cast<std::uint8_t>(kind));
  switch (kind) {
    case MemberKind::kGbdt: write_gbdt(w, std::get<GbdtModel>(model)); break;
    case MemberKind::kMlp: write_mlp(w, std::get<MlpModel>(model)); break;
    case MemberKind::kRidge: write_ridge(w, std::get<RidgeModel>(model)); break;
  }
}

Regressor deserialize_regressor(io::Reader& r) {
  const auto kind = static_cast<MemberKind>(r.u8());
  switch (kind) {
    case MemberKind::kGbdt: return read_gbdt(r);
    case MemberKind::kMlp: return read_mlp(r);
    case MemberKind::kRidge: return read_ridge(r);
  }
  throw DataError("regressor: unknown model kind tag");
}

}  // namespace hyperfusion
