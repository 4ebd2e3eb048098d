#include "hyperfusion/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hyperfusion/errors.hpp"

namespace hyperfusion {

namespace {

// Forward tensors kept for backprop.
struct Workspace {
  std::vector<Matrix> h;        // per wide block: m x P projections
  Matrix scores;                // m x B attention scores
  Matrix alpha;                 // m x B softmax weights
  Matrix z0;                    // m x (P + S) fused input
  std::vector<Matrix> pre_bn;   // per layer: m x width, linear output
  std::vector<Matrix> xhat;     // per layer: normalized pre-activation
  std::vector<Matrix> z;        // per layer: post-ReLU activations
  std::vector<Vector> mu, var;  // per layer batch statistics
  Vector yhat;
};

void softmax_rows(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mx = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - mx).exp();
    m.row(r) /= m.row(r).sum();
  }
}

}  // namespace

std::vector<std::string> MlpModel::wide_block_names() const {
  std::vector<std::string> names;
  for (const auto& b : blocks)
    if (b.wide) names.push_back(b.name);
  return names;
}

namespace {

// Shared forward pass. In training mode normalization uses batch
// statistics; in inference mode the model's running averages.
void forward(const MlpModel& m, const Matrix& x, bool training, Workspace& ws) {
  const auto rows = x.rows();
  const auto p = static_cast<Eigen::Index>(m.proj_dim);

  std::size_t wide_count = 0, scalar_count = 0;
  for (const auto& b : m.blocks) (b.wide ? wide_count : scalar_count)++;

  ws.h.clear();
  ws.h.reserve(wide_count);
  ws.scores.resize(rows, static_cast<Eigen::Index>(wide_count));
  std::size_t wi = 0;
  for (const auto& b : m.blocks) {
    if (!b.wide) continue;
    const auto xb = x.middleCols(static_cast<Eigen::Index>(b.begin),
                                 static_cast<Eigen::Index>(b.width));
    Matrix hb = xb * m.proj_w[wi];
    hb.rowwise() += m.proj_b[wi].transpose();
    ws.scores.col(static_cast<Eigen::Index>(wi)) =
        hb * m.attn_w[wi] + Vector::Constant(rows, m.attn_b[wi]);
    ws.h.push_back(std::move(hb));
    ++wi;
  }

  const auto z0_width =
      (wide_count > 0 ? p : 0) + static_cast<Eigen::Index>(scalar_count);
  ws.z0.setZero(rows, z0_width);
  if (wide_count > 0) {
    ws.alpha = ws.scores;
    softmax_rows(ws.alpha);
    for (std::size_t b = 0; b < wide_count; ++b)
      ws.z0.leftCols(p) +=
          ws.h[b].array().colwise() * ws.alpha.col(static_cast<Eigen::Index>(b)).array();
  } else {
    ws.alpha.resize(rows, 0);
  }
  Eigen::Index sc = wide_count > 0 ? p : 0;
  for (const auto& b : m.blocks)
    if (!b.wide) ws.z0.col(sc++) = x.col(static_cast<Eigen::Index>(b.begin));

  const std::size_t layers = m.hidden_w.size();
  ws.pre_bn.assign(layers, {});
  ws.xhat.assign(layers, {});
  ws.z.assign(layers, {});
  ws.mu.assign(layers, {});
  ws.var.assign(layers, {});

  const Matrix* prev = &ws.z0;
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix u = *prev * m.hidden_w[l];
    u.rowwise() += m.hidden_b[l].transpose();
    const auto width = u.cols();
    Vector mu(width), var(width);
    if (training) {
      mu = u.colwise().mean();
      for (Eigen::Index c = 0; c < width; ++c)
        var(c) = (u.col(c).array() - mu(c)).square().sum() /
                 static_cast<double>(rows);
    } else {
      mu = m.run_mean[l];
      var = m.run_var[l];
    }
    Matrix xhat(u.rows(), width);
    for (Eigen::Index c = 0; c < width; ++c)
      xhat.col(c) = (u.col(c).array() - mu(c)) / std::sqrt(var(c) + m.params.bn_eps);
    Matrix z(u.rows(), width);
    for (Eigen::Index c = 0; c < width; ++c)
      z.col(c) = (m.gamma[l](c) * xhat.col(c).array() + m.beta[l](c)).max(0.0);
    ws.pre_bn[l] = std::move(u);
    ws.xhat[l] = std::move(xhat);
    ws.z[l] = std::move(z);
    ws.mu[l] = std::move(mu);
    ws.var[l] = std::move(var);
    prev = &ws.z[l];
  }

  ws.yhat = *prev * m.out_w + Vector::Constant(rows, m.out_b);
}

}  // namespace

Vector MlpModel::predict(const Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != feature_count)
    throw DataError("mlp predict: shape error, expected " +
                    std::to_string(feature_count) + " features, got " +
                    std::to_string(x.cols()));
  Workspace ws;
  forward(*this, x, /*training=*/false, ws);
  return ws.yhat;
}

Matrix MlpModel::attention(const Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != feature_count)
    throw DataError("mlp attention: shape error");
  Workspace ws;
  forward(*this, x, /*training=*/false, ws);
  return ws.alpha;
}

Vector MlpModel::flatten_parameters() const {
  std::size_t total = 0;
  for (std::size_t b = 0; b < proj_w.size(); ++b)
    total += static_cast<std::size_t>(proj_w[b].size()) +
             static_cast<std::size_t>(proj_b[b].size()) +
             static_cast<std::size_t>(attn_w[b].size()) + 1;
  for (std::size_t l = 0; l < hidden_w.size(); ++l)
    total += static_cast<std::size_t>(hidden_w[l].size()) +
             static_cast<std::size_t>(hidden_b[l].size()) +
             static_cast<std::size_t>(gamma[l].size()) +
             static_cast<std::size_t>(beta[l].size());
  total += static_cast<std::size_t>(out_w.size()) + 1;

  Vector theta(static_cast<Eigen::Index>(total));
  Eigen::Index at = 0;
  auto put_matrix = [&](const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) theta(at++) = m(r, c);
  };
  auto put_vector = [&](const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) theta(at++) = v(i);
  };
  for (std::size_t b = 0; b < proj_w.size(); ++b) {
    put_matrix(proj_w[b]);
    put_vector(proj_b[b]);
    put_vector(attn_w[b]);
    theta(at++) = attn_b[b];
  }
  for (std::size_t l = 0; l < hidden_w.size(); ++l) {
    put_matrix(hidden_w[l]);
    put_vector(hidden_b[l]);
    put_vector(gamma[l]);
    put_vector(beta[l]);
  }
  put_vector(out_w);
  theta(at++) = out_b;
  return theta;
}

void MlpModel::set_parameters(const Vector& theta) {
  Eigen::Index at = 0;
  auto get_matrix = [&](Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = theta(at++);
  };
  auto get_vector = [&](Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = theta(at++);
  };
  for (std::size_t b = 0; b < proj_w.size(); ++b) {
    get_matrix(proj_w[b]);
    get_vector(proj_b[b]);
    get_vector(attn_w[b]);
    attn_b[b] = theta(at++);
  }
  for (std::size_t l = 0; l < hidden_w.size(); ++l) {
    get_matrix(hidden_w[l]);
    get_vector(hidden_b[l]);
    get_vector(gamma[l]);
    get_vector(beta[l]);
  }
  get_vector(out_w);
  out_b = theta(at++);
  if (at != theta.size())
    throw InternalError("mlp: parameter vector size mismatch");
}

double MlpModel::loss_and_gradient(const Matrix& x, const Vector& y,
                                   const Vector* w, Vector* grad,
                                   bool update_running) {
  const auto rows = x.rows();
  Workspace ws;
  forward(*this, x, /*training=*/true, ws);

  if (update_running) {
    for (std::size_t l = 0; l < hidden_w.size(); ++l) {
      run_mean[l] = params.bn_decay * run_mean[l] + (1.0 - params.bn_decay) * ws.mu[l];
      run_var[l] = params.bn_decay * run_var[l] + (1.0 - params.bn_decay) * ws.var[l];
    }
  }

  double wsum = 0.0, loss = 0.0;
  Vector dyhat(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double wi = w ? (*w)(i) : 1.0;
    const HuberEval e = huber_loss(y(i), ws.yhat(i), huber);
    loss += wi * e.loss;
    dyhat(i) = wi * e.dloss_dyhat;
    wsum += wi;
  }
  loss /= wsum;
  dyhat /= wsum;

  if (!grad) return loss;

  // Gradient accumulators mirror the parameter layout.
  std::vector<Matrix> d_proj_w(proj_w.size());
  std::vector<Vector> d_proj_b(proj_b.size());
  std::vector<Vector> d_attn_w(attn_w.size());
  std::vector<double> d_attn_b(attn_b.size(), 0.0);
  std::vector<Matrix> d_hidden_w(hidden_w.size());
  std::vector<Vector> d_hidden_b(hidden_b.size());
  std::vector<Vector> d_gamma(gamma.size());
  std::vector<Vector> d_beta(beta.size());

  const std::size_t layers = hidden_w.size();
  const Matrix& last_z = layers > 0 ? ws.z[layers - 1] : ws.z0;

  Vector d_out_w = last_z.transpose() * dyhat;
  double d_out_b = dyhat.sum();
  Matrix dz = dyhat * out_w.transpose();  // gradient wrt last activations

  for (std::size_t li = layers; li-- > 0;) {
    // ReLU.
    Matrix du_hat = dz;
    for (Eigen::Index r = 0; r < du_hat.rows(); ++r)
      for (Eigen::Index c = 0; c < du_hat.cols(); ++c)
        if (ws.z[li](r, c) <= 0.0) du_hat(r, c) = 0.0;

    // Trained gain/shift.
    const auto width = du_hat.cols();
    d_gamma[li].resize(width);
    d_beta[li].resize(width);
    Matrix dxhat(du_hat.rows(), width);
    for (Eigen::Index c = 0; c < width; ++c) {
      d_gamma[li](c) = (du_hat.col(c).array() * ws.xhat[li].col(c).array()).sum();
      d_beta[li](c) = du_hat.col(c).sum();
      dxhat.col(c) = du_hat.col(c) * gamma[li](c);
    }

    // Batch standardization backward.
    const double m_inv = 1.0 / static_cast<double>(rows);
    Matrix du(du_hat.rows(), width);
    for (Eigen::Index c = 0; c < width; ++c) {
      const double inv_std = 1.0 / std::sqrt(ws.var[li](c) + params.bn_eps);
      const double sum_dxhat = dxhat.col(c).sum();
      const double sum_dxhat_xhat =
          (dxhat.col(c).array() * ws.xhat[li].col(c).array()).sum();
      du.col(c) = inv_std * m_inv *
                  (static_cast<double>(rows) * dxhat.col(c).array() - sum_dxhat -
                   ws.xhat[li].col(c).array() * sum_dxhat_xhat);
    }

    const Matrix& zin = li > 0 ? ws.z[li - 1] : ws.z0;
    d_hidden_w[li] = zin.transpose() * du;
    d_hidden_b[li] = du.colwise().sum();
    dz = du * hidden_w[li].transpose();
  }

  // dz is now the gradient wrt z0 = [fused ; bypass scalars].
  const auto p = static_cast<Eigen::Index>(proj_dim);
  const std::size_t wide_count = ws.h.size();
  if (wide_count > 0) {
    std::vector<std::size_t> wide_begin;
    for (const auto& blk : blocks)
      if (blk.wide) wide_begin.push_back(blk.begin);

    const Matrix d_fused = dz.leftCols(p);
    Matrix d_alpha(rows, static_cast<Eigen::Index>(wide_count));
    for (std::size_t b = 0; b < wide_count; ++b)
      d_alpha.col(static_cast<Eigen::Index>(b)) =
          (d_fused.array() * ws.h[b].array()).rowwise().sum();

    // Softmax backward: ds_b = alpha_b * (da_b - sum_b' alpha_b' da_b').
    Matrix d_scores(rows, static_cast<Eigen::Index>(wide_count));
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double dot = ws.alpha.row(r).dot(d_alpha.row(r));
      for (Eigen::Index b = 0; b < d_scores.cols(); ++b)
        d_scores(r, b) = ws.alpha(r, b) * (d_alpha(r, b) - dot);
    }

    for (std::size_t b = 0; b < wide_count; ++b) {
      const auto cb = static_cast<Eigen::Index>(b);
      Matrix dh(rows, p);
      for (Eigen::Index r = 0; r < rows; ++r)
        dh.row(r) = ws.alpha(r, cb) * d_fused.row(r) +
                    d_scores(r, cb) * attn_w[b].transpose();
      d_attn_w[b] = ws.h[b].transpose() * d_scores.col(cb);
      d_attn_b[b] = d_scores.col(cb).sum();
      const auto xb = x.middleCols(static_cast<Eigen::Index>(wide_begin[b]),
                                   proj_w[b].rows());
      d_proj_w[b] = xb.transpose() * dh;
      d_proj_b[b] = dh.colwise().sum();
    }
  }

  // Pack gradients in flatten order.
  Vector g(flatten_parameters().size());
  Eigen::Index at = 0;
  auto put_matrix = [&](const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) g(at++) = m(r, c);
  };
  auto put_vector = [&](const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) g(at++) = v(i);
  };
  for (std::size_t b = 0; b < proj_w.size(); ++b) {
    put_matrix(d_proj_w[b]);
    put_vector(d_proj_b[b]);
    put_vector(d_attn_w[b]);
    g(at++) = d_attn_b[b];
  }
  for (std::size_t l = 0; l < layers; ++l) {
    put_matrix(d_hidden_w[l]);
    put_vector(d_hidden_b[l]);
    put_vector(d_gamma[l]);
    put_vector(d_beta[l]);
  }
  put_vector(d_out_w);
  g(at++) = d_out_b;
  *grad = std::move(g);
  return loss;
}

namespace {

double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

MlpModel init_model(const std::vector<std::pair<std::string, ColumnRange>>& spans,
                    std::size_t feature_count, const MlpParams& params,
                    HuberParams huber, Rng& rng) {
  MlpModel m;
  m.params = params;
  m.huber = huber;
  m.proj_dim = params.proj_dim;
  m.feature_count = feature_count;

  for (const auto& [name, range] : spans) {
    MlpModel::Block b;
    b.name = name;
    b.begin = range.begin;
    b.width = range.width();
    b.wide = b.width >= 2;
    m.blocks.push_back(b);
  }

  auto uniform_matrix = [&](Eigen::Index r, Eigen::Index c, double limit) {
    Matrix out(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) out(i, j) = rng.uniform(-limit, limit);
    return out;
  };

  const auto p = static_cast<Eigen::Index>(params.proj_dim);
  std::size_t wide_count = 0, scalar_count = 0;
  for (const auto& b : m.blocks) (b.wide ? wide_count : scalar_count)++;

  for (const auto& b : m.blocks) {
    if (!b.wide) continue;
    const double lim = glorot_limit(b.width, params.proj_dim);
    m.proj_w.push_back(uniform_matrix(static_cast<Eigen::Index>(b.width), p, lim));
    m.proj_b.push_back(Vector::Zero(p));
    const double alim = glorot_limit(params.proj_dim, 1);
    Matrix aw = uniform_matrix(p, 1, alim);
    m.attn_w.push_back(aw.col(0));
    m.attn_b.push_back(0.0);
  }

  std::size_t in_width = (wide_count > 0 ? params.proj_dim : 0) + scalar_count;
  for (std::size_t width : params.hidden) {
    const double lim = glorot_limit(in_width, width);
    m.hidden_w.push_back(uniform_matrix(static_cast<Eigen::Index>(in_width),
                                        static_cast<Eigen::Index>(width), lim));
    m.hidden_b.push_back(Vector::Zero(static_cast<Eigen::Index>(width)));
    m.gamma.push_back(Vector::Ones(static_cast<Eigen::Index>(width)));
    m.beta.push_back(Vector::Zero(static_cast<Eigen::Index>(width)));
    m.run_mean.push_back(Vector::Zero(static_cast<Eigen::Index>(width)));
    m.run_var.push_back(Vector::Ones(static_cast<Eigen::Index>(width)));
    in_width = width;
  }
  const double olim = glorot_limit(in_width, 1);
  Matrix ow = uniform_matrix(static_cast<Eigen::Index>(in_width), 1, olim);
  m.out_w = ow.col(0);
  m.out_b = 0.0;
  return m;
}

}  // namespace

MlpModel mlp_fit(const Matrix& x, const Vector& y,
                 const std::vector<std::pair<std::string, ColumnRange>>& block_spans,
                 const MlpParams& params, HuberParams huber, RngSeed seed,
                 const Vector* sample_weight) {
  const auto rows = x.rows();
  if (rows == 0 || x.cols() == 0) throw DataError("mlp: shape error, empty matrix");
  if (y.size() != rows) throw DataError("mlp: shape error, label length mismatch");
  if (block_spans.empty()) throw DataError("mlp: block_spans must be nonempty");
  if (params.batch == 0 || static_cast<Eigen::Index>(params.batch) > rows)
    throw ConfigError("mlp: batch size must be in [1, row count]");
  if (sample_weight && sample_weight->size() != rows)
    throw DataError("mlp: weight length mismatch");

  Rng rng(seed);
  MlpModel model =
      init_model(block_spans, static_cast<std::size_t>(x.cols()), params, huber, rng);

  Vector theta = model.flatten_parameters();
  Vector velocity = Vector::Zero(theta.size());

  std::vector<Eigen::Index> order(static_cast<std::size_t>(rows));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += params.batch) {
      const std::size_t count = std::min(params.batch, order.size() - start);
      Matrix xb(static_cast<Eigen::Index>(count), x.cols());
      Vector yb(static_cast<Eigen::Index>(count));
      Vector wb(static_cast<Eigen::Index>(count));
      for (std::size_t i = 0; i < count; ++i) {
        const Eigen::Index src = order[start + i];
        xb.row(static_cast<Eigen::Index>(i)) = x.row(src);
        yb(static_cast<Eigen::Index>(i)) = y(src);
        wb(static_cast<Eigen::Index>(i)) = sample_weight ? (*sample_weight)(src) : 1.0;
      }
      model.set_parameters(theta);
      Vector grad;
      const double loss =
          model.loss_and_gradient(xb, yb, &wb, &grad, /*update_running=*/true);
      if (!std::isfinite(loss))
        throw InternalError("mlp: divergence error at epoch " +
                            std::to_string(epoch) + ", learning rate " +
                            std::to_string(params.learning_rate));
      velocity = params.momentum * velocity - params.learning_rate * grad;
      theta += velocity;
    }
  }
  model.set_parameters(theta);
  return model;
}

}  // namespace hyperfusion
