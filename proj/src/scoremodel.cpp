#include "gdb/scoremodel.hpp"

#include <cmath>
#include <stdexcept>

#include "gdb/errors.hpp"
#include "gdb/parallel.hpp"

namespace gdb::model {

namespace {

using Eigen::ArrayXXd;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

ArrayXXd sigmoid(const ArrayXXd& z) { return 1.0 / (1.0 + (-z).exp()); }

ArrayXXd silu(const ArrayXXd& z) { return z * sigmoid(z); }

// d/dz silu(z) = s(z) (1 + z (1 - s(z)))
ArrayXXd silu_grad(const ArrayXXd& z) {
  const ArrayXXd s = sigmoid(z);
  return s * (1.0 + z * (1.0 - s));
}

// Ordered pair p -> (i, j), i-major with j skipping i.
inline void pair_atoms(int p, int n, int& i, int& j) {
  i = p / (n - 1);
  const int r = p % (n - 1);
  j = r < i ? r : r + 1;
}

}  // namespace

void ModelConfig::validate() const {
  if (feature_embed_dim < 1 || hidden_width < 1 || n_layers < 1 ||
      time_embed_dim < 1 || max_atom_types < 1)
    throw std::invalid_argument("ModelConfig: all dimensions must be >= 1");
  if (time_embed_dim % 2 != 0)
    throw std::invalid_argument("ModelConfig: time_embed_dim must be even");
}

Eigen::VectorXd time_embedding(double t, int dim) {
  if (dim < 2 || dim % 2 != 0)
    throw std::invalid_argument("time_embedding: dim must be even and >= 2");
  const int k = dim / 2;
  Eigen::VectorXd out(dim);
  for (int i = 0; i < k; ++i) {
    const double omega =
        k == 1 ? 1.0
               : std::pow(1000.0, static_cast<double>(i) /
                                      static_cast<double>(k - 1));
    out(i) = std::sin(omega * t);
    out(k + i) = std::cos(omega * t);
  }
  return out;
}

ScoreModelParams::ScoreModelParams(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int e = cfg_.feature_embed_dim;
  const int h = cfg_.hidden_width;
  const int d = cfg_.message_input_dim();

  std::size_t offset = 0;
  auto add = [&](const std::string& name, int rows, int cols) {
    tensors_.push_back({name, offset, rows, cols});
    offset += tensors_.back().size();
  };

  add("embedding", e, cfg_.max_atom_types);
  for (int l = 0; l < cfg_.n_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    add(p + "msg_w1", h, d);
    add(p + "msg_b1", h, 1);
    add(p + "msg_w2", h, h);
    add(p + "msg_b2", h, 1);
    add(p + "gate_x_w1", h, h);
    add(p + "gate_x_b1", h, 1);
    add(p + "gate_x_w2", 1, h);
    add(p + "gate_x_b2", 1, 1);
    add(p + "gate_c_w1", h, h);
    add(p + "gate_c_b1", h, 1);
    add(p + "gate_c_w2", 1, h);
    add(p + "gate_c_b2", 1, 1);
  }
  data_ = VectorXd::Zero(static_cast<Eigen::Index>(offset));
}

void ScoreModelParams::init_random(Rng& rng) {
  for (std::size_t ti = 0; ti < tensors_.size(); ++ti) {
    const TensorInfo& info = tensors_[ti];
    // Final gate layers stay zero: the initial field is the zero field.
    if (info.name.find("gate_x_w2") != std::string::npos ||
        info.name.find("gate_c_w2") != std::string::npos ||
        info.name.find("_b2") != std::string::npos ||
        info.name.find("msg_b") != std::string::npos ||
        info.name.find("_b1") != std::string::npos)
      continue;
    const int fan_in =
        info.name == "embedding" ? cfg_.feature_embed_dim : info.cols;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    auto block = data_.segment(static_cast<Eigen::Index>(info.offset),
                               static_cast<Eigen::Index>(info.size()));
    for (Eigen::Index k = 0; k < block.size(); ++k)
      block(k) = rng.uniform(-bound, bound);
  }
}

Eigen::Map<Eigen::MatrixXd> ScoreModelParams::view(std::size_t tensor_index) {
  const TensorInfo& info = tensors_.at(tensor_index);
  return {data_.data() + info.offset, info.rows, info.cols};
}

Eigen::Map<const Eigen::MatrixXd> ScoreModelParams::view(
    std::size_t tensor_index) const {
  const TensorInfo& info = tensors_.at(tensor_index);
  return {data_.data() + info.offset, info.rows, info.cols};
}

Eigen::Map<Eigen::MatrixXd> view_like(const ScoreModelParams& params,
                                      Eigen::VectorXd& buf,
                                      std::size_t tensor_index) {
  const auto& info = params.tensors().at(tensor_index);
  return {buf.data() + info.offset, info.rows, info.cols};
}

namespace {

struct LayerTrace {
  Coords x_in;  // layer input coordinates
  MatrixXd u, pre1, h1, pre2, msg;
  MatrixXd gx_pre, gx_hidden, gc_pre, gc_hidden;
  RowVectorXd gate_x, gate_c;
};

struct Trace {
  std::vector<LayerTrace> layers;
  MatrixXd cond_diff;  // 3 x P, fixed condition differences
  Coords x_final;
};

void check_inputs(const ScoreModelParams& params, const Coords& r_t,
                  const Coords& r_cond,
                  std::span<const std::uint32_t> features) {
  const int n = static_cast<int>(r_t.rows());
  if (n < 2)
    throw std::invalid_argument(
        "score model requires at least two atoms: no invariant pair features "
        "exist for a single atom");
  if (r_cond.rows() != n ||
      static_cast<int>(features.size()) != n)
    throw std::invalid_argument("score model: input shape mismatch");
  for (const std::uint32_t f : features)
    if (f >= static_cast<std::uint32_t>(params.config().max_atom_types))
      throw std::invalid_argument("score model: atom type id out of range");
}

Coords forward_impl(const ScoreModelParams& params, const Coords& r_t,
                    const Coords& r_cond,
                    std::span<const std::uint32_t> features, double t,
                    Trace* trace) {
  const ModelConfig& cfg = params.config();
  const int n = static_cast<int>(r_t.rows());
  const int pair_count = n * (n - 1);
  const int e = cfg.feature_embed_dim;
  const int d_in = cfg.message_input_dim();
  const double pair_weight = 1.0 / static_cast<double>(n - 1);

  const VectorXd tau = time_embedding(t, cfg.time_embed_dim);
  const auto embedding = params.view(params.embedding_index());

  MatrixXd cond_diff(3, pair_count);
  for (int p = 0; p < pair_count; ++p) {
    int i, j;
    pair_atoms(p, n, i, j);
    cond_diff.col(p) = (r_cond.row(i) - r_cond.row(j)).transpose();
  }

  if (trace) {
    trace->layers.resize(static_cast<std::size_t>(cfg.n_layers));
    trace->cond_diff = cond_diff;
  }

  Coords x = r_t;
  for (int l = 0; l < cfg.n_layers; ++l) {
    const auto w1 = params.view(params.layer_tensor_index(l, ScoreModelParams::kMsgW1));
    const auto b1 = params.view(params.layer_tensor_index(l, ScoreModelParams::kMsgB1));
    const auto w2 = params.view(params.layer_tensor_index(l, ScoreModelParams::kMsgW2));
    const auto b2 = params.view(params.layer_tensor_index(l, ScoreModelParams::kMsgB2));
    const auto gx_w1 = params.view(params.layer_tensor_index(l, ScoreModelParams::kGateXW1));
    const auto gx_b1 = params.view(params.layer_tensor_index(l, ScoreModelParams::kGateXB1));
    const auto gx_w2 = params.view(params.layer_tensor_index(l, ScoreModelParams::kGateXW2));
    const auto gx_b2 = params.view(params.layer_tensor_index(l, ScoreModelParams::kGateXB2));
    const auto gc_w1 = params.view(params.layer_tensor_index(l, ScoreModelParams::kGateCW1));
    const auto gc_b1 = params.view(params.layer_tensor_index(l, ScoreModelParams::kGateCB1));
    const auto gc_w2 = params.view(params.layer_tensor_index(l, ScoreModelParams::kGateCW2));
    const auto gc_b2 = params.view(params.layer_tensor_index(l, ScoreModelParams::kGateCB2));

    MatrixXd u(d_in, pair_count);
    for (int p = 0; p < pair_count; ++p) {
      int i, j;
      pair_atoms(p, n, i, j);
      const Eigen::Vector3d dx = (x.row(i) - x.row(j)).transpose();
      const Eigen::Vector3d dc = cond_diff.col(p);
      u.block(0, p, e, 1) = embedding.col(features[i]);
      u.block(e, p, e, 1) = embedding.col(features[j]);
      u(2 * e, p) = dx.squaredNorm();
      u(2 * e + 1, p) = dc.squaredNorm();
      u(2 * e + 2, p) = dx.dot(dc);
      u.block(2 * e + 3, p, cfg.time_embed_dim, 1) = tau;
    }

    MatrixXd pre1 = (w1 * u).colwise() + b1.col(0);
    MatrixXd h1 = silu(pre1.array());
    MatrixXd pre2 = (w2 * h1).colwise() + b2.col(0);
    MatrixXd msg = silu(pre2.array());

    MatrixXd gx_pre = (gx_w1 * msg).colwise() + gx_b1.col(0);
    MatrixXd gx_hidden = silu(gx_pre.array());
    RowVectorXd gate_x =
        (gx_w2 * gx_hidden).array() + gx_b2(0, 0);

    MatrixXd gc_pre = (gc_w1 * msg).colwise() + gc_b1.col(0);
    MatrixXd gc_hidden = silu(gc_pre.array());
    RowVectorXd gate_c =
        (gc_w2 * gc_hidden).array() + gc_b2(0, 0);

    Coords delta = Coords::Zero(n, 3);
    for (int p = 0; p < pair_count; ++p) {
      int i, j;
      pair_atoms(p, n, i, j);
      const Eigen::Vector3d dx = (x.row(i) - x.row(j)).transpose();
      delta.row(i) += pair_weight * (gate_x(p) * dx.transpose() +
                                     gate_c(p) * cond_diff.col(p).transpose());
    }

    if (trace) {
      LayerTrace& lt = trace->layers[static_cast<std::size_t>(l)];
      lt.x_in = x;
      lt.u = std::move(u);
      lt.pre1 = std::move(pre1);
      lt.h1 = std::move(h1);
      lt.pre2 = std::move(pre2);
      lt.msg = std::move(msg);
      lt.gx_pre = std::move(gx_pre);
      lt.gx_hidden = std::move(gx_hidden);
      lt.gc_pre = std::move(gc_pre);
      lt.gc_hidden = std::move(gc_hidden);
      lt.gate_x = gate_x;
      lt.gate_c = gate_c;
    }

    x += delta;
  }

  if (trace) trace->x_final = x;

  Coords v = x - r_t;
  // Project the field onto the CoM-free subspace.
  return v.rowwise() - v.colwise().mean();
}

// Accumulates parameter gradients for one item given dL/d(projected output).
void backward_impl(const ScoreModelParams& params,
                   std::span<const std::uint32_t> features, const Trace& trace,
                   const Coords& grad_output, VectorXd& grad) {
  const ModelConfig& cfg = params.config();
  const int n = static_cast<int>(trace.layers.front().x_in.rows());
  const int pair_count = n * (n - 1);
  const int e = cfg.feature_embed_dim;
  const double pair_weight = 1.0 / static_cast<double>(n - 1);

  auto grad_view = [&](std::size_t idx) { return view_like(params, grad, idx); };
  auto grad_embedding = grad_view(params.embedding_index());

  // The projection is self-adjoint: subtract the column mean.
  Coords g_x = grad_output.rowwise() - grad_output.colwise().mean();

  for (int l = cfg.n_layers - 1; l >= 0; --l) {
    const LayerTrace& lt = trace.layers[static_cast<std::size_t>(l)];
    const auto w1 = params.view(params.layer_tensor_index(l, ScoreModelParams::kMsgW1));
    const auto w2 = params.view(params.layer_tensor_index(l, ScoreModelParams::kMsgW2));
    const auto gx_w1 = params.view(params.layer_tensor_index(l, ScoreModelParams::kGateXW1));
    const auto gx_w2 = params.view(params.layer_tensor_index(l, ScoreModelParams::kGateXW2));
    const auto gc_w1 = params.view(params.layer_tensor_index(l, ScoreModelParams::kGateCW1));
    const auto gc_w2 = params.view(params.layer_tensor_index(l, ScoreModelParams::kGateCW2));

    auto g_w1 = grad_view(params.layer_tensor_index(l, ScoreModelParams::kMsgW1));
    auto g_b1 = grad_view(params.layer_tensor_index(l, ScoreModelParams::kMsgB1));
    auto g_w2 = grad_view(params.layer_tensor_index(l, ScoreModelParams::kMsgW2));
    auto g_b2 = grad_view(params.layer_tensor_index(l, ScoreModelParams::kMsgB2));
    auto g_gx_w1 = grad_view(params.layer_tensor_index(l, ScoreModelParams::kGateXW1));
    auto g_gx_b1 = grad_view(params.layer_tensor_index(l, ScoreModelParams::kGateXB1));
    auto g_gx_w2 = grad_view(params.layer_tensor_index(l, ScoreModelParams::kGateXW2));
    auto g_gx_b2 = grad_view(params.layer_tensor_index(l, ScoreModelParams::kGateXB2));
    auto g_gc_w1 = grad_view(params.layer_tensor_index(l, ScoreModelParams::kGateCW1));
    auto g_gc_b1 = grad_view(params.layer_tensor_index(l, ScoreModelParams::kGateCB1));
    auto g_gc_w2 = grad_view(params.layer_tensor_index(l, ScoreModelParams::kGateCW2));
    auto g_gc_b2 = grad_view(params.layer_tensor_index(l, ScoreModelParams::kGateCB2));

    // dL/d(gate scalars) and the direct dL/d(pair difference) term.
    RowVectorXd g_gate_x(pair_count), g_gate_c(pair_count);
    MatrixXd g_diff(3, pair_count);
    for (int p = 0; p < pair_count; ++p) {
      int i, j;
      pair_atoms(p, n, i, j);
      const Eigen::Vector3d gi = g_x.row(i).transpose();
      const Eigen::Vector3d dx = (lt.x_in.row(i) - lt.x_in.row(j)).transpose();
      g_gate_x(p) = pair_weight * gi.dot(dx);
      g_gate_c(p) = pair_weight * gi.dot(trace.cond_diff.col(p));
      g_diff.col(p) = pair_weight * lt.gate_x(p) * gi;
    }

    // gate_x head
    g_gx_w2.noalias() += g_gate_x * lt.gx_hidden.transpose();
    g_gx_b2(0, 0) += g_gate_x.sum();
    MatrixXd g_gx_pre =
        (gx_w2.transpose() * g_gate_x).array() * silu_grad(lt.gx_pre.array());
    g_gx_w1.noalias() += g_gx_pre * lt.msg.transpose();
    g_gx_b1.col(0).noalias() += g_gx_pre.rowwise().sum();
    MatrixXd g_msg = gx_w1.transpose() * g_gx_pre;

    // gate_c head
    g_gc_w2.noalias() += g_gate_c * lt.gc_hidden.transpose();
    g_gc_b2(0, 0) += g_gate_c.sum();
    MatrixXd g_gc_pre =
        (gc_w2.transpose() * g_gate_c).array() * silu_grad(lt.gc_pre.array());
    g_gc_w1.noalias() += g_gc_pre * lt.msg.transpose();
    g_gc_b1.col(0).noalias() += g_gc_pre.rowwise().sum();
    g_msg.noalias() += gc_w1.transpose() * g_gc_pre;

    // message MLP
    MatrixXd g_pre2 = g_msg.array() * silu_grad(lt.pre2.array());
    g_w2.noalias() += g_pre2 * lt.h1.transpose();
    g_b2.col(0).noalias() += g_pre2.rowwise().sum();
    MatrixXd g_h1 = w2.transpose() * g_pre2;
    MatrixXd g_pre1 = g_h1.array() * silu_grad(lt.pre1.array());
    g_w1.noalias() += g_pre1 * lt.u.transpose();
    g_b1.col(0).noalias() += g_pre1.rowwise().sum();
    MatrixXd g_u = w1.transpose() * g_pre1;

    // Route input gradients: embeddings, squared norms, inner product.
    Coords g_x_in = g_x;  // identity path of x + delta
    for (int p = 0; p < pair_count; ++p) {
      int i, j;
      pair_atoms(p, n, i, j);
      grad_embedding.col(features[i]) += g_u.block(0, p, e, 1);
      grad_embedding.col(features[j]) += g_u.block(e, p, e, 1);
      const Eigen::Vector3d dx = (lt.x_in.row(i) - lt.x_in.row(j)).transpose();
      Eigen::Vector3d gd = g_diff.col(p);
      gd += 2.0 * g_u(2 * e, p) * dx;
      gd += g_u(2 * e + 2, p) * trace.cond_diff.col(p);
      g_x_in.row(i) += gd.transpose();
      g_x_in.row(j) -= gd.transpose();
    }
    g_x = std::move(g_x_in);
  }
}

}  // namespace

Coords forward(const ScoreModelParams& params, const Coords& r_t,
               const Coords& r_cond, std::span<const std::uint32_t> features,
               double t) {
  check_inputs(params, r_t, r_cond, features);
  return forward_impl(params, r_t, r_cond, features, t, nullptr);
}

namespace {

double item_loss_and_grad(const ScoreModelParams& params, const BatchItem& item,
                          VectorXd* grad) {
  Trace trace;
  const Coords v = forward_impl(params, item.r_t, item.r_cond, item.features,
                                item.t, grad ? &trace : nullptr);
  const Coords resid = v - item.target;
  const double loss = item.lambda * resid.squaredNorm();
  if (grad) {
    const Coords g_out = 2.0 * item.lambda * resid;
    backward_impl(params, item.features, trace, g_out, *grad);
  }
  return loss;
}

void check_batch(const ScoreModelParams& params,
                 std::span<const BatchItem> batch) {
  if (batch.empty())
    throw std::invalid_argument("loss_and_grad: batch must be non-empty");
  for (const BatchItem& item : batch) {
    check_inputs(params, item.r_t, item.r_cond, item.features);
    if (item.target.rows() != item.r_t.rows())
      throw std::invalid_argument("loss_and_grad: target shape mismatch");
  }
}

}  // namespace

double loss_and_grad(const ScoreModelParams& params,
                     std::span<const BatchItem> batch, Eigen::VectorXd& grad,
                     int threads) {
  check_batch(params, batch);
  const std::size_t b = batch.size();
  std::vector<double> losses(b, 0.0);
  std::vector<VectorXd> item_grads(
      b, VectorXd::Zero(static_cast<Eigen::Index>(params.size())));
  parallel_for(b, threads, [&](std::size_t k) {
    losses[k] = item_loss_and_grad(params, batch[k], &item_grads[k]);
  });

  grad = VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
  double total = 0.0;
  for (std::size_t k = 0; k < b; ++k) {
    total += losses[k];
    grad += item_grads[k];
  }
  const double scale = 1.0 / static_cast<double>(b);
  grad *= scale;
  total *= scale;
  if (!std::isfinite(total))
    throw DivergenceError("loss_and_grad: non-finite loss", 0);
  return total;
}

double batch_loss(const ScoreModelParams& params,
                  std::span<const BatchItem> batch, int threads) {
  check_batch(params, batch);
  const std::size_t b = batch.size();
  std::vector<double> losses(b, 0.0);
  parallel_for(b, threads, [&](std::size_t k) {
    losses[k] = item_loss_and_grad(params, batch[k], nullptr);
  });
  double total = 0.0;
  for (std::size_t k = 0; k < b; ++k) total += losses[k];
  return total / static_cast<double>(b);
}

}  // namespace gdb::model
