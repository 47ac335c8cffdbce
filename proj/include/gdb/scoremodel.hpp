#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gdb/rng.hpp"
#include "gdb/types.hpp"

namespace gdb::model {

struct ModelConfig {
  int feature_embed_dim = 32;
  int hidden_width = 64;
  int n_layers = 2;
  int time_embed_dim = 16;
  int max_atom_types = 16;

  int message_input_dim() const {
    return 2 * feature_embed_dim + 3 + time_embed_dim;
  }
  void validate() const;
};

/// Sinusoidal features [sin(w_k t), ..., cos(w_k t), ...] with the w_k
/// geometrically spaced in [1, 1000]. dim must be even.
Eigen::VectorXd time_embedding(double t, int dim);

/// All weights of the conditional vector field, stored in one flat float64
/// buffer so the optimizer, serialization, and finite-difference checks can
/// treat parameters uniformly. Named views are exposed per tensor.
///
/// Layout per layer: a two-layer message MLP over pair invariants followed
/// by two scalar gate MLPs (one weighting current-coordinate differences,
/// one weighting condition-coordinate differences). A single atom-type
/// embedding table is shared by all layers.
class ScoreModelParams {
 public:
  struct TensorInfo {
    std::string name;
    std::size_t offset;
    int rows;
    int cols;  // 1 for vectors/scalars
    std::size_t size() const {
      return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    }
  };

  ScoreModelParams() = default;
  explicit ScoreModelParams(const ModelConfig& cfg);  // zero-initialized

  /// Embedding and weight entries uniform in +-1/sqrt(fan_in); biases and
  /// the final gate layers zero, so the initial field is the zero field.
  void init_random(Rng& rng);

  const ModelConfig& config() const { return cfg_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }

  Eigen::VectorXd& flat() { return data_; }
  const Eigen::VectorXd& flat() const { return data_; }
  std::size_t size() const { return static_cast<std::size_t>(data_.size()); }

  Eigen::Map<Eigen::MatrixXd> view(std::size_t tensor_index);
  Eigen::Map<const Eigen::MatrixXd> view(std::size_t tensor_index) const;

  // Tensor indices for the fixed layout.
  std::size_t embedding_index() const { return 0; }
  enum LayerTensor {
    kMsgW1 = 0, kMsgB1, kMsgW2, kMsgB2,
    kGateXW1, kGateXB1, kGateXW2, kGateXB2,
    kGateCW1, kGateCB1, kGateCW2, kGateCB2,
    kTensorsPerLayer
  };
  std::size_t layer_tensor_index(int layer, LayerTensor which) const {
    return 1 + static_cast<std::size_t>(layer) * kTensorsPerLayer + which;
  }

 private:
  ModelConfig cfg_;
  std::vector<TensorInfo> tensors_;
  Eigen::VectorXd data_;
};

/// Maps a tensor of `params`-shaped flat buffer `buf` (e.g. a gradient).
Eigen::Map<Eigen::MatrixXd> view_like(const ScoreModelParams& params,
                                      Eigen::VectorXd& buf,
                                      std::size_t tensor_index);

/// The conditional vector field v(r_t, t; r_cond). Each layer computes
/// invariant pair messages from the atom-type embeddings, the squared pair
/// distances of the current and condition coordinates, their inner product,
/// and the time embedding; it then moves the current coordinates by gated
/// sums of pair difference vectors. The returned field is the total
/// coordinate update, projected to the CoM-free subspace.
///
/// SO(3)-equivariant, T(3)-invariant, and permutation-equivariant by
/// construction. Requires n >= 2 (no pair invariants exist for one atom).
Coords forward(const ScoreModelParams& params, const Coords& r_t,
               const Coords& r_cond,
               std::span<const std::uint32_t> features, double t);

struct BatchItem {
  Coords r_t;
  Coords r_cond;
  std::vector<std::uint32_t> features;
  double t = 0.0;       // time fed to the model (global time in chain mode)
  Coords target;        // regression target field
  double lambda = 1.0;  // loss weight
};

/// Mean over the batch of lambda * |v(r_t, t; r_cond) - target|^2 (summed
/// over atoms and axes), with exact reverse-mode gradients accumulated into
/// `grad` (params-shaped, overwritten). Items are evaluated independently
/// (parallel when threads > 1) and reduced in batch order, so the result is
/// identical for every thread count. Throws DivergenceError on a non-finite
/// loss.
double loss_and_grad(const ScoreModelParams& params,
                     std::span<const BatchItem> batch, Eigen::VectorXd& grad,
                     int threads = 1);

/// Loss only, same reduction order as loss_and_grad.
double batch_loss(const ScoreModelParams& params,
                  std::span<const BatchItem> batch, int threads = 1);

}  // namespace gdb::model
