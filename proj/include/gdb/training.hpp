#pragma once

#include <cstdint>
#include <vector>

#include "gdb/bridge.hpp"
#include "gdb/geom.hpp"
#include "gdb/rng.hpp"
#include "gdb/scoremodel.hpp"

namespace gdb::train {

enum class LambdaSchedule { constant_one, endpoint_scaled };
enum class NoiseSchedule { algorithm_literal, smoothed_initial };

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int steps = 1000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  LambdaSchedule lambda_schedule = LambdaSchedule::endpoint_scaled;
  NoiseSchedule noise_schedule = NoiseSchedule::algorithm_literal;
  double t_clip = 1e-3;  // times are clipped to [t_clip, T - t_clip]
  std::uint64_t seed = 0;

  void validate(double segment_duration) const;
};

// Global gradient-norm clip applied before every optimizer update.
inline constexpr double kGradClipNorm = 10.0;

/// Endpoint-state couples sharing atoms and features.
struct StatePair {
  geom::GeometricState z0;
  geom::GeometricState z1;
};

struct PairDataset {
  std::vector<StatePair> items;
  void validate() const;
};

/// An ordered trajectory of N+1 frames over fixed atoms.
struct TrajectoryRecord {
  std::vector<std::uint32_t> features;
  std::vector<Coords> frames;  // N + 1 entries
};

struct TrajectoryDataset {
  std::vector<TrajectoryRecord> records;

  /// Segment count N (uniform across records).
  int segments() const;
  void validate() const;
};

/// lambda(t): constant_one -> 1; endpoint_scaled -> (sigma^2 (T - t))^2,
/// which rewrites the loss as |(z1 - R^t) - sigma^2 (T - t) v|^2.
double lambda_weight(double t_local, double sigma, double T,
                     LambdaSchedule schedule);

/// One batch of the endpoint-pair objective: per item draws a pair, a time
/// in [t_clip, T - t_clip], a noisy bridge state under the selected noise
/// schedule, and the score target (z1 - R^t) / (sigma^2 (T - t)).
std::vector<model::BatchItem> assemble_pair_batch(const PairDataset& dataset,
                                                  const TrainConfig& cfg,
                                                  const bridge::BridgeSchedule& sched,
                                                  Rng& rng);

/// One batch of the trajectory-guided objective: per item draws a global
/// time in [0, N T), locates the segment, builds the segment bridge state
/// with sigma_i, and targets (z_{i+1} - R^t') / (sigma_i^2 (T - t')). The
/// model sees the global time and the segment-start state as condition.
std::vector<model::BatchItem> assemble_traj_batch(
    const TrajectoryDataset& dataset, const TrainConfig& cfg,
    const bridge::BridgeSchedule& sched, Rng& rng);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;

  static AdamState zeros_like(const model::ScoreModelParams& params);
};

/// Decoupled-weight-decay adaptive-moment update with bias correction.
void adam_update(model::ScoreModelParams& params, const Eigen::VectorXd& grad,
                 AdamState& state, const TrainConfig& cfg);

/// Clips the gradient to kGradClipNorm (global L2), in place.
void clip_grad_norm(Eigen::VectorXd& grad, double max_norm = kGradClipNorm);

/// Assemble + loss/grad + clip + one optimizer update. Returns the batch loss.
double train_step_pairs(model::ScoreModelParams& params, AdamState& state,
                        const PairDataset& dataset, const TrainConfig& cfg,
                        const bridge::BridgeSchedule& sched, Rng& rng,
                        int threads = 1);
double train_step_traj(model::ScoreModelParams& params, AdamState& state,
                       const TrajectoryDataset& dataset, const TrainConfig& cfg,
                       const bridge::BridgeSchedule& sched, Rng& rng,
                       int threads = 1);

}  // namespace gdb::train
