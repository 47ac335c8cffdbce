#include "gdb/training.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gdb/errors.hpp"
#include "gdb/kernels.hpp"

namespace gdb::train {

void TrainConfig::validate(double segment_duration) const {
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (batch_size < 1)
    throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (steps < 0)
    throw std::invalid_argument("TrainConfig: steps must be >= 0");
  if (!(t_clip >= 0.0 && t_clip < 0.5 * segment_duration))
    throw std::invalid_argument("TrainConfig: t_clip must lie in [0, T/2)");
  if (!(adam_eps > 0.0))
    throw std::invalid_argument("TrainConfig: adam_eps must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw std::invalid_argument("TrainConfig: betas must lie in [0, 1)");
  if (weight_decay < 0.0)
    throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
}

void PairDataset::validate() const {
  if (items.empty()) throw std::invalid_argument("PairDataset: empty");
  for (const StatePair& pair : items) {
    pair.z0.validate();
    pair.z1.validate();
    if (pair.z0.features != pair.z1.features)
      throw std::invalid_argument("PairDataset: pair does not share features");
  }
}

int TrajectoryDataset::segments() const {
  if (records.empty())
    throw std::invalid_argument("TrajectoryDataset: empty");
  return static_cast<int>(records.front().frames.size()) - 1;
}

void TrajectoryDataset::validate() const {
  if (records.empty())
    throw std::invalid_argument("TrajectoryDataset: empty");
  const std::size_t frames = records.front().frames.size();
  if (frames < 2)
    throw std::invalid_argument("TrajectoryDataset: records need >= 2 frames");
  for (const TrajectoryRecord& rec : records) {
    if (rec.frames.size() != frames)
      throw std::invalid_argument("TrajectoryDataset: non-uniform N");
    const Eigen::Index n = rec.frames.front().rows();
    if (static_cast<Eigen::Index>(rec.features.size()) != n)
      throw std::invalid_argument("TrajectoryDataset: feature count mismatch");
    for (const Coords& frame : rec.frames)
      if (frame.rows() != n)
        throw std::invalid_argument("TrajectoryDataset: frame shape mismatch");
  }
}

double lambda_weight(double t_local, double sigma, double T,
                     LambdaSchedule schedule) {
  switch (schedule) {
    case LambdaSchedule::constant_one:
      return 1.0;
    case LambdaSchedule::endpoint_scaled: {
      const double s = sigma * sigma * (T - t_local);
      return s * s;
    }
  }
  throw std::invalid_argument("lambda_weight: unknown schedule");
}

namespace {

// Noisy bridge state at local time t for one segment with noise scale sigma.
Coords draw_bridge_state(const Coords& z_start, const Coords& z_end, double t,
                         double sigma, double T, NoiseSchedule schedule,
                         Rng& rng) {
  const kernels::BridgeConfig cfg{sigma, T};
  switch (schedule) {
    case NoiseSchedule::algorithm_literal:
      return kernels::noised_bridge_sample(z_start, z_end, t, cfg, rng);
    case NoiseSchedule::smoothed_initial: {
      // Smoothed start R^0 ~ N(z_start, sigma^2 I) turns the marginal into
      // N((T-t)/T z_start + t/T z_end, sigma^2 (T-t)/T I).
      const Coords mean = (t / T) * z_end + ((T - t) / T) * z_start;
      const double std = sigma * std::sqrt((T - t) / T);
      return kernels::sample_com_free_gaussian(mean, std, rng);
    }
  }
  throw std::invalid_argument("draw_bridge_state: unknown noise schedule");
}

model::BatchItem make_item(const Coords& z_start, const Coords& z_end,
                           const std::vector<std::uint32_t>& features,
                           const Coords& cond, double t_local, double t_model,
                           double sigma, const TrainConfig& cfg,
                           const bridge::BridgeSchedule& sched, Rng& rng) {
  model::BatchItem item;
  item.r_t = draw_bridge_state(z_start, z_end, t_local, sigma, sched.T,
                               cfg.noise_schedule, rng);
  item.r_cond = cond;
  item.features = features;
  item.t = t_model;
  item.target = kernels::bridge_score_target(item.r_t, z_end, t_local,
                                             {sigma, sched.T});
  item.lambda = lambda_weight(t_local, sigma, sched.T, cfg.lambda_schedule);
  return item;
}

}  // namespace

std::vector<model::BatchItem> assemble_pair_batch(
    const PairDataset& dataset, const TrainConfig& cfg,
    const bridge::BridgeSchedule& sched, Rng& rng) {
  dataset.validate();
  std::vector<model::BatchItem> batch;
  batch.reserve(static_cast<std::size_t>(cfg.batch_size));
  for (int b = 0; b < cfg.batch_size; ++b) {
    const StatePair& pair =
        dataset.items[rng.uniform_index(dataset.items.size())];
    const double t = rng.uniform(cfg.t_clip, sched.T - cfg.t_clip);
    batch.push_back(make_item(pair.z0.coords, pair.z1.coords,
                              pair.z0.features, pair.z0.coords, t, t,
                              sched.sigma, cfg, sched, rng));
  }
  return batch;
}

std::vector<model::BatchItem> assemble_traj_batch(
    const TrajectoryDataset& dataset, const TrainConfig& cfg,
    const bridge::BridgeSchedule& sched, Rng& rng) {
  dataset.validate();
  if (dataset.segments() != sched.N)
    throw std::invalid_argument(
        "assemble_traj_batch: dataset segment count does not match schedule");
  std::vector<model::BatchItem> batch;
  batch.reserve(static_cast<std::size_t>(cfg.batch_size));
  for (int b = 0; b < cfg.batch_size; ++b) {
    const TrajectoryRecord& rec =
        dataset.records[rng.uniform_index(dataset.records.size())];
    const double t_global = rng.uniform(0.0, sched.total_time());
    const auto [i, t_raw] = bridge::segment_index(t_global, sched);
    const double t_local =
        std::clamp(t_raw, cfg.t_clip, sched.T - cfg.t_clip);
    const double t_model = static_cast<double>(i) * sched.T + t_local;
    const double sigma_i = bridge::sigma_for_segment(i, sched);
    batch.push_back(make_item(rec.frames[static_cast<std::size_t>(i)],
                              rec.frames[static_cast<std::size_t>(i) + 1],
                              rec.features,
                              rec.frames[static_cast<std::size_t>(i)], t_local,
                              t_model, sigma_i, cfg, sched, rng));
  }
  return batch;
}

AdamState AdamState::zeros_like(const model::ScoreModelParams& params) {
  AdamState state;
  state.m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
  state.v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
  return state;
}

void adam_update(model::ScoreModelParams& params, const Eigen::VectorXd& grad,
                 AdamState& state, const TrainConfig& cfg) {
  if (grad.size() != static_cast<Eigen::Index>(params.size()) ||
      state.m.size() != grad.size() || state.v.size() != grad.size())
    throw std::invalid_argument("adam_update: shape mismatch");
  state.step += 1;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  state.m = b1 * state.m + (1.0 - b1) * grad;
  state.v = b2 * state.v + (1.0 - b2) * grad.cwiseProduct(grad);
  const double mhat_scale =
      1.0 / (1.0 - std::pow(b1, static_cast<double>(state.step)));
  const double vhat_scale =
      1.0 / (1.0 - std::pow(b2, static_cast<double>(state.step)));
  Eigen::VectorXd& p = params.flat();
  if (cfg.weight_decay != 0.0) p *= (1.0 - cfg.learning_rate * cfg.weight_decay);
  p.array() -= cfg.learning_rate * (mhat_scale * state.m.array()) /
               ((vhat_scale * state.v.array()).sqrt() + cfg.adam_eps);
}

void clip_grad_norm(Eigen::VectorXd& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm && norm > 0.0) grad *= max_norm / norm;
}

namespace {

double apply_step(model::ScoreModelParams& params, AdamState& state,
                  std::vector<model::BatchItem>&& batch, const TrainConfig& cfg,
                  int threads) {
  Eigen::VectorXd grad;
  const double loss = model::loss_and_grad(params, batch, grad, threads);
  clip_grad_norm(grad);
  adam_update(params, grad, state, cfg);
  return loss;
}

}  // namespace

double train_step_pairs(model::ScoreModelParams& params, AdamState& state,
                        const PairDataset& dataset, const TrainConfig& cfg,
                        const bridge::BridgeSchedule& sched, Rng& rng,
                        int threads) {
  return apply_step(params, state,
                    assemble_pair_batch(dataset, cfg, sched, rng), cfg,
                    threads);
}

double train_step_traj(model::ScoreModelParams& params, AdamState& state,
                       const TrajectoryDataset& dataset, const TrainConfig& cfg,
                       const bridge::BridgeSchedule& sched, Rng& rng,
                       int threads) {
  return apply_step(params, state,
                    assemble_traj_batch(dataset, cfg, sched, rng), cfg,
                    threads);
}

}  // namespace gdb::train
