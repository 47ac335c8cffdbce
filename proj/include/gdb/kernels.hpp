#pragma once

#include <span>
#include <vector>

#include "gdb/rng.hpp"
#include "gdb/types.hpp"

namespace gdb::kernels {

/// Scaled Brownian prior dR = sigma dW with Gaussian transition kernel
/// N(z_to; z_from, sigma^2 (t_to - t_from) I).
struct PriorKernel {
  double sigma = 0.5;
};

/// The sigma / segment-duration pair shared by the closed-form bridge
/// quantities below.
struct BridgeConfig {
  double sigma = 0.5;
  double T = 1.0;
};

/// Isotropic Gaussian over coordinates: N(mean, std^2 I) on the CoM-free
/// subspace; std is exactly 0 at the bridge endpoints.
struct BridgeMarginal {
  Coords mean;
  double std = 0.0;
};

/// Log transition density of the prior over all 3n coordinates.
/// Throws std::domain_error unless t_to > t_from.
double prior_log_density(const PriorKernel& kernel, const Coords& z_to,
                         double t_to, const Coords& z_from, double t_from);

/// The matching target (z1 - r_t) / (sigma^2 (T - t)), i.e. the gradient of
/// prior_log_density(z1, T | ., t) at r_t. Throws std::domain_error at t >= T.
Coords bridge_score_target(const Coords& r_t, const Coords& z1, double t,
                           const BridgeConfig& cfg);

/// Pinned-bridge marginal: mean (t/T) z1 + ((T-t)/T) z0 and isotropic
/// std sigma sqrt(t (T-t)) / T. Valid for 0 <= t <= T.
BridgeMarginal bridge_marginal(const Coords& z0, const Coords& z1, double t,
                               const BridgeConfig& cfg);

/// mean + std * eps' where eps' is i.i.d. standard noise projected to the
/// CoM-free subspace. Single-atom inputs skip the projection (it would
/// annihilate all noise).
Coords sample_com_free_gaussian(const Coords& mean, double std, Rng& rng);

/// One draw from bridge_marginal via sample_com_free_gaussian; returns the
/// endpoints exactly at t = 0 and t = T.
Coords noised_bridge_sample(const Coords& z0, const Coords& z1, double t,
                            const BridgeConfig& cfg, Rng& rng);

struct HTransformGrid {
  std::vector<double> h;           // h(z, t; z0) for each grid z
  std::vector<double> grad_log_h;  // d/dz log h via central differences
};

/// 1-D h-transform oracle: integrates
///   h(z, t; z0) = integral p(z', T | z, t) q_data(z' | z0) / p(z', T | z0, 0) dz'
/// with the trapezoid rule over `grid`, where q_data is given by its values
/// `data_conditional` on the same grid. Throws std::invalid_argument when the
/// grid is not strictly increasing or too narrow (< 8 sigma), or when the
/// density does not integrate to 1 within 1e-3 on the grid.
HTransformGrid h_transform_grid(const PriorKernel& prior,
                                std::span<const double> data_conditional,
                                double z0, double t,
                                std::span<const double> grid,
                                double total_time = 1.0);

}  // namespace gdb::kernels
