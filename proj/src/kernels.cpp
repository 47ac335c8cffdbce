#include "gdb/kernels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gdb/geom.hpp"

namespace gdb::kernels {

namespace {

double gaussian_log_density_1d(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

}  // namespace

double prior_log_density(const PriorKernel& kernel, const Coords& z_to,
                         double t_to, const Coords& z_from, double t_from) {
  if (!(t_to > t_from))
    throw std::domain_error("prior_log_density: requires t_to > t_from");
  if (z_to.rows() != z_from.rows())
    throw std::invalid_argument("prior_log_density: shape mismatch");
  const double var = kernel.sigma * kernel.sigma * (t_to - t_from);
  const double dims = 3.0 * static_cast<double>(z_to.rows());
  return -0.5 * (dims * std::log(2.0 * std::numbers::pi * var) +
                 (z_to - z_from).squaredNorm() / var);
}

Coords bridge_score_target(const Coords& r_t, const Coords& z1, double t,
                           const BridgeConfig& cfg) {
  if (!(t >= 0.0 && t < cfg.T))
    throw std::domain_error("bridge_score_target: t must lie in [0, T)");
  return (z1 - r_t) / (cfg.sigma * cfg.sigma * (cfg.T - t));
}

BridgeMarginal bridge_marginal(const Coords& z0, const Coords& z1, double t,
                               const BridgeConfig& cfg) {
  if (!(t >= 0.0 && t <= cfg.T))
    throw std::domain_error("bridge_marginal: t must lie in [0, T]");
  BridgeMarginal out;
  out.mean = (t / cfg.T) * z1 + ((cfg.T - t) / cfg.T) * z0;
  out.std = cfg.sigma * std::sqrt(t * (cfg.T - t)) / cfg.T;
  return out;
}

Coords sample_com_free_gaussian(const Coords& mean, double std, Rng& rng) {
  if (std < 0.0)
    throw std::invalid_argument("sample_com_free_gaussian: std must be >= 0");
  if (std == 0.0) return mean;
  Coords eps(mean.rows(), 3);
  rng.fill_normal(eps);
  if (mean.rows() > 1) eps = geom::project_com_free(eps);
  return mean + std * eps;
}

Coords noised_bridge_sample(const Coords& z0, const Coords& z1, double t,
                            const BridgeConfig& cfg, Rng& rng) {
  const BridgeMarginal marginal = bridge_marginal(z0, z1, t, cfg);
  return sample_com_free_gaussian(marginal.mean, marginal.std, rng);
}

HTransformGrid h_transform_grid(const PriorKernel& prior,
                                std::span<const double> data_conditional,
                                double z0, double t,
                                std::span<const double> grid,
                                double total_time) {
  const std::size_t m = grid.size();
  if (m < 3 || data_conditional.size() != m)
    throw std::invalid_argument("h_transform_grid: bad grid or density size");
  for (std::size_t k = 1; k < m; ++k)
    if (!(grid[k] > grid[k - 1]))
      throw std::invalid_argument("h_transform_grid: grid must be increasing");
  if (grid.back() - grid.front() < 8.0 * prior.sigma)
    throw std::invalid_argument("h_transform_grid: grid narrower than 8 sigma");
  if (!(t >= 0.0 && t < total_time))
    throw std::domain_error("h_transform_grid: t must lie in [0, T)");

  auto trapezoid = [&](auto&& value) {
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < m; ++k)
      acc += 0.5 * (grid[k + 1] - grid[k]) * (value(k) + value(k + 1));
    return acc;
  };

  const double mass = trapezoid([&](std::size_t k) { return data_conditional[k]; });
  if (std::abs(mass - 1.0) > 1e-3)
    throw std::invalid_argument(
        "h_transform_grid: data conditional is not normalized on the grid");

  const double var_t = prior.sigma * prior.sigma * (total_time - t);
  const double var_0 = prior.sigma * prior.sigma * total_time;

  HTransformGrid out;
  out.h.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double z = grid[i];
    out.h[i] = trapezoid([&](std::size_t k) {
      if (data_conditional[k] == 0.0) return 0.0;
      const double log_ratio = gaussian_log_density_1d(grid[k], z, var_t) -
                               gaussian_log_density_1d(grid[k], z0, var_0);
      return data_conditional[k] * std::exp(log_ratio);
    });
    if (!(out.h[i] > 0.0))
      throw std::domain_error("h_transform_grid: h is not positive on the grid");
  }

  out.grad_log_h.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 == m ? i : i + 1;
    out.grad_log_h[i] =
        (std::log(out.h[hi]) - std::log(out.h[lo])) / (grid[hi] - grid[lo]);
  }
  return out;
}

}  // namespace gdb::kernels
