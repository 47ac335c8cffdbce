#include "gdb/bridge.hpp"

#include <cmath>
#include <stdexcept>

#include "gdb/geom.hpp"

namespace gdb::bridge {

void BridgeSchedule::validate() const {
  if (!(sigma > 0.0)) throw std::invalid_argument("BridgeSchedule: sigma must be > 0");
  if (!(T > 0.0)) throw std::invalid_argument("BridgeSchedule: T must be > 0");
  if (N < 1) throw std::invalid_argument("BridgeSchedule: N must be >= 1");
}

SegmentTime segment_index(double t, const BridgeSchedule& sched) {
  if (!(t >= 0.0 && t < sched.total_time()))
    throw std::out_of_range("segment_index: t must lie in [0, N*T)");
  int i = static_cast<int>(std::floor(t / sched.T));
  if (i > sched.N - 1) i = sched.N - 1;  // guards t just below N*T
  return {i, t - static_cast<double>(i) * sched.T};
}

double sigma_for_segment(int i, const BridgeSchedule& sched) {
  if (i < 0 || i >= sched.N)
    throw std::out_of_range("sigma_for_segment: segment index out of range");
  return (static_cast<double>(sched.N - i) / static_cast<double>(sched.N)) *
         sched.sigma;
}

std::vector<Coords> simulate_bridge_sde(const Coords& z0, const Coords& z1,
                                        const kernels::BridgeConfig& cfg,
                                        int steps, const NoiseSource& noise) {
  if (steps < 1)
    throw std::invalid_argument("simulate_bridge_sde: steps must be >= 1");
  if (z0.rows() != z1.rows())
    throw std::invalid_argument("simulate_bridge_sde: endpoint shape mismatch");

  const double dt = cfg.T / static_cast<double>(steps);
  const double sqrt_dt = std::sqrt(dt);
  std::vector<Coords> path;
  path.reserve(static_cast<std::size_t>(steps) + 1);
  path.push_back(z0);

  Coords x = z0;
  for (int k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    x += dt / (cfg.T - t) * (z1 - x);
    if (cfg.sigma != 0.0) {
      Coords eps = noise(k);
      if (eps.rows() > 1) eps = geom::project_com_free(eps);
      x += cfg.sigma * sqrt_dt * eps;
    }
    path.push_back(x);
  }
  return path;
}

std::vector<Coords> simulate_bridge_sde(const Coords& z0, const Coords& z1,
                                        const kernels::BridgeConfig& cfg,
                                        int steps, Rng& rng) {
  const Eigen::Index n = z0.rows();
  return simulate_bridge_sde(z0, z1, cfg, steps, [&](int) {
    Coords eps(n, 3);
    rng.fill_normal(eps);
    return eps;
  });
}

}  // namespace gdb::bridge
