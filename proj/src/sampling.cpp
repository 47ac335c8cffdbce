#include "gdb/sampling.hpp"

#include <stdexcept>

#include "gdb/errors.hpp"

namespace gdb::sampling {

void SamplerConfig::validate() const {
  if (steps_per_segment < 1)
    throw std::invalid_argument("SamplerConfig: steps_per_segment must be >= 1");
  sched.validate();
}

namespace {

// Integrates one segment in place; t_offset is the global time of the
// segment start and sigma the segment noise scale.
void integrate_segment(const VectorField& field, Coords& x, const Coords& cond,
                       double t_offset, double sigma,
                       const SamplerConfig& cfg) {
  const double dt = cfg.sched.T / static_cast<double>(cfg.steps_per_segment);
  const double scale =
      cfg.drift_scaling == DriftScaling::sigma_squared ? sigma * sigma : 1.0;
  for (int k = 0; k < cfg.steps_per_segment; ++k) {
    const double t = t_offset + static_cast<double>(k) * dt;
    x += dt * scale * field(x, t, cond);
    if (!x.allFinite())
      throw DivergenceError("sample: non-finite state during integration",
                            static_cast<std::size_t>(k));
  }
}

VectorField wrap_model(const model::ScoreModelParams& params,
                       const std::vector<std::uint32_t>& features) {
  return [&params, features](const Coords& r, double t, const Coords& cond) {
    return model::forward(params, r, cond, features, t);
  };
}

}  // namespace

geom::GeometricState sample_bridge_field(const VectorField& field,
                                         const geom::GeometricState& z0,
                                         const SamplerConfig& cfg) {
  cfg.validate();
  z0.validate();
  Coords x = z0.coords;
  integrate_segment(field, x, z0.coords, 0.0, cfg.sched.sigma, cfg);
  return {x, z0.features};
}

geom::GeometricState sample_bridge(const model::ScoreModelParams& params,
                                   const geom::GeometricState& z0,
                                   const SamplerConfig& cfg) {
  return sample_bridge_field(wrap_model(params, z0.features), z0, cfg);
}

std::vector<geom::GeometricState> sample_chain_field(
    const VectorField& field, const geom::GeometricState& z0,
    const SamplerConfig& cfg) {
  cfg.validate();
  z0.validate();
  std::vector<geom::GeometricState> chain;
  chain.reserve(static_cast<std::size_t>(cfg.sched.N) + 1);
  chain.push_back(z0);
  Coords x = z0.coords;
  for (int i = 0; i < cfg.sched.N; ++i) {
    const Coords cond = x;  // segment-start state
    integrate_segment(field, x, cond, static_cast<double>(i) * cfg.sched.T,
                      bridge::sigma_for_segment(i, cfg.sched), cfg);
    chain.push_back({x, z0.features});
  }
  return chain;
}

std::vector<geom::GeometricState> sample_chain(
    const model::ScoreModelParams& params, const geom::GeometricState& z0,
    const SamplerConfig& cfg) {
  return sample_chain_field(wrap_model(params, z0.features), z0, cfg);
}

}  // namespace gdb::sampling
