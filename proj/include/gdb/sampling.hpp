#pragma once

#include <functional>
#include <vector>

#include "gdb/bridge.hpp"
#include "gdb/geom.hpp"
#include "gdb/scoremodel.hpp"

namespace gdb::sampling {

enum class DriftScaling {
  sigma_squared,  // dR/dt = sigma_i^2 v(R, t; cond): endpoint-hitting for any sigma
  literal         // dR/dt = v(R, t; cond), the plain solver form
};

struct SamplerConfig {
  int steps_per_segment = 10;
  DriftScaling drift_scaling = DriftScaling::sigma_squared;
  bridge::BridgeSchedule sched;

  void validate() const;
};

/// Any drift field (r, global time, condition) -> per-atom vectors. Lets
/// tests drive the integrator with closed-form fields instead of a model.
using VectorField =
    std::function<Coords(const Coords& r, double t, const Coords& cond)>;

/// Deterministic Euler integration of one bridge segment over [0, T] with
/// the condition fixed to z0. Drift is evaluated at left endpoints
/// t_k = k T / steps. Throws DivergenceError with the step index when the
/// state goes non-finite.
geom::GeometricState sample_bridge_field(const VectorField& field,
                                         const geom::GeometricState& z0,
                                         const SamplerConfig& cfg);
geom::GeometricState sample_bridge(const model::ScoreModelParams& params,
                                   const geom::GeometricState& z0,
                                   const SamplerConfig& cfg);

/// Chain sampling: returns [z0, R^T_0, ..., R^T_{N-1}]. Segment i starts at
/// the previous segment's final state, conditions on that state, and passes
/// global time to the field; the drift scale uses sigma_i.
std::vector<geom::GeometricState> sample_chain_field(
    const VectorField& field, const geom::GeometricState& z0,
    const SamplerConfig& cfg);
std::vector<geom::GeometricState> sample_chain(
    const model::ScoreModelParams& params, const geom::GeometricState& z0,
    const SamplerConfig& cfg);

}  // namespace gdb::sampling
