#pragma once

#include <functional>
#include <vector>

#include "gdb/kernels.hpp"
#include "gdb/rng.hpp"
#include "gdb/types.hpp"

namespace gdb::bridge {

/// Chain-of-bridges schedule: N segments of duration T, with the segment
/// noise scale decaying linearly, sigma_i = ((N - i) / N) sigma.
struct BridgeSchedule {
  double sigma = 0.5;
  double T = 1.0;
  int N = 1;

  double total_time() const { return static_cast<double>(N) * T; }
  void validate() const;
};

struct SegmentTime {
  int i;           // segment index in [0, N-1]
  double t_local;  // offset within the segment, in [0, T)
};

/// Splits a global chain time into (segment, local offset):
/// i = floor(t / T), t_local = t - i T. Throws std::out_of_range unless
/// 0 <= t < N T.
SegmentTime segment_index(double t, const BridgeSchedule& sched);

/// sigma_i = ((N - i) / N) sigma for 0 <= i <= N-1.
double sigma_for_segment(int i, const BridgeSchedule& sched);

/// Raw standard-normal increments, one n x 3 block per Euler step; the
/// simulator applies the CoM-free projection itself.
using NoiseSource = std::function<Coords(int step)>;

/// Euler-Maruyama path of the pinned bridge
///   dR = (z1 - R) / (T - t) dt + sigma dW
/// with CoM-free noise increments. Drift is evaluated at the left endpoint
/// of each step, so the last evaluation sits at t = T - T/steps. Returns
/// steps + 1 states starting exactly at z0.
std::vector<Coords> simulate_bridge_sde(const Coords& z0, const Coords& z1,
                                        const kernels::BridgeConfig& cfg,
                                        int steps, Rng& rng);
std::vector<Coords> simulate_bridge_sde(const Coords& z0, const Coords& z1,
                                        const kernels::BridgeConfig& cfg,
                                        int steps, const NoiseSource& noise);

}  // namespace gdb::bridge
