#pragma once

#include <cstdint>
#include <vector>

#include "gdb/geom.hpp"
#include "gdb/rng.hpp"
#include "gdb/training.hpp"
#include "gdb/types.hpp"

namespace gdb::synth {

enum class PotentialKind { harmonic_pairs, zero };

/// V = (k/2) sum_{i<j} (|r_i - r_j| - d0)^2, or identically zero.
struct PotentialSpec {
  PotentialKind kind = PotentialKind::harmonic_pairs;
  double k = 5.0;    // spring constant
  double d0 = 1.5;   // rest length, angstroms

  void validate() const;
};

double potential_energy(const PotentialSpec& spec, const Coords& coords);

/// Gradient of V; zero row-sum by construction, so the relaxation drift
/// preserves the CoM-free subspace. Throws std::domain_error when two atoms
/// sit closer than 1e-9 (the pair direction is singular).
Coords potential_gradient(const PotentialSpec& spec, const Coords& coords);
inline Coords potential_gradient(const PotentialSpec& spec,
                                 const geom::GeometricState& state) {
  return potential_gradient(spec, state.coords);
}

struct DatasetSpec {
  int n_records = 100;
  int n_atoms = 5;
  int segments = 10;  // trajectory segment count N
  double sim_dt = 1e-3;
  int sim_steps_per_segment = 100;
  double sigma = 0.5;
  std::uint64_t seed = 0;
  double init_spread = 2.0;  // std of the initial atom cloud, angstroms

  void validate() const;
};

struct GenResult {
  train::TrajectoryDataset dataset;
  int n_skipped = 0;  // records dropped after simulation divergence
};

/// Per record: i.i.d. Gaussian initial atoms (CoM-projected), a prior-SDE
/// relaxation of N * sim_steps_per_segment Euler steps, subsampled at a
/// uniform stride into N+1 frames. Atom types cycle through four ids.
/// Deterministic per seed; records use derived rng streams so the result is
/// independent of the thread count.
GenResult generate_trajectories(const DatasetSpec& spec,
                                const PotentialSpec& potential,
                                int threads = 1);

/// First and last frames of each record.
train::PairDataset pairs_from_trajectories(
    const train::TrajectoryDataset& dataset);

}  // namespace gdb::synth
