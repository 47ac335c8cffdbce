#include "gdb/synthdata.hpp"

#include <stdexcept>

#include "gdb/errors.hpp"
#include "gdb/oracles.hpp"
#include "gdb/parallel.hpp"

namespace gdb::synth {

void PotentialSpec::validate() const {
  if (k < 0.0) throw std::invalid_argument("PotentialSpec: k must be >= 0");
  if (!(d0 > 0.0)) throw std::invalid_argument("PotentialSpec: d0 must be > 0");
}

void DatasetSpec::validate() const {
  if (n_records < 1 || n_atoms < 1 || segments < 1 || sim_steps_per_segment < 1)
    throw std::invalid_argument("DatasetSpec: counts must be >= 1");
  if (!(sim_dt > 0.0))
    throw std::invalid_argument("DatasetSpec: sim_dt must be > 0");
  if (!(sigma >= 0.0))
    throw std::invalid_argument("DatasetSpec: sigma must be >= 0");
  if (!(init_spread > 0.0))
    throw std::invalid_argument("DatasetSpec: init_spread must be > 0");
}

double potential_energy(const PotentialSpec& spec, const Coords& coords) {
  if (spec.kind == PotentialKind::zero) return 0.0;
  const Eigen::Index n = coords.rows();
  double energy = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dist = (coords.row(i) - coords.row(j)).norm();
      const double stretch = dist - spec.d0;
      energy += 0.5 * spec.k * stretch * stretch;
    }
  return energy;
}

Coords potential_gradient(const PotentialSpec& spec, const Coords& coords) {
  const Eigen::Index n = coords.rows();
  Coords grad = Coords::Zero(n, 3);
  if (spec.kind == PotentialKind::zero) return grad;
  if (n < 2)
    throw std::invalid_argument(
        "potential_gradient: harmonic_pairs needs >= 2 atoms");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Eigen::RowVector3d diff = coords.row(i) - coords.row(j);
      const double dist = diff.norm();
      if (dist < 1e-9)
        throw std::domain_error(
            "potential_gradient: coincident atoms give a singular gradient");
      const Eigen::RowVector3d pull =
          spec.k * (dist - spec.d0) / dist * diff;
      grad.row(i) += pull;
      grad.row(j) -= pull;
    }
  return grad;
}

GenResult generate_trajectories(const DatasetSpec& spec,
                                const PotentialSpec& potential, int threads) {
  spec.validate();
  potential.validate();

  const Rng base(spec.seed);
  const std::size_t count = static_cast<std::size_t>(spec.n_records);
  std::vector<train::TrajectoryRecord> slots(count);
  std::vector<char> ok(count, 0);

  parallel_for(count, threads, [&](std::size_t r) {
    Rng rng = base.derive(r);
    Coords init(spec.n_atoms, 3);
    rng.fill_normal(init);
    init *= spec.init_spread;
    init = geom::project_com_free(init);

    const int total_steps = spec.segments * spec.sim_steps_per_segment;
    std::vector<Coords> path;
    try {
      path = oracles::simulate_prior_sde(potential, init, spec.sigma,
                                         spec.sim_dt, total_steps, rng);
    } catch (const DivergenceError&) {
      return;  // slot stays empty; counted below
    } catch (const std::domain_error&) {
      return;  // coincident atoms mid-simulation; same treatment
    }

    train::TrajectoryRecord rec;
    rec.features.resize(static_cast<std::size_t>(spec.n_atoms));
    for (int a = 0; a < spec.n_atoms; ++a)
      rec.features[static_cast<std::size_t>(a)] =
          static_cast<std::uint32_t>(a % 4);
    rec.frames.reserve(static_cast<std::size_t>(spec.segments) + 1);
    for (int f = 0; f <= spec.segments; ++f)
      rec.frames.push_back(
          path[static_cast<std::size_t>(f) *
               static_cast<std::size_t>(spec.sim_steps_per_segment)]);
    slots[r] = std::move(rec);
    ok[r] = 1;
  });

  GenResult result;
  result.dataset.records.reserve(count);
  for (std::size_t r = 0; r < count; ++r) {
    if (ok[r])
      result.dataset.records.push_back(std::move(slots[r]));
    else
      ++result.n_skipped;
  }
  return result;
}

train::PairDataset pairs_from_trajectories(
    const train::TrajectoryDataset& dataset) {
  train::PairDataset pairs;
  pairs.items.reserve(dataset.records.size());
  for (const train::TrajectoryRecord& rec : dataset.records) {
    train::StatePair pair;
    pair.z0 = {rec.frames.front(), rec.features};
    pair.z1 = {rec.frames.back(), rec.features};
    pairs.items.push_back(std::move(pair));
  }
  return pairs;
}

}  // namespace gdb::synth
