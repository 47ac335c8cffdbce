#pragma once

#include <cstdint>
#include <vector>

#include "gdb/rng.hpp"
#include "gdb/types.hpp"

namespace gdb::geom {

/// A set of n atoms: Cartesian coordinates plus opaque integer type ids.
struct GeometricState {
  Coords coords;                        // n x 3, angstroms
  std::vector<std::uint32_t> features;  // atom-type ids, one per atom

  int size() const { return static_cast<int>(coords.rows()); }

  /// Throws std::invalid_argument unless n >= 1, all coordinates are finite,
  /// and the feature list matches the atom count.
  void validate() const;
};

/// A proper rigid motion: x -> rotation * x + translation.
struct RigidMotion {
  Mat3 rotation;
  Vec3 translation;

  static RigidMotion identity();
  /// Haar-uniform rotation (via a normalized quaternion) and a normal
  /// translation scaled by `translation_scale`.
  static RigidMotion random(Rng& rng, double translation_scale = 1.0);

  /// The motion equivalent to applying `inner` first, then this one.
  RigidMotion compose(const RigidMotion& inner) const;

  /// rotation orthonormal within tol and det = +1 within tol.
  bool is_proper(double tol = 1e-12) const;
};

Vec3 center_of_mass(const Coords& coords);
Vec3 center_of_mass(const GeometricState& state);

/// Coordinates translated so the center of mass is zero; pairwise
/// differences are unchanged.
Coords project_com_free(const Coords& coords);
GeometricState project_com_free(const GeometricState& state);

Coords apply_rotation(const Coords& coords, const Mat3& rotation);
Coords apply_rigid_motion(const Coords& coords, const RigidMotion& motion);
GeometricState apply_rigid_motion(const GeometricState& state,
                                  const RigidMotion& motion);

/// Plain root-mean-square deviation with no alignment.
double rmsd(const Coords& a, const Coords& b);

struct AlignResult {
  GeometricState aligned;  // pred mapped onto ref
  RigidMotion motion;      // the motion that was applied to pred
};

/// Least-RMSD rigid superposition of pred onto ref (SVD construction with
/// the determinant-sign correction, so reflections are never produced).
/// Throws std::invalid_argument when atom counts or features differ.
AlignResult kabsch_align(const GeometricState& pred, const GeometricState& ref);

}  // namespace gdb::geom
