#pragma once

#include <Eigen/Core>

namespace gdb {

// n x 3 Cartesian coordinate block, one row per atom, in angstroms.
using Coords = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

}  // namespace gdb
