#include "gdb/geom.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Geometry>
#include <Eigen/SVD>

namespace gdb::geom {

void GeometricState::validate() const {
  if (coords.rows() < 1)
    throw std::invalid_argument("GeometricState: needs at least one atom");
  if (!coords.allFinite())
    throw std::invalid_argument("GeometricState: non-finite coordinates");
  if (static_cast<Eigen::Index>(features.size()) != coords.rows())
    throw std::invalid_argument(
        "GeometricState: feature count does not match atom count");
}

RigidMotion RigidMotion::identity() {
  return {Mat3::Identity(), Vec3::Zero()};
}

RigidMotion RigidMotion::random(Rng& rng, double translation_scale) {
  Eigen::Vector4d q;
  for (int i = 0; i < 4; ++i) q(i) = rng.normal();
  q.normalize();
  const Eigen::Quaterniond quat(q(0), q(1), q(2), q(3));
  Vec3 t;
  for (int i = 0; i < 3; ++i) t(i) = translation_scale * rng.normal();
  return {quat.toRotationMatrix(), t};
}

RigidMotion RigidMotion::compose(const RigidMotion& inner) const {
  return {rotation * inner.rotation, rotation * inner.translation + translation};
}

bool RigidMotion::is_proper(double tol) const {
  const Mat3 gram = rotation.transpose() * rotation;
  return (gram - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(rotation.determinant() - 1.0) <= tol;
}

Vec3 center_of_mass(const Coords& coords) {
  return coords.colwise().mean().transpose();
}

Vec3 center_of_mass(const GeometricState& state) {
  return center_of_mass(state.coords);
}

Coords project_com_free(const Coords& coords) {
  return coords.rowwise() - coords.colwise().mean();
}

GeometricState project_com_free(const GeometricState& state) {
  return {project_com_free(state.coords), state.features};
}

Coords apply_rotation(const Coords& coords, const Mat3& rotation) {
  return coords * rotation.transpose();
}

Coords apply_rigid_motion(const Coords& coords, const RigidMotion& motion) {
  return (coords * motion.rotation.transpose()).rowwise() +
         motion.translation.transpose();
}

GeometricState apply_rigid_motion(const GeometricState& state,
                                  const RigidMotion& motion) {
  return {apply_rigid_motion(state.coords, motion), state.features};
}

double rmsd(const Coords& a, const Coords& b) {
  if (a.rows() != b.rows())
    throw std::invalid_argument("rmsd: atom counts differ");
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.rows()));
}

AlignResult kabsch_align(const GeometricState& pred,
                         const GeometricState& ref) {
  if (pred.size() != ref.size() || pred.features != ref.features)
    throw std::invalid_argument("kabsch_align: structures do not match");

  const Vec3 pred_com = center_of_mass(pred.coords);
  const Vec3 ref_com = center_of_mass(ref.coords);
  const Coords p = pred.coords.rowwise() - pred_com.transpose();
  const Coords q = ref.coords.rowwise() - ref_com.transpose();

  const Mat3 cross = p.transpose() * q;
  Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  // Flip the weakest singular direction rather than reflect.
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0)
    d(2, 2) = -1.0;
  const Mat3 rotation = svd.matrixV() * d * svd.matrixU().transpose();

  RigidMotion motion{rotation, ref_com - rotation * pred_com};
  return {apply_rigid_motion(pred, motion), motion};
}

}  // namespace gdb::geom
