#include "skelkit/transform.hpp"

#include <cmath>

namespace skelkit {

RigidTransform RigidTransform::about_point(const Vec3& pivot, const Vec3& axis, double angle) {
  RigidTransform out;
  out.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized()));
  out.translation = pivot - out.rotation * pivot;
  return out;
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation.toRotationMatrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

double RigidTransform::rotation_angle_to(const RigidTransform& rhs) const {
  const double dot = std::min(1.0, std::abs(rotation.dot(rhs.rotation)));
  return 2.0 * std::acos(dot);
}

}  // namespace skelkit
