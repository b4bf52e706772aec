#pragma once

#include <Eigen/Geometry>

#include "skelkit/geometry.hpp"

namespace skelkit {

/// SE(3) element as unit quaternion + translation.
struct RigidTransform {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  static RigidTransform from_parts(const Eigen::Quaterniond& q, const Vec3& t) {
    RigidTransform out;
    out.rotation = q.normalized();
    out.translation = t;
    return out;
  }

  /// Rotation by `angle` about `axis` through the point `pivot`.
  static RigidTransform about_point(const Vec3& pivot, const Vec3& axis, double angle);

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

  RigidTransform operator*(const RigidTransform& rhs) const {
    RigidTransform out;
    out.rotation = (rotation * rhs.rotation).normalized();
    out.translation = rotation * rhs.translation + translation;
    return out;
  }

  RigidTransform inverse() const {
    RigidTransform out;
    out.rotation = rotation.conjugate();
    out.translation = -(out.rotation * translation);
    return out;
  }

  Eigen::Matrix4d matrix() const;

  /// Rotation-angle distance to another transform, in radians.
  double rotation_angle_to(const RigidTransform& rhs) const;
};

}  // namespace skelkit
