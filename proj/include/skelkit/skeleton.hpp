#pragma once

#include <string>
#include <vector>

#include "skelkit/contraction.hpp"
#include "skelkit/geometry.hpp"

namespace skelkit {

/// Gaussian-ellipsoid bone: center, symmetric positive definite precision
/// matrix Q, and a scalar length. The ellipsoid axes are the eigenvectors of
/// Q; eigenvalues are inverse squared semi-axis lengths.
struct Bone {
  Vec3 center = Vec3::Zero();
  Mat3 precision = Mat3::Identity();
  double length = 0.0;

  /// Builds Q from an orientation whose first row is `axis`: the semi-axis
  /// along the bone is length/2, the radial semi-axes are `radial`.
  static Bone from_axis(const Vec3& center, const Vec3& axis, double length, double radial);

  /// Unit eigenvector of Q with the smallest eigenvalue (the long axis);
  /// sign fixed deterministically.
  Vec3 major_axis() const;

  /// center -/+ (length/2) * major_axis().
  std::pair<Vec3, Vec3> endpoints() const;

  /// Mahalanobis distance (x - C)^T Q (x - C).
  double mahalanobis(const Vec3& x) const;
};

struct Joint {
  int bone_a = -1;
  int bone_b = -1;
  Vec3 position = Vec3::Zero();
};

struct Skeleton {
  std::vector<Bone> bones;
  std::vector<Joint> joints;

  int n_bones() const { return static_cast<int>(bones.size()); }
  int n_joints() const { return static_cast<int>(joints.size()); }

  /// Joint-connected bone pairs (a < b), deduplicated.
  std::vector<std::pair<int, int>> connected_pairs() const;

  /// Joint indices that reference bone b.
  std::vector<int> joints_of_bone(int b) const;
};

/// Builds a skeleton from a surgery graph: each graph edge becomes one bone
/// (center = edge midpoint, long axis = edge direction, radial scale = RMS
/// distance of the edge's absorbed original-mesh vertices from the edge line),
/// each node of degree >= 2 becomes one joint per incident bone pair.
/// The mesh provides original positions for the radial estimate.
Skeleton skeleton_from_graph(const SkeletonGraph& graph, const TriMesh& mesh);

std::string serialize_skeleton(const Skeleton& skeleton);
Skeleton deserialize_skeleton(const std::string& text);
void save_skeleton(const Skeleton& skeleton, const std::string& path);
Skeleton load_skeleton(const std::string& path);

}  // namespace skelkit
