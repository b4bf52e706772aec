#pragma once

#include <string>
#include <vector>

#include "skelkit/geometry.hpp"
#include "skelkit/rendering.hpp"
#include "skelkit/skinning.hpp"
#include "skelkit/transform.hpp"

namespace skelkit {

/// One frame of motion: root transform, per-bone transforms, and the camera.
struct PoseFrame {
  RigidTransform root;
  std::vector<RigidTransform> bones;
  Camera camera;

  static PoseFrame identity(int n_bones) {
    PoseFrame pose;
    pose.bones.assign(n_bones, RigidTransform::identity());
    return pose;
  }
};

/// Forward linear blend skinning:
///   X_n^t = T_root * (sum_b W[n,b] T_b) * X_n^0
/// with the weighted sum taken over the 4x4 bone matrices.
std::vector<Vec3> blend_skin(const std::vector<Vec3>& rest, const SkinningWeights& weights,
                             const PoseFrame& pose);
std::vector<Vec3> blend_skin(const TriMesh& mesh, const SkinningWeights& weights,
                             const PoseFrame& pose);

/// Exact inverse of blend_skin: applies T_root^-1, then the matrix inverse of
/// each vertex's blended bone matrix. Throws NumericalError naming the vertex
/// when a blended matrix is near-singular (condition > 1e8).
/// When `blend_inverses` is set, the averaged-inverse variant is used instead
/// (blends the inverted bone matrices; not an exact inverse).
std::vector<Vec3> backward_blend_skin(const std::vector<Vec3>& posed,
                                      const SkinningWeights& weights, const PoseFrame& pose,
                                      bool blend_inverses = false);

/// Per-bone weighted Procrustes fit (rotation + translation): the root is
/// fitted on all vertices first, then each bone on the root-aligned residual
/// of its part. With `strict`, a part with fewer than 3 vertices or collinear
/// support raises NumericalError naming the bone; otherwise such bones get
/// the identity transform.
PoseFrame fit_pose_procrustes(const std::vector<Vec3>& rest, const PartAssignment& parts,
                              const std::vector<Vec3>& targets, bool strict = true);
PoseFrame fit_pose_procrustes(const TriMesh& mesh, const PartAssignment& parts,
                              const std::vector<Vec3>& targets, bool strict = true);

/// Single rigid fit of `source` onto `target` with per-point weights.
RigidTransform fit_rigid(const std::vector<Vec3>& source, const std::vector<Vec3>& target,
                         const std::vector<double>& point_weights);

struct GradientConfig {
  int max_iters = 60;
  double step = 0.05;       // initial line-search step
  double fd_epsilon = 1e-5;  // central-difference probe
  double eta_dr = 1.0;       // weight of the dynamic-rigid regularizer
  double lambda = 0.1;       // rigidity stabilizer
};

/// Numeric-gradient descent on
///   sum_n || blend_skin(X)_n - target_n ||^2 + eta * L_DR(rest, posed)
/// over the root and per-bone transform parameters. The returned pose never
/// has a higher objective than the initial one.
PoseFrame refine_pose_gradient(const TriMesh& mesh, const SkinningWeights& weights,
                               const PoseFrame& init, const std::vector<Vec3>& targets,
                               const GradientConfig& cfg = {});

/// Objective used by refine_pose_gradient (exposed for verification).
double pose_objective(const TriMesh& mesh, const SkinningWeights& weights, const PoseFrame& pose,
                      const std::vector<Vec3>& targets, const GradientConfig& cfg);

/// Pose serialization: [{"root":{"q":[w,x,y,z],"t":[x,y,z]},"bones":[...]}].
std::string poses_to_json(const std::vector<PoseFrame>& poses);
std::vector<PoseFrame> poses_from_json(const std::string& text);
void save_poses(const std::vector<PoseFrame>& poses, const std::string& path);
std::vector<PoseFrame> load_poses(const std::string& path);

}  // namespace skelkit
