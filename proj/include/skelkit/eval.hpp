#pragma once

#include <string>
#include <vector>

#include "skelkit/kinematics.hpp"
#include "skelkit/skeleton.hpp"
#include "skelkit/skinning.hpp"
#include "skelkit/synth.hpp"

namespace skelkit {

struct EvalMetrics {
  int bone_count_error = 0;
  double joint_position_error = 0.0;  // mean distance to nearest run joint / bbox diagonal
  double vertex_rms = 0.0;            // mean per-frame vertex RMS error
  double part_agreement = 0.0;        // best bipartite part match, fraction of vertices
  double keypoint_transfer = 0.0;     // PCK at d_th = 0.2 sqrt(mask area)
  double chamfer = 0.0;               // mean symmetric nearest-neighbor distance

  std::string to_json() const;
};

/// Maximum-agreement assignment between two part labelings (Hungarian match);
/// returns the number of vertices whose labels agree under the best match.
int best_part_agreement(const std::vector<int>& labels_a, int n_a, const std::vector<int>& labels_b,
                        int n_b);

/// Symmetric mean nearest-neighbor distance.
double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

EvalMetrics evaluate(const TriMesh& mesh, const GroundTruth& gt, const Skeleton& run_skeleton,
                     const SkinningWeights& run_weights, const std::vector<PoseFrame>& run_poses);

/// Loads run artifacts (skeleton.json, weights.bin, poses.json) and the
/// ground-truth dataset directory, then compares them.
EvalMetrics evaluate_run(const std::string& run_dir, const std::string& gt_dir);

}  // namespace skelkit
