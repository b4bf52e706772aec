#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skelkit/contraction.hpp"
#include "skelkit/flowwarp.hpp"
#include "skelkit/geometry.hpp"
#include "skelkit/kinematics.hpp"
#include "skelkit/losses.hpp"
#include "skelkit/skeleton.hpp"
#include "skelkit/skinning.hpp"

namespace skelkit {

struct RefineConfig {
  double t_r = 0.4;        // joint-support weight threshold
  double t_o = 0.9;        // merge cosine-similarity threshold
  double t_d_factor = 0.5;  // split threshold as a fraction of mean tracked length
  int h_frames = 8;        // frames sampled per M-step (capped by availability)
  uint64_t seed = 0;
  int max_outer_iters = 20;
  double temperature = 1.0;  // skinning softmax temperature
  double lambda = 0.1;       // rigidity stabilizer
  /// 0 keeps the strict min-over-frames merge test; a value in (0,1) switches
  /// to that quantile of the per-frame similarities (robust variant).
  double merge_percentile = 0.0;
  bool use_gradient_refine = false;  // polish the Procrustes fit by descent
  ContractionConfig contraction;
  LossWeights loss_weights;
  GradientConfig gradient;

  static RefineConfig from_json(const std::string& text);
  std::string to_json() const;
};

/// Joint positions recomputed from weight support: joint (i,j) moves to the
/// mean of the vertices with both weights >= t_r. Joints with empty support
/// keep their previous position and are reported unsupported.
struct JointLocalization {
  std::vector<Vec3> positions;
  std::vector<uint8_t> supported;
};

JointLocalization localize_joint_positions(const std::vector<Vec3>& positions,
                                           const SkinningWeights& weights,
                                           const Skeleton& skeleton, double t_r);

/// Same rule, returned as a skeleton with updated joint coordinates.
Skeleton localize_joints(const std::vector<Vec3>& positions, const SkinningWeights& weights,
                         const Skeleton& skeleton, double t_r);

/// Rigidly transforms every bone by its frame transform (root * T_b); joint
/// positions are left untouched.
Skeleton pose_skeleton(const Skeleton& skeleton, const PoseFrame& pose);

/// Moment-matched update of the bone Gaussians from their hard part support:
/// center = part centroid, axes from the part covariance, length = extent
/// along the major axis. Bones with fewer than two supporting vertices keep
/// their geometry. This is the desk-scale counterpart of re-learning the
/// ellipsoid parameters inside the reconstruction update.
Skeleton refit_bone_ellipsoids(const Skeleton& skeleton, const std::vector<Vec3>& positions,
                               const PartAssignment& parts);

/// Per-bone length from joint coordinates: interior bones measure between the
/// joint clusters at their two ends, terminal bones measure joint to far
/// endpoint. Bones without any (supported) joint are flagged untracked and
/// keep their stored length.
struct BoneLengths {
  std::vector<double> lengths;
  std::vector<uint8_t> tracked;
};

BoneLengths bone_lengths(const Skeleton& skeleton, const std::vector<Vec3>& joint_positions);
BoneLengths bone_lengths(const Skeleton& skeleton, const std::vector<Vec3>& joint_positions,
                         const std::vector<uint8_t>& joint_supported);

/// Statistics gathered over the sampled frames of one M-step.
struct MStepStats {
  std::vector<int> frames;
  std::vector<BoneFlow> flows;              // per sampled frame
  std::vector<BoneLengths> lengths;         // per sampled frame
};

struct RefineOutcome {
  Skeleton skeleton;
  SkinningWeights weights;
  int merges = 0;
  int splits = 0;
};

/// One M-step skeleton update: joint-connected bone pairs whose flow
/// similarity stays above t_o over every sampled frame merge (greedy, at most
/// one merge per bone); bones whose tracked length fluctuates by more than
/// t_d_factor * mean length gain a joint and split in two. Merges run before
/// splits. Weight columns are summed on merge and halved on split.
RefineOutcome refine_skeleton(const Skeleton& skeleton, const MStepStats& stats,
                              const RefineConfig& cfg, const SkinningWeights& weights);

/// Input frame for the optimization loop.
struct FrameData {
  std::vector<Vec3> targets;
  Camera camera;
  SilhouetteRaster silhouette;  // empty (width 0) skips the silhouette loss
  FlowRaster flow;              // t -> t+1
  bool has_flow = false;
  ColorRaster rgb;              // optional target colors
  bool has_rgb = false;
};

struct SiosIteration {
  int iteration = 0;
  int bones_before = 0;
  int bones_after = 0;
  int merges = 0;
  int splits = 0;
  double total_loss = 0.0;
};

struct SiosResult {
  Skeleton skeleton;
  SkinningWeights weights;
  std::vector<PoseFrame> poses;
  LossReport losses;
  std::vector<SiosIteration> history;
};

/// The full alternating loop: initialize the skeleton by contraction +
/// connectivity surgery, then iterate E-steps (weights, rigidity, pose fits,
/// loss evaluation) and M-steps (sampled-frame bone flows, joint localization,
/// length tracking, merge/split refinement) until the skeleton is quiet for
/// two consecutive iterations or max_outer_iters is reached. Deterministic
/// under a fixed seed. When `checkpoint_dir` is set, per-iteration artifacts
/// are written to iter_k/{skeleton.json,weights.bin,losses.csv}.
SiosResult sios2(const TriMesh& mesh, const std::vector<FrameData>& frames,
                 const RefineConfig& cfg, const std::string& checkpoint_dir = "",
                 const std::vector<Vec3>* vertex_colors = nullptr);

}  // namespace skelkit
