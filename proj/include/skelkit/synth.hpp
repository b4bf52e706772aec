#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skelkit/geometry.hpp"
#include "skelkit/kinematics.hpp"
#include "skelkit/refine.hpp"
#include "skelkit/rendering.hpp"
#include "skelkit/skeleton.hpp"
#include "skelkit/skinning.hpp"

namespace skelkit {

/// Icosphere: subdivided icosahedron projected to a sphere.
/// subdiv 2 gives N=162, F=320, E=480.
TriMesh make_icosphere(int subdivisions, double radius = 1.0);

struct SynthCamera {
  enum class Path { Static, Orbit };
  Path path = Path::Static;
  int width = 96;
  int height = 96;
  double distance_factor = 3.0;        // camera distance in bbox diagonals
  double orbit_deg_per_frame = 4.0;    // used by the orbit path
};

/// One straight capsule tube. Segments lie end to end along `direction`; each
/// segment's hinge sits at its base point. A chain with parent_segment >= 0 is
/// rigidly attached to that segment of an earlier chain.
struct SynthChain {
  Vec3 base = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();
  int parent_segment = -1;
  std::vector<double> lengths;
  std::vector<double> radii;
  std::vector<Vec3> hinge_axes;
};

struct SynthSpec {
  std::vector<SynthChain> chains;
  int frames = 2;
  /// frames x total-segment-count hinge angles (radians). Column 0 (the root
  /// segment) is ignored.
  Eigen::MatrixXd joint_angles;
  /// Optional per-frame root transform; empty means identity.
  std::vector<RigidTransform> root_motion;
  int radial_segments = 12;
  int rings_per_segment = 6;
  SynthCamera camera;
  uint64_t seed = 0;

  int total_segments() const;

  /// Single straight chain along +x with unit radius-to-length checks left to
  /// generate().
  static SynthSpec make_chain(const std::vector<double>& lengths,
                              const std::vector<double>& radii, int frames);
  /// Torso + four two-segment legs + neck. Chains are separate closed tubes.
  static SynthSpec quadruped(int frames);

  static SynthSpec from_json(const std::string& text);
  std::string to_json() const;
};

/// Everything the generator knows: the exact articulation that produced the
/// frames.
struct GroundTruth {
  Skeleton skeleton;
  PartAssignment labels;
  std::vector<PoseFrame> poses;            // camera embedded per frame
  std::vector<std::vector<Vec3>> positions;
  std::vector<SilhouetteRaster> silhouettes;
  std::vector<FlowRaster> flows;           // frames-1 entries, t -> t+1
  std::vector<std::vector<uint8_t>> visibility_masks;
  std::vector<Vec3> keypoints;             // rest space: joints + segment midpoints
  std::vector<Vec3> vertex_colors;         // per-segment palette
};

/// Deterministic generation: capsule-chain mesh, forward kinematics,
/// rendered rasters. Throws IoError on self-intersecting specs (radius
/// exceeding segment length).
std::pair<TriMesh, GroundTruth> generate(const SynthSpec& spec);

/// Adds seeded Gaussian noise to the target positions (sigma_pos) and/or the
/// flow rasters (sigma_flow). Negative sigmas are rejected.
GroundTruth corrupt(const GroundTruth& gt, double sigma_pos, double sigma_flow, uint64_t seed);

/// Dataset directory layout: mesh.obj, gt_skeleton.json, poses.json,
/// frames/frame_%04d.pgm, flows/flow_%04d.bin, targets.json.
void save_dataset(const TriMesh& mesh, const GroundTruth& gt, const std::string& dir);

struct Dataset {
  TriMesh mesh;
  GroundTruth gt;
};
Dataset load_dataset(const std::string& dir);

/// Input frames for sios2: targets, camera, silhouette, and flow per frame.
/// With `with_rgb`, color targets are rendered from the ground-truth vertex
/// colors.
std::vector<FrameData> frames_from_ground_truth(const TriMesh& mesh, const GroundTruth& gt,
                                                bool with_rgb = false);

std::string camera_to_json(const Camera& camera);
Camera camera_from_json(const std::string& text);

}  // namespace skelkit
