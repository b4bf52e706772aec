#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "skelkit/refine.hpp"
#include "skelkit/synth.hpp"
#include "test_utils.hpp"

using namespace skelkit;
using namespace skelkit::test;

namespace {

// Chain skeleton A-B-C used by the split-rule tests: A covers [-1,0], B covers
// [0,1.4] along x, C runs upward from B's far joint.
Skeleton split_test_skeleton() {
  Skeleton s;
  s.bones.push_back(Bone::from_axis({-0.5, 0, 0}, Vec3::UnitX(), 1.0, 0.2));
  s.bones.push_back(Bone::from_axis({0.7, 0, 0}, Vec3::UnitX(), 1.4, 0.2));
  s.bones.push_back(Bone::from_axis({1.4, 1.0, 0}, Vec3::UnitY(), 2.0, 0.2));
  s.joints.push_back({0, 1, Vec3(0, 0, 0)});
  s.joints.push_back({1, 2, Vec3(1.4, 0, 0)});
  return s;
}

// Stats whose flows never merge anything (pairwise dissimilar directions).
void add_no_merge_flows(MStepStats& stats, int n_bones, int n_frames) {
  for (int f = 0; f < n_frames; ++f) {
    BoneFlow flow;
    flow.flow.resize(n_bones);
    flow.mass.assign(n_bones, 1000.0);
    flow.observed.assign(n_bones, 1);
    for (int b = 0; b < n_bones; ++b) {
      const double angle = M_PI * b / n_bones + (b % 2 ? M_PI : 0.0);
      flow.flow[b] = Vec2(std::cos(angle), std::sin(angle));
    }
    stats.flows.push_back(flow);
  }
}

}  // namespace

TEST_CASE("localize_joints: symmetric support centers the joint") {
  Skeleton s;
  s.bones.push_back(Bone::from_axis({-1, 0, 0}, Vec3::UnitX(), 1.0, 0.3));
  s.bones.push_back(Bone::from_axis({1, 0, 0}, Vec3::UnitX(), 1.0, 0.3));
  s.joints.push_back({0, 1, Vec3(5, 5, 5)});  // stale position
  SkinningWeights w;
  w.w.resize(4, 2);
  w.w << 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5;
  const std::vector<Vec3> pos = {{1, 1, 0}, {1, -1, 0}, {-1, 1, 0}, {-1, -1, 0}};
  const Skeleton out = localize_joints(pos, w, s, 0.4);
  CHECK((out.joints[0].position - Vec3(0, 0, 0)).norm() < 1e-12);
}

TEST_CASE("localize_joints: threshold excludes one-sided vertices") {
  Skeleton s;
  s.bones.push_back(Bone::from_axis({-1, 0, 0}, Vec3::UnitX(), 1.0, 0.3));
  s.bones.push_back(Bone::from_axis({1, 0, 0}, Vec3::UnitX(), 1.0, 0.3));
  s.joints.push_back({0, 1, Vec3(0, 0, 0)});
  SkinningWeights w;
  w.w.resize(2, 2);
  w.w << 0.45, 0.55,  // both weights >= t_r: supports the joint
      0.9, 0.1;       // one side below t_r: excluded
  const std::vector<Vec3> pos = {{0.3, 0.7, 0}, {-2, 0, 0}};
  const JointLocalization loc = localize_joint_positions(pos, w, s, 0.4);
  CHECK(loc.supported[0] == 1);
  CHECK((loc.positions[0] - pos[0]).norm() < 1e-12);
}

TEST_CASE("localize_joints: empty support keeps the previous position") {
  Skeleton s;
  s.bones.push_back(Bone::from_axis({-1, 0, 0}, Vec3::UnitX(), 1.0, 0.3));
  s.bones.push_back(Bone::from_axis({1, 0, 0}, Vec3::UnitX(), 1.0, 0.3));
  const Vec3 previous(0.25, 0.5, 0.75);
  s.joints.push_back({0, 1, previous});
  SkinningWeights w;
  w.w.resize(1, 2);
  w.w << 1.0, 0.0;
  const JointLocalization loc = localize_joint_positions({{0, 0, 0}}, w, s, 0.4);
  CHECK(loc.supported[0] == 0);
  CHECK((loc.positions[0] - previous).norm() == 0.0);
}

TEST_CASE("bone_lengths: 3-4-5 joint pair") {
  Skeleton s;
  s.bones.push_back(Bone::from_axis({0, 1.5, 2}, Vec3(0, 3, 4).normalized(), 5.0, 0.3));
  s.bones.push_back(Bone::from_axis({0, -1, 0}, Vec3::UnitY(), 2.0, 0.3));
  s.bones.push_back(Bone::from_axis({0, 4, 6}, Vec3::UnitY(), 2.0, 0.3));
  s.joints.push_back({0, 1, Vec3(0, 0, 0)});
  s.joints.push_back({0, 2, Vec3(0, 3, 4)});
  const std::vector<Vec3> joint_pos = {{0, 0, 0}, {0, 3, 4}};
  const BoneLengths lengths = bone_lengths(s, joint_pos);
  CHECK(lengths.tracked[0] == 1);
  CHECK(lengths.lengths[0] == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("bone_lengths: static joints give identical lengths across frames") {
  const Skeleton s = split_test_skeleton();
  std::vector<Vec3> joint_pos = {s.joints[0].position, s.joints[1].position};
  const BoneLengths a = bone_lengths(s, joint_pos);
  const BoneLengths b = bone_lengths(s, joint_pos);
  CHECK(a.lengths == b.lengths);
}

TEST_CASE("bone_lengths: jointless bones are flagged and frozen") {
  Skeleton s;
  s.bones.push_back(Bone::from_axis({0, 0, 0}, Vec3::UnitX(), 1.25, 0.3));
  const BoneLengths lengths = bone_lengths(s, {});
  CHECK(lengths.tracked[0] == 0);
  CHECK(lengths.lengths[0] == doctest::Approx(1.25));
}

TEST_CASE("bone_lengths: hinge sequence keeps rigid-segment lengths constant") {
  SynthSpec spec = SynthSpec::make_chain({1.0, 1.0, 1.0}, {0.22, 0.22, 0.22}, 6);
  for (int f = 0; f < 6; ++f) {
    spec.joint_angles(f, 1) = 0.5 * std::sin(2 * M_PI * f / 6.0);
    spec.joint_angles(f, 2) = 0.45 * std::sin(2 * M_PI * f / 6.0 + 1.0);
  }
  const auto [mesh, gt] = generate(spec);
  const SkinningWeights w = compute_skinning_weights(mesh, gt.skeleton);
  const Skeleton skel = gt.skeleton;

  std::vector<double> mid_lengths;
  for (int f = 0; f < 6; ++f) {
    const JointLocalization loc = localize_joint_positions(gt.positions[f], w, skel, 0.4);
    REQUIRE(loc.supported[0] == 1);
    REQUIRE(loc.supported[1] == 1);
    const Skeleton posed = pose_skeleton(skel, gt.poses[f]);
    const BoneLengths lengths = bone_lengths(posed, loc.positions, loc.supported);
    REQUIRE(lengths.tracked[1] == 1);
    mid_lengths.push_back(lengths.lengths[1]);
  }
  const double lo = *std::min_element(mid_lengths.begin(), mid_lengths.end());
  const double hi = *std::max_element(mid_lengths.begin(), mid_lengths.end());
  CHECK(hi - lo < 1e-3 * hi);
}

TEST_CASE("refine_skeleton: synchronized flows merge a connected pair") {
  Skeleton s;
  s.bones.push_back(Bone::from_axis({0, 0, 0}, Vec3::UnitX(), 1.0, 0.2));
  s.bones.push_back(Bone::from_axis({1, 0, 0}, Vec3::UnitX(), 1.0, 0.2));
  s.joints.push_back({0, 1, Vec3(0.5, 0, 0)});
  std::mt19937_64 rng(1);
  const SkinningWeights w = random_weights(rng, 10, 2);

  MStepStats stats;
  stats.frames = {0, 1};
  for (int f = 0; f < 2; ++f) {
    BoneFlow flow;
    flow.flow = {Vec2(1, 0.2), Vec2(2, 0.4)};  // parallel
    flow.mass = {100.0, 100.0};
    flow.observed = {1, 1};
    stats.flows.push_back(flow);
    BoneLengths lengths;
    lengths.lengths = {1.0, 1.0};
    lengths.tracked = {1, 1};
    stats.lengths.push_back(lengths);
  }
  RefineConfig cfg;
  cfg.t_o = 0.9;
  const RefineOutcome out = refine_skeleton(s, stats, cfg, w);
  CHECK(out.merges == 1);
  CHECK(out.skeleton.n_bones() == 1);
  CHECK(out.skeleton.n_joints() == 0);
  // Column summation preserves row sums.
  for (int i = 0; i < 10; ++i) {
    CHECK(out.weights.w.row(i).sum() == doctest::Approx(w.w.row(i).sum()).epsilon(1e-12));
  }
}

TEST_CASE("refine_skeleton: one disagreeing frame blocks the merge") {
  Skeleton s;
  s.bones.push_back(Bone::from_axis({0, 0, 0}, Vec3::UnitX(), 1.0, 0.2));
  s.bones.push_back(Bone::from_axis({1, 0, 0}, Vec3::UnitX(), 1.0, 0.2));
  s.joints.push_back({0, 1, Vec3(0.5, 0, 0)});
  std::mt19937_64 rng(2);
  const SkinningWeights w = random_weights(rng, 10, 2);

  MStepStats stats;
  stats.frames = {0, 1};
  BoneFlow agree;
  agree.flow = {Vec2(1, 0), Vec2(1, 0)};
  agree.mass = {100, 100};
  agree.observed = {1, 1};
  BoneFlow disagree;
  disagree.flow = {Vec2(1, 0), Vec2(0, 1)};  // orthogonal
  disagree.mass = {100, 100};
  disagree.observed = {1, 1};
  stats.flows = {agree, disagree};
  BoneLengths lengths;
  lengths.lengths = {1.0, 1.0};
  lengths.tracked = {1, 1};
  stats.lengths = {lengths, lengths};

  RefineConfig cfg;
  const RefineOutcome out = refine_skeleton(s, stats, cfg, w);
  CHECK(out.merges == 0);
  CHECK(out.skeleton.n_bones() == 2);
}

TEST_CASE("refine_skeleton: unobserved frames remove the pair from merging") {
  Skeleton s;
  s.bones.push_back(Bone::from_axis({0, 0, 0}, Vec3::UnitX(), 1.0, 0.2));
  s.bones.push_back(Bone::from_axis({1, 0, 0}, Vec3::UnitX(), 1.0, 0.2));
  s.joints.push_back({0, 1, Vec3(0.5, 0, 0)});
  std::mt19937_64 rng(3);
  const SkinningWeights w = random_weights(rng, 10, 2);

  MStepStats stats;
  stats.frames = {0};
  BoneFlow flow;
  flow.flow = {Vec2(1, 0), Vec2(1, 0)};
  flow.mass = {100, 0.0001};
  flow.observed = {1, 0};  // bone 1 occluded
  stats.flows = {flow};
  BoneLengths lengths;
  lengths.lengths = {1.0, 1.0};
  lengths.tracked = {1, 1};
  stats.lengths = {lengths};

  const RefineOutcome out = refine_skeleton(s, stats, RefineConfig{}, w);
  CHECK(out.merges == 0);
}

TEST_CASE("refine_skeleton: length fluctuation inserts a joint (split rule)") {
  const Skeleton s = split_test_skeleton();
  std::mt19937_64 rng(4);
  const SkinningWeights w = random_weights(rng, 12, 3);

  // Per-frame joint positions: j1 fixed at origin, j2 slides along x in
  // [1.0, 1.8]. Bone B's tracked length fluctuates by 0.8 of mean 1.4.
  const std::vector<double> j2_x = {1.0, 1.8, 1.3, 1.6};
  MStepStats stats;
  for (size_t f = 0; f < j2_x.size(); ++f) {
    stats.frames.push_back(static_cast<int>(f));
    const std::vector<Vec3> joint_pos = {Vec3(0, 0, 0), Vec3(j2_x[f], 0, 0)};
    stats.lengths.push_back(bone_lengths(s, joint_pos));
  }
  add_no_merge_flows(stats, 3, static_cast<int>(j2_x.size()));

  RefineConfig split_on;
  split_on.t_d_factor = 0.5;
  const RefineOutcome out = refine_skeleton(s, stats, split_on, w);
  CHECK(out.splits == 1);
  CHECK(out.merges == 0);
  CHECK(out.skeleton.n_bones() == 4);
  CHECK(out.skeleton.n_joints() == 3);
  // Row sums preserved through the split.
  for (int i = 0; i < 12; ++i) {
    CHECK(out.weights.w.row(i).sum() == doctest::Approx(w.w.row(i).sum()).epsilon(1e-12));
  }
  // The inserted joint lies at the mean of B's bounding joints.
  bool found = false;
  for (const Joint& j : out.skeleton.joints) {
    if ((j.position - Vec3(0.7, 0, 0)).norm() < 1e-9) found = true;
  }
  CHECK(found);

  RefineConfig split_off;
  split_off.t_d_factor = 1.0;
  const RefineOutcome none = refine_skeleton(s, stats, split_off, w);
  CHECK(none.splits == 0);
  CHECK(none.skeleton.n_bones() == 3);
}

TEST_CASE("refine_skeleton: deterministic given stats and config") {
  const Skeleton s = split_test_skeleton();
  std::mt19937_64 rng(5);
  const SkinningWeights w = random_weights(rng, 12, 3);
  MStepStats stats;
  stats.frames = {0, 1};
  add_no_merge_flows(stats, 3, 2);
  BoneLengths lengths;
  lengths.lengths = {1.0, 1.4, 2.0};
  lengths.tracked = {1, 1, 1};
  stats.lengths = {lengths, lengths};

  const RefineOutcome a = refine_skeleton(s, stats, RefineConfig{}, w);
  const RefineOutcome b = refine_skeleton(s, stats, RefineConfig{}, w);
  CHECK(serialize_skeleton(a.skeleton) == serialize_skeleton(b.skeleton));
  CHECK(a.weights.w == b.weights.w);
}

TEST_CASE("refine_skeleton: merge keeps far-end length and re-points joints") {
  // Chain of three bones; merging the first two must re-point the middle
  // joint and span the far ends.
  Skeleton s;
  s.bones.push_back(Bone::from_axis({0.5, 0, 0}, Vec3::UnitX(), 1.0, 0.2));
  s.bones.push_back(Bone::from_axis({1.5, 0, 0}, Vec3::UnitX(), 1.0, 0.2));
  s.bones.push_back(Bone::from_axis({2.5, 0, 0}, Vec3::UnitX(), 1.0, 0.2));
  s.joints.push_back({0, 1, Vec3(1, 0, 0)});
  s.joints.push_back({1, 2, Vec3(2, 0, 0)});
  SkinningWeights w;
  w.w = Eigen::MatrixXd::Constant(9, 3, 1.0 / 3.0);

  MStepStats stats;
  stats.frames = {0, 1};
  for (int f = 0; f < 2; ++f) {
    BoneFlow flow;
    // Bones 0 and 1 move in sync; bone 2 disagrees.
    flow.flow = {Vec2(1, 0), Vec2(1, 0), Vec2(-1, 0.5)};
    flow.mass = {10, 10, 10};
    flow.observed = {1, 1, 1};
    stats.flows.push_back(flow);
    BoneLengths lengths;
    lengths.lengths = {1.0, 1.0, 1.0};
    lengths.tracked = {1, 1, 1};
    stats.lengths.push_back(lengths);
  }
  const RefineOutcome out = refine_skeleton(s, stats, RefineConfig{}, w);
  CHECK(out.merges == 1);
  REQUIRE(out.skeleton.n_bones() == 2);
  REQUIRE(out.skeleton.n_joints() == 1);
  // Re-pointed joint connects the merged bone (slot 0) with old bone 2.
  CHECK(out.skeleton.joints[0].bone_a == 0);
  CHECK(out.skeleton.joints[0].bone_b == 1);
  CHECK((out.skeleton.joints[0].position - Vec3(2, 0, 0)).norm() < 1e-12);
  // Merged length: from bone 0's far end (0,0,0) to the shared far joint (2,0,0).
  CHECK(out.skeleton.bones[0].length == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("sios2: rigid tube collapses to a single bone") {
  SynthSpec spec = SynthSpec::make_chain({1.0, 1.0}, {0.25, 0.25}, 6);
  std::vector<RigidTransform> motion(6);
  for (int f = 0; f < 6; ++f) {
    motion[f].translation = Vec3(0.15 * f, 0.1 * std::sin(0.8 * f), 0.0);
  }
  spec.root_motion = motion;
  spec.radial_segments = 10;
  spec.rings_per_segment = 4;
  const auto [mesh, gt] = generate(spec);
  RefineConfig cfg;
  cfg.seed = 11;
  const SiosResult result = sios2(mesh, frames_from_ground_truth(mesh, gt), cfg);
  CHECK(result.skeleton.n_bones() == 1);
  CHECK(result.skeleton.n_joints() == 0);
  // Rule isolation: merges happened, splits did not.
  int total_splits = 0;
  for (const SiosIteration& it : result.history) total_splits += it.splits;
  CHECK(total_splits == 0);
}

TEST_CASE("sios2: deterministic under a fixed seed") {
  SynthSpec spec = SynthSpec::make_chain({1.0, 1.0}, {0.25, 0.25}, 5);
  for (int f = 0; f < 5; ++f) spec.joint_angles(f, 1) = 0.4 * std::sin(1.1 * f);
  std::vector<RigidTransform> motion(5);
  for (int f = 0; f < 5; ++f) motion[f].translation = Vec3(0.12 * f, 0.0, 0.0);
  spec.root_motion = motion;
  spec.radial_segments = 8;
  spec.rings_per_segment = 3;
  const auto [mesh, gt] = generate(spec);
  RefineConfig cfg;
  cfg.seed = 3;
  cfg.max_outer_iters = 4;
  const SiosResult a = sios2(mesh, frames_from_ground_truth(mesh, gt), cfg);
  const SiosResult b = sios2(mesh, frames_from_ground_truth(mesh, gt), cfg);
  CHECK(serialize_skeleton(a.skeleton) == serialize_skeleton(b.skeleton));
  CHECK(a.weights.w == b.weights.w);
  CHECK(poses_to_json(a.poses) == poses_to_json(b.poses));
}

TEST_CASE("refine_skeleton: percentile variant tolerates a minority of bad frames") {
  Skeleton s;
  s.bones.push_back(Bone::from_axis({0, 0, 0}, Vec3::UnitX(), 1.0, 0.2));
  s.bones.push_back(Bone::from_axis({1, 0, 0}, Vec3::UnitX(), 1.0, 0.2));
  s.joints.push_back({0, 1, Vec3(0.5, 0, 0)});
  std::mt19937_64 rng(8);
  const SkinningWeights w = random_weights(rng, 20, 2);

  // Four agreeing frames, one orthogonal outlier.
  MStepStats stats;
  BoneLengths lengths;
  lengths.lengths = {1.0, 1.0};
  lengths.tracked = {1, 1};
  for (int f = 0; f < 5; ++f) {
    stats.frames.push_back(f);
    BoneFlow flow;
    flow.flow = {Vec2(1, 0), f == 2 ? Vec2(0, 1) : Vec2(1, 0)};
    flow.mass = {100, 100};
    flow.observed = {1, 1};
    stats.flows.push_back(flow);
    stats.lengths.push_back(lengths);
  }
  RefineConfig strict;  // min over frames blocks on the outlier
  CHECK(refine_skeleton(s, stats, strict, w).merges == 0);
  RefineConfig robust;
  robust.merge_percentile = 0.5;
  CHECK(refine_skeleton(s, stats, robust, w).merges == 1);
}

TEST_CASE("sios2: gradient-refined E-step stays consistent") {
  SynthSpec spec = SynthSpec::make_chain({1.0, 1.0}, {0.25, 0.25}, 4);
  for (int f = 0; f < 4; ++f) spec.joint_angles(f, 1) = 0.3 * f;
  spec.radial_segments = 8;
  spec.rings_per_segment = 3;
  const auto [mesh, gt] = generate(spec);
  RefineConfig cfg;
  cfg.seed = 2;
  cfg.max_outer_iters = 1;
  cfg.use_gradient_refine = true;
  cfg.gradient.max_iters = 3;
  const std::vector<FrameData> frames = frames_from_ground_truth(mesh, gt, /*with_rgb=*/true);
  const SiosResult result = sios2(mesh, frames, cfg, "", &gt.vertex_colors);
  CHECK(result.poses.size() == 4);
  CHECK(result.losses.rows.size() == 4);
  for (const LossRow& row : result.losses.rows) {
    CHECK(std::isfinite(row.total));
    CHECK(row.rgb >= 0.0);
  }
}

TEST_CASE("bone_flow_csv: header and one row per bone") {
  BoneFlow flow;
  flow.flow = {Vec2(1.5, -2.0), Vec2(0, 3)};
  flow.mass = {10.0, 20.0};
  flow.observed = {1, 1};
  const std::string csv = bone_flow_csv({{4, flow}});
  CHECK(csv.substr(0, csv.find('\n')) == "frame,bone,u,v,mass");
  CHECK(csv.find("4,0,1.5,-2,10") != std::string::npos);
  CHECK(csv.find("4,1,0,3,20") != std::string::npos);
}

TEST_CASE("refine_skeleton: rule isolation (t_o above 1, t_d at infinity)") {
  Skeleton s;
  s.bones.push_back(Bone::from_axis({0, 0, 0}, Vec3::UnitX(), 1.0, 0.2));
  s.bones.push_back(Bone::from_axis({1, 0, 0}, Vec3::UnitX(), 1.0, 0.2));
  s.joints.push_back({0, 1, Vec3(0.5, 0, 0)});
  std::mt19937_64 rng(10);
  const SkinningWeights w = random_weights(rng, 20, 2);

  MStepStats stats;
  for (int f = 0; f < 3; ++f) {
    stats.frames.push_back(f);
    BoneFlow flow;
    flow.flow = {Vec2(1, 0), Vec2(1, 0)};  // perfectly in sync
    flow.mass = {100, 100};
    flow.observed = {1, 1};
    stats.flows.push_back(flow);
    BoneLengths lengths;
    lengths.lengths = {1.0 + 0.5 * f, 1.0};  // wildly fluctuating bone 0
    lengths.tracked = {1, 1};
    stats.lengths.push_back(lengths);
  }
  RefineConfig isolated;
  isolated.t_o = 1.01;  // cosine similarity can never exceed 1
  isolated.t_d_factor = 1e18;
  const RefineOutcome out = refine_skeleton(s, stats, isolated, w);
  CHECK(out.merges == 0);
  CHECK(out.splits == 0);
  CHECK(out.skeleton.n_bones() == 2);
}

TEST_CASE("sios2: quadruped preset runs end to end on separate components") {
  const SynthSpec spec = SynthSpec::quadruped(5);
  const auto [mesh, gt] = generate(spec);
  REQUIRE(mesh.components().second == 6);
  RefineConfig cfg;
  cfg.seed = 4;
  cfg.max_outer_iters = 3;  // smoke: the loop must run, not converge
  const SiosResult result = sios2(mesh, frames_from_ground_truth(mesh, gt), cfg);
  CHECK(result.skeleton.n_bones() >= 6);  // at least one bone per tube
  CHECK(result.poses.size() == 5);
  for (const LossRow& row : result.losses.rows) CHECK(std::isfinite(row.total));
}

TEST_CASE("sios2: survives mild target noise") {
  SynthSpec spec = SynthSpec::make_chain({1.0, 1.0}, {0.25, 0.25}, 6);
  spec.radial_segments = 10;
  spec.rings_per_segment = 4;
  std::vector<RigidTransform> motion(6);
  for (int f = 0; f < 6; ++f) {
    motion[f].translation = Vec3(0.15 * f, 0.1 * std::sin(0.8 * f), 0.0);
  }
  spec.root_motion = motion;
  const auto [mesh, gt] = generate(spec);
  const GroundTruth noisy = corrupt(gt, 0.004, 0.0, 21);
  RefineConfig cfg;
  cfg.seed = 11;
  const SiosResult result = sios2(mesh, frames_from_ground_truth(mesh, noisy), cfg);
  CHECK(result.skeleton.n_bones() == 1);  // rigid tube still collapses
}

TEST_CASE("refine config JSON: defaults, round trip, unknown keys") {
  RefineConfig cfg;
  cfg.t_o = 0.95;
  cfg.seed = 99;
  const RefineConfig back = RefineConfig::from_json(cfg.to_json());
  CHECK(back.t_o == doctest::Approx(0.95));
  CHECK(back.seed == 99);
  CHECK_THROWS_WITH_AS(RefineConfig::from_json("{\"nonsense\": 1}"),
                       doctest::Contains("unknown key"), IoError);
  CHECK_THROWS_AS(RefineConfig::from_json("{\"t_r\": 1.5}"), IoError);
}
