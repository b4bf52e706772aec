#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "skelkit/eval.hpp"
#include "skelkit/synth.hpp"
#include "test_utils.hpp"

using namespace skelkit;
using namespace skelkit::test;

namespace {

SkinningWeights label_weights(const PartAssignment& labels) {
  SkinningWeights w;
  w.w = Eigen::MatrixXd::Zero(static_cast<int>(labels.part.size()), labels.n_parts);
  for (size_t i = 0; i < labels.part.size(); ++i) w.w(static_cast<int>(i), labels.part[i]) = 1.0;
  return w;
}

std::pair<TriMesh, GroundTruth> arm_dataset() {
  SynthSpec spec = SynthSpec::make_chain({1.0, 1.0, 1.0}, {0.22, 0.22, 0.22}, 5);
  for (int f = 0; f < 5; ++f) {
    spec.joint_angles(f, 1) = 0.4 * std::sin(1.3 * f);
    spec.joint_angles(f, 2) = 0.5 * std::sin(1.3 * f + 0.7);
  }
  return generate(spec);
}

}  // namespace

TEST_CASE("evaluate: ground truth against itself is perfect") {
  const auto [mesh, gt] = arm_dataset();
  const EvalMetrics m = evaluate(mesh, gt, gt.skeleton, label_weights(gt.labels), gt.poses);
  CHECK(m.bone_count_error == 0);
  CHECK(m.joint_position_error == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(m.vertex_rms == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(m.part_agreement == doctest::Approx(1.0));
  CHECK(m.keypoint_transfer == doctest::Approx(1.0));
  CHECK(m.chamfer == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("evaluate: one extra bone means bone-count error 1") {
  const auto [mesh, gt] = arm_dataset();
  Skeleton extra = gt.skeleton;
  extra.bones.push_back(Bone::from_axis({9, 9, 9}, Vec3::UnitX(), 1.0, 0.1));
  SkinningWeights w = label_weights(gt.labels);
  w.w.conservativeResize(Eigen::NoChange, 4);
  w.w.col(3).setZero();
  std::vector<PoseFrame> poses = gt.poses;
  for (PoseFrame& p : poses) p.bones.push_back(RigidTransform::identity());
  const EvalMetrics m = evaluate(mesh, gt, extra, w, poses);
  CHECK(m.bone_count_error == 1);
}

TEST_CASE("evaluate: 1-degree joint perturbation keeps keypoint transfer high") {
  const auto [mesh, gt] = arm_dataset();
  std::vector<PoseFrame> perturbed = gt.poses;
  for (PoseFrame& p : perturbed) {
    for (size_t b = 1; b < p.bones.size(); ++b) {
      p.bones[b].rotation =
          Eigen::Quaterniond(Eigen::AngleAxisd(M_PI / 180.0, Vec3::UnitZ())) *
          p.bones[b].rotation;
    }
  }
  const EvalMetrics m = evaluate(mesh, gt, gt.skeleton, label_weights(gt.labels), perturbed);
  CHECK(m.keypoint_transfer >= 0.95);
}

TEST_CASE("chamfer: coincident sets are exactly zero") {
  std::mt19937_64 rng(2);
  std::vector<Vec3> pts;
  for (int i = 0; i < 40; ++i) pts.push_back(random_unit(rng) * uniform(rng, 0.1, 2.0));
  CHECK(chamfer_distance(pts, pts) == 0.0);
  // And symmetric in its arguments.
  std::vector<Vec3> other = pts;
  for (Vec3& p : other) p += Vec3(0.1, 0, 0);
  CHECK(chamfer_distance(pts, other) == doctest::Approx(chamfer_distance(other, pts)));
}

TEST_CASE("part agreement: permuted labels still match perfectly") {
  std::vector<int> a = {0, 0, 1, 1, 2, 2, 2};
  std::vector<int> b = {2, 2, 0, 0, 1, 1, 1};  // same partition, renamed
  CHECK(best_part_agreement(a, 3, b, 3) == 7);
  std::vector<int> c = {0, 0, 1, 1, 2, 2, 1};  // one vertex flipped
  CHECK(best_part_agreement(a, 3, c, 3) == 6);
  // Different part counts pad with empty parts.
  std::vector<int> d = {0, 0, 0, 0, 1, 1, 1};
  CHECK(best_part_agreement(a, 3, d, 2) == 7 - 2);
}

TEST_CASE("evaluate_run: file-level round trip") {
  const auto [mesh, gt] = arm_dataset();
  const std::string gt_dir = temp_path("skelkit_eval_gt");
  const std::string run_dir = temp_path("skelkit_eval_run");
  std::filesystem::remove_all(gt_dir);
  std::filesystem::remove_all(run_dir);
  save_dataset(mesh, gt, gt_dir);
  std::filesystem::create_directories(run_dir);
  save_skeleton(gt.skeleton, run_dir + "/skeleton.json");
  save_weights(label_weights(gt.labels), run_dir + "/weights.bin");
  save_poses(gt.poses, run_dir + "/poses.json");
  const EvalMetrics m = evaluate_run(run_dir, gt_dir);
  CHECK(m.bone_count_error == 0);
  CHECK(m.vertex_rms < 1e-6);
  CHECK(m.part_agreement == doctest::Approx(1.0));

  // Missing artifact is a contract violation.
  std::filesystem::remove(run_dir + "/weights.bin");
  CHECK_THROWS_WITH_AS(evaluate_run(run_dir, gt_dir), doctest::Contains("weights.bin"), IoError);
}
