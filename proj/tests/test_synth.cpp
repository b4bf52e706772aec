#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

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

}  // namespace

TEST_CASE("generate: static single segment gives identical frames and zero flow") {
  const SynthSpec spec = SynthSpec::make_chain({1.0}, {0.3}, 4);
  const auto [mesh, gt] = generate(spec);
  for (int f = 1; f < 4; ++f) {
    for (int n = 0; n < mesh.n_vertices(); ++n) {
      CHECK((gt.positions[f][n] - gt.positions[0][n]).norm() == 0.0);
    }
  }
  for (const FlowRaster& flow : gt.flows) {
    for (float v : flow.flow) CHECK(std::abs(v) < 1e-9);
  }
  CHECK(signed_volume(mesh) > 0.0);  // outward winding
}

TEST_CASE("generate: hinge rotation traces arcs of constant radius") {
  SynthSpec spec = SynthSpec::make_chain({1.0, 1.0}, {0.2, 0.2}, 10);
  for (int f = 0; f < 10; ++f) {
    spec.joint_angles(f, 1) = (M_PI / 4.0) * f / 9.0;  // 0 -> 45 degrees
  }
  const auto [mesh, gt] = generate(spec);
  const Vec3 pivot(1, 0, 0);
  const Vec3 axis = Vec3::UnitZ();
  for (int n = 0; n < mesh.n_vertices(); ++n) {
    if (gt.labels.part[n] != 1) continue;
    const Vec3 rel0 = mesh.vertices[n] - pivot;
    const double radius0 = (rel0 - rel0.dot(axis) * axis).norm();
    for (int f = 0; f < 10; ++f) {
      const Vec3 rel = gt.positions[f][n] - pivot;
      const double radius = (rel - rel.dot(axis) * axis).norm();
      CHECK(radius == doctest::Approx(radius0).epsilon(1e-9));
      if (radius0 < 1e-6) continue;  // on the hinge axis: arc angle undefined
      const double angle0 = std::atan2(rel0.y(), rel0.x());
      const double angle = std::atan2(rel.y(), rel.x());
      double delta = angle - angle0;
      while (delta > M_PI) delta -= 2 * M_PI;
      while (delta < -M_PI) delta += 2 * M_PI;
      CHECK(delta == doctest::Approx(spec.joint_angles(f, 1)).epsilon(1e-9));
    }
  }
}

TEST_CASE("generate: three segments carry three bones and two joints") {
  const SynthSpec spec = SynthSpec::make_chain({1.0, 0.8, 0.6}, {0.2, 0.18, 0.15}, 2);
  const auto [mesh, gt] = generate(spec);
  CHECK(gt.skeleton.n_bones() == 3);
  CHECK(gt.skeleton.n_joints() == 2);
  CHECK(gt.labels.n_parts == 3);
  for (int c : gt.labels.counts) CHECK(c > 0);
  // Keypoints: 2 joints + 3 midpoints.
  CHECK(gt.keypoints.size() == 5);
}

TEST_CASE("generate: ground truth satisfies exact LBS consistency") {
  SynthSpec spec = SynthSpec::make_chain({1.0, 1.0}, {0.25, 0.25}, 5);
  for (int f = 0; f < 5; ++f) spec.joint_angles(f, 1) = 0.15 * f;
  std::mt19937_64 rng(3);
  spec.root_motion.resize(5);
  for (auto& t : spec.root_motion) t = random_transform(rng, 0.4, 0.6);
  const auto [mesh, gt] = generate(spec);
  const SkinningWeights w = label_weights(gt.labels);
  for (int f = 0; f < 5; ++f) {
    const std::vector<Vec3> lbs = blend_skin(mesh, w, gt.poses[f]);
    for (int n = 0; n < mesh.n_vertices(); ++n) {
      CHECK((lbs[n] - gt.positions[f][n]).norm() < 1e-12);
    }
  }
}

TEST_CASE("generate: flow rasters match analytic projected displacement") {
  SynthSpec spec = SynthSpec::make_chain({1.0, 1.0}, {0.25, 0.25}, 3);
  spec.joint_angles(1, 1) = 0.035;  // ~2 degrees
  spec.joint_angles(2, 1) = 0.07;
  spec.camera.width = spec.camera.height = 128;
  const auto [mesh, gt] = generate(spec);
  const Camera& cam = gt.poses[0].camera;
  const FlowRaster& flow = gt.flows[0];
  int checked = 0;
  for (int n = 0; n < mesh.n_vertices(); ++n) {
    if (!gt.visibility_masks[0][n]) continue;
    const Vec2 px_t = project(cam, gt.positions[0][n]);
    const Vec2 px_t1 = project(gt.poses[1].camera, gt.positions[1][n]);
    const int x = static_cast<int>(px_t.x());
    const int y = static_cast<int>(px_t.y());
    if (x < 0 || x >= flow.width || y < 0 || y >= flow.height) continue;
    const size_t idx = static_cast<size_t>(y) * flow.width + x;
    if (flow.confidence[idx] <= 0) continue;
    const Vec2 raster_flow(flow.flow[2 * idx], flow.flow[2 * idx + 1]);
    const Vec2 analytic = px_t1 - px_t;
    CHECK((raster_flow - analytic).norm() < 0.51);
    ++checked;
  }
  CHECK(checked > 50);
}

TEST_CASE("generate: rejects self-intersecting and malformed specs") {
  SynthSpec bad = SynthSpec::make_chain({0.5}, {0.8}, 2);  // radius > length
  CHECK_THROWS_WITH_AS(generate(bad), doctest::Contains("self-intersecting"), IoError);

  SynthSpec negative = SynthSpec::make_chain({1.0}, {-0.2}, 2);
  CHECK_THROWS_AS(generate(negative), IoError);

  SynthSpec wrong_angles = SynthSpec::make_chain({1.0}, {0.2}, 2);
  wrong_angles.joint_angles = Eigen::MatrixXd::Zero(3, 1);
  CHECK_THROWS_AS(generate(wrong_angles), IoError);
}

TEST_CASE("corrupt: zero noise is the identity, negative rejected, chi statistics hold") {
  const SynthSpec spec = SynthSpec::make_chain({1.0}, {0.3}, 7);
  const auto [mesh, gt] = generate(spec);
  const GroundTruth same = corrupt(gt, 0.0, 0.0, 42);
  for (size_t f = 0; f < gt.positions.size(); ++f) {
    for (size_t n = 0; n < gt.positions[f].size(); ++n) {
      CHECK((same.positions[f][n] - gt.positions[f][n]).norm() == 0.0);
    }
  }
  CHECK_THROWS_AS(corrupt(gt, -0.1, 0.0, 1), IoError);

  const double sigma = 0.01;
  const GroundTruth noisy = corrupt(gt, sigma, 0.0, 7);
  double sq = 0.0;
  size_t count = 0;
  for (size_t f = 0; f < gt.positions.size(); ++f) {
    for (size_t n = 0; n < gt.positions[f].size(); ++n) {
      sq += (noisy.positions[f][n] - gt.positions[f][n]).squaredNorm();
      ++count;
    }
  }
  REQUIRE(count >= 1000);
  const double rms = std::sqrt(sq / count);
  CHECK(std::abs(rms - sigma * std::sqrt(3.0)) < 0.1 * sigma * std::sqrt(3.0));

  // Determinism under the seed.
  const GroundTruth noisy2 = corrupt(gt, sigma, 0.0, 7);
  for (size_t n = 0; n < gt.positions[0].size(); ++n) {
    CHECK((noisy2.positions[0][n] - noisy.positions[0][n]).norm() == 0.0);
  }
}

TEST_CASE("quadruped preset generates a full articulated body") {
  const SynthSpec spec = SynthSpec::quadruped(4);
  const auto [mesh, gt] = generate(spec);
  CHECK(gt.skeleton.n_bones() == 11);  // 2 torso + 8 leg + 1 neck
  CHECK(gt.skeleton.n_joints() == 10);
  CHECK(mesh.components().second == 6);  // torso + 4 legs + neck tubes
  CHECK(gt.labels.n_parts == 11);
}

TEST_CASE("dataset save/load round trip") {
  SynthSpec spec = SynthSpec::make_chain({1.0, 1.0}, {0.25, 0.25}, 3);
  spec.joint_angles(1, 1) = 0.3;
  spec.joint_angles(2, 1) = 0.5;
  const auto [mesh, gt] = generate(spec);
  const std::string dir = temp_path("skelkit_dataset");
  std::filesystem::remove_all(dir);
  save_dataset(mesh, gt, dir);
  const Dataset ds = load_dataset(dir);
  CHECK(ds.mesh.n_vertices() == mesh.n_vertices());
  CHECK(ds.gt.skeleton.n_bones() == gt.skeleton.n_bones());
  REQUIRE(ds.gt.positions.size() == gt.positions.size());
  for (size_t f = 0; f < gt.positions.size(); ++f) {
    for (size_t n = 0; n < gt.positions[f].size(); ++n) {
      CHECK((ds.gt.positions[f][n] - gt.positions[f][n]).norm() < 1e-12);
    }
  }
  CHECK(ds.gt.flows.size() == gt.flows.size());
  for (size_t f = 0; f < gt.flows.size(); ++f) {
    CHECK(ds.gt.flows[f].flow == gt.flows[f].flow);
  }
  CHECK(ds.gt.labels.part == gt.labels.part);
  CHECK(ds.gt.keypoints.size() == gt.keypoints.size());
}

TEST_CASE("corrupt: flow noise perturbs rasters deterministically") {
  SynthSpec spec = SynthSpec::make_chain({1.0, 1.0}, {0.25, 0.25}, 3);
  spec.joint_angles(1, 1) = 0.3;
  spec.joint_angles(2, 1) = 0.6;
  const auto [mesh, gt] = generate(spec);
  const GroundTruth noisy = corrupt(gt, 0.0, 0.5, 11);
  REQUIRE(noisy.flows.size() == gt.flows.size());
  double delta = 0.0;
  for (size_t f = 0; f < gt.flows.size(); ++f) {
    for (size_t i = 0; i < gt.flows[f].flow.size(); ++i) {
      delta += std::abs(noisy.flows[f].flow[i] - gt.flows[f].flow[i]);
    }
    // positions untouched
    for (size_t n = 0; n < gt.positions[f].size(); ++n) {
      CHECK((noisy.positions[f][n] - gt.positions[f][n]).norm() == 0.0);
    }
  }
  CHECK(delta > 0.0);
  const GroundTruth again = corrupt(gt, 0.0, 0.5, 11);
  CHECK(again.flows[0].flow == noisy.flows[0].flow);
}

TEST_CASE("camera JSON round trip") {
  const SynthSpec spec = SynthSpec::make_chain({1.0}, {0.3}, 2);
  const auto [mesh, gt] = generate(spec);
  const Camera& cam = gt.poses[0].camera;
  const Camera back = camera_from_json(camera_to_json(cam));
  CHECK(back.fx == cam.fx);
  CHECK(back.fy == cam.fy);
  CHECK(back.cx == cam.cx);
  CHECK(back.cy == cam.cy);
  CHECK(back.width == cam.width);
  CHECK(back.height == cam.height);
  CHECK(back.extrinsic.rotation_angle_to(cam.extrinsic) < 1e-12);
  CHECK((back.extrinsic.translation - cam.extrinsic.translation).norm() < 1e-12);
  CHECK_THROWS_AS(camera_from_json("{\"fx\": 1"), IoError);
}

TEST_CASE("synth spec JSON round trip and unknown keys") {
  SynthSpec spec = SynthSpec::make_chain({1.0, 0.5}, {0.2, 0.1}, 3);
  spec.joint_angles(2, 1) = 0.4;
  const SynthSpec back = SynthSpec::from_json(spec.to_json());
  CHECK(back.frames == 3);
  CHECK(back.total_segments() == 2);
  CHECK(back.joint_angles(2, 1) == doctest::Approx(0.4));
  CHECK_THROWS_WITH_AS(SynthSpec::from_json("{\"frames\": 2, \"bogus\": 1}"),
                       doctest::Contains("unknown key"), IoError);
  const SynthSpec quad = SynthSpec::from_json("{\"preset\": \"quadruped\", \"frames\": 4}");
  CHECK(quad.total_segments() == 11);
}
