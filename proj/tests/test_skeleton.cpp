#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "skelkit/skeleton.hpp"
#include "test_utils.hpp"

using namespace skelkit;
using namespace skelkit::test;

namespace {

// Bones with random orientation and positive scales.
Skeleton random_skeleton(std::mt19937_64& rng, int n_bones) {
  Skeleton s;
  for (int b = 0; b < n_bones; ++b) {
    const Vec3 center(uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2));
    s.bones.push_back(Bone::from_axis(center, random_unit(rng), uniform(rng, 0.2, 3.0),
                                      uniform(rng, 0.05, 1.0)));
  }
  for (int b = 0; b + 1 < n_bones; ++b) {
    s.joints.push_back({b, b + 1, Vec3(uniform(rng, -2, 2), 0, 0)});
  }
  return s;
}

}  // namespace

TEST_CASE("skeleton_from_graph: single edge with absorbed ring") {
  SkeletonGraph graph;
  graph.nodes = {{0, 0, 0}, {2, 0, 0}};
  graph.edges = {{0, 1}};
  // Mesh vertices on a radius-0.5 ring around the edge.
  std::vector<Vec3> verts;
  std::vector<int> absorbed;
  for (int i = 0; i < 8; ++i) {
    const double phi = 2.0 * M_PI * i / 8;
    verts.push_back({1.0, 0.5 * std::cos(phi), 0.5 * std::sin(phi)});
    absorbed.push_back(i);
  }
  verts.push_back({0, 0, 0});  // spare vertices so faces validate
  verts.push_back({2, 0, 0});
  std::vector<Face> faces = {{0, 1, 8}, {1, 2, 8}, {2, 3, 8}, {3, 4, 9},
                             {4, 5, 9}, {5, 6, 9}, {6, 7, 9}, {7, 0, 9}};
  const TriMesh mesh = TriMesh::from_faces(verts, faces);
  graph.edge_absorbed = {absorbed};
  graph.node_absorbed = {{8}, {9}};

  const Skeleton skel = skeleton_from_graph(graph, mesh);
  REQUIRE(skel.n_bones() == 1);
  CHECK(skel.n_joints() == 0);
  const Bone& bone = skel.bones[0];
  CHECK((bone.center - Vec3(1, 0, 0)).norm() < 1e-12);
  CHECK(bone.length == doctest::Approx(2.0).epsilon(1e-12));
  // Lambda = (1/1^2, 1/0.5^2, 1/0.5^2): eigenvalues of Q are {1, 4, 4}.
  Eigen::SelfAdjointEigenSolver<Mat3> eig(bone.precision);
  CHECK(eig.eigenvalues()(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(eig.eigenvalues()(1) == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(eig.eigenvalues()(2) == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(std::abs(bone.major_axis().dot(Vec3::UnitX())) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("skeleton_from_graph: chain and star topology") {
  const TriMesh mesh = make_tetrahedron();  // positions are irrelevant here

  SkeletonGraph chain;
  chain.nodes = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  chain.edges = {{0, 1}, {1, 2}};
  chain.edge_absorbed = {{0, 1}, {2, 3}};
  const Skeleton chain_skel = skeleton_from_graph(chain, mesh);
  CHECK(chain_skel.n_bones() == 2);
  REQUIRE(chain_skel.n_joints() == 1);
  CHECK((chain_skel.joints[0].position - Vec3(1, 0, 0)).norm() < 1e-12);

  SkeletonGraph star;
  star.nodes = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  star.edges = {{0, 1}, {0, 2}, {0, 3}};
  star.edge_absorbed = {{0}, {1}, {2, 3}};
  const Skeleton star_skel = skeleton_from_graph(star, mesh);
  CHECK(star_skel.n_bones() == 3);
  CHECK(star_skel.n_joints() == 3);  // all incident pairs
}

TEST_CASE("skeleton_from_graph: empty graph rejected") {
  SkeletonGraph empty;
  empty.nodes = {{0, 0, 0}};
  CHECK_THROWS_AS(skeleton_from_graph(empty, make_tetrahedron()), IoError);
}

TEST_CASE("serialize_skeleton: bit-exact round trips") {
  std::mt19937_64 rng(3);

  Skeleton no_joints = random_skeleton(rng, 2);
  no_joints.joints.clear();
  const std::string text0 = serialize_skeleton(no_joints);
  CHECK(serialize_skeleton(deserialize_skeleton(text0)) == text0);

  // 19 bones: the size the refinement typically lands on for a human.
  const Skeleton big = random_skeleton(rng, 19);
  const std::string text = serialize_skeleton(big);
  const Skeleton back = deserialize_skeleton(text);
  CHECK(serialize_skeleton(back) == text);
  REQUIRE(back.n_bones() == 19);
  for (int b = 0; b < 19; ++b) {
    CHECK((back.bones[b].center - big.bones[b].center).norm() == 0.0);
    CHECK((back.bones[b].precision - big.bones[b].precision).norm() == 0.0);
    CHECK(back.bones[b].length == big.bones[b].length);
  }
}

TEST_CASE("deserialize_skeleton: truncated and malformed input") {
  CHECK_THROWS_AS(deserialize_skeleton("{\"bones\": [{\"center\": [0,0"), IoError);
  CHECK_THROWS_AS(deserialize_skeleton("{\"bones\": []}"), IoError);  // joints missing
  // Joint referencing an out-of-range bone.
  CHECK_THROWS_AS(
      deserialize_skeleton(
          R"({"bones":[{"center":[0,0,0],"Q":[1,0,0,0,1,0,0,0,1],"length":1}],)"
          R"("joints":[{"bones":[0,5],"pos":[0,0,0]}]})"),
      IoError);
}

TEST_CASE("bone precision is symmetric positive definite") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const Skeleton s = random_skeleton(rng, 4);
    for (const Bone& bone : s.bones) {
      CHECK((bone.precision - bone.precision.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      Eigen::SelfAdjointEigenSolver<Mat3> eig(bone.precision);
      CHECK(eig.eigenvalues()(0) > 0.0);
    }
  }
}

TEST_CASE("eigendecomposition of Q reconstructs Q (packing fidelity)") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const Skeleton s = random_skeleton(rng, 3);
    for (const Bone& bone : s.bones) {
      Eigen::SelfAdjointEigenSolver<Mat3> eig(bone.precision);
      const Mat3 rebuilt = eig.eigenvectors() * eig.eigenvalues().asDiagonal() *
                           eig.eigenvectors().transpose();
      CHECK((rebuilt - bone.precision).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("skeleton file round trip") {
  std::mt19937_64 rng(29);
  const Skeleton s = random_skeleton(rng, 5);
  const std::string path = temp_path("skelkit_skel.json");
  save_skeleton(s, path);
  const Skeleton back = load_skeleton(path);
  CHECK(serialize_skeleton(back) == serialize_skeleton(s));
}
