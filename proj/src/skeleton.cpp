#include "skelkit/skeleton.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace skelkit {

namespace {

// Deterministic orthonormal completion of a unit axis.
Mat3 frame_from_axis(const Vec3& axis) {
  Vec3 u = axis.normalized();
  Vec3 helper = std::abs(u.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Vec3 v = u.cross(helper).normalized();
  Vec3 w = u.cross(v).normalized();
  Mat3 rows;
  rows.row(0) = u.transpose();
  rows.row(1) = v.transpose();
  rows.row(2) = w.transpose();
  return rows;
}

}  // namespace

Bone Bone::from_axis(const Vec3& center, const Vec3& axis, double length, double radial) {
  const double half = std::max(length * 0.5, 1e-6);
  const double rad = std::max(radial, 1e-6);
  const Mat3 rows = frame_from_axis(axis);
  Eigen::Vector3d lambda(1.0 / (half * half), 1.0 / (rad * rad), 1.0 / (rad * rad));
  Bone bone;
  bone.center = center;
  bone.precision = rows.transpose() * lambda.asDiagonal() * rows;
  bone.length = length;
  return bone;
}

Vec3 Bone::major_axis() const {
  Eigen::SelfAdjointEigenSolver<Mat3> eig(precision);
  Vec3 axis = eig.eigenvectors().col(0);  // smallest eigenvalue first
  // Deterministic sign: largest-magnitude component positive.
  int k = 0;
  axis.cwiseAbs().maxCoeff(&k);
  if (axis[k] < 0) axis = -axis;
  return axis.normalized();
}

std::pair<Vec3, Vec3> Bone::endpoints() const {
  const Vec3 half = 0.5 * length * major_axis();
  return {center - half, center + half};
}

double Bone::mahalanobis(const Vec3& x) const {
  const Vec3 d = x - center;
  return d.dot(precision * d);
}

std::vector<std::pair<int, int>> Skeleton::connected_pairs() const {
  std::set<std::pair<int, int>> pairs;
  for (const Joint& j : joints) {
    pairs.emplace(std::min(j.bone_a, j.bone_b), std::max(j.bone_a, j.bone_b));
  }
  return {pairs.begin(), pairs.end()};
}

std::vector<int> Skeleton::joints_of_bone(int b) const {
  std::vector<int> out;
  for (size_t ji = 0; ji < joints.size(); ++ji) {
    if (joints[ji].bone_a == b || joints[ji].bone_b == b) {
      out.push_back(static_cast<int>(ji));
    }
  }
  return out;
}

Skeleton skeleton_from_graph(const SkeletonGraph& graph, const TriMesh& mesh) {
  if (graph.edges.empty()) {
    throw IoError("empty skeleton graph: no edges to turn into bones");
  }
  Skeleton skeleton;
  skeleton.bones.reserve(graph.edges.size());
  for (size_t ei = 0; ei < graph.edges.size(); ++ei) {
    const Vec3& a = graph.nodes[graph.edges[ei][0]];
    const Vec3& b = graph.nodes[graph.edges[ei][1]];
    const double length = (b - a).norm();
    const Vec3 axis = length > 1e-12 ? Vec3((b - a) / length) : Vec3::UnitX();

    // RMS distance of the absorbed original vertices from the edge line.
    double sum_sq = 0.0;
    int count = 0;
    if (ei < graph.edge_absorbed.size()) {
      for (int v : graph.edge_absorbed[ei]) {
        const Vec3 d = mesh.vertices[v] - a;
        sum_sq += (d - d.dot(axis) * axis).squaredNorm();
        ++count;
      }
    }
    double radial = count > 0 ? std::sqrt(sum_sq / count) : 0.0;
    radial = std::max(radial, 0.05 * length);  // floor against collapsed limbs

    skeleton.bones.push_back(Bone::from_axis(0.5 * (a + b), axis, length, radial));
  }

  // One joint per incident bone pair at every node of degree >= 2.
  std::vector<std::vector<int>> node_bones(graph.nodes.size());
  for (size_t ei = 0; ei < graph.edges.size(); ++ei) {
    node_bones[graph.edges[ei][0]].push_back(static_cast<int>(ei));
    node_bones[graph.edges[ei][1]].push_back(static_cast<int>(ei));
  }
  for (size_t ni = 0; ni < graph.nodes.size(); ++ni) {
    const auto& incident = node_bones[ni];
    for (size_t p = 0; p < incident.size(); ++p) {
      for (size_t q = p + 1; q < incident.size(); ++q) {
        skeleton.joints.push_back({incident[p], incident[q], graph.nodes[ni]});
      }
    }
  }
  return skeleton;
}

std::string serialize_skeleton(const Skeleton& skeleton) {
  nlohmann::json j;
  j["bones"] = nlohmann::json::array();
  for (const Bone& b : skeleton.bones) {
    nlohmann::json jb;
    jb["center"] = {b.center.x(), b.center.y(), b.center.z()};
    std::vector<double> q(9);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) q[r * 3 + c] = b.precision(r, c);
    jb["Q"] = q;
    jb["length"] = b.length;
    j["bones"].push_back(jb);
  }
  j["joints"] = nlohmann::json::array();
  for (const Joint& jt : skeleton.joints) {
    nlohmann::json jj;
    jj["bones"] = {jt.bone_a, jt.bone_b};
    jj["pos"] = {jt.position.x(), jt.position.y(), jt.position.z()};
    j["joints"].push_back(jj);
  }
  return j.dump(2);
}

Skeleton deserialize_skeleton(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("skeleton parse failure: ") + e.what());
  }
  Skeleton skeleton;
  try {
    for (const auto& jb : j.at("bones")) {
      Bone b;
      b.center = Vec3(jb.at("center").at(0).get<double>(), jb.at("center").at(1).get<double>(),
                      jb.at("center").at(2).get<double>());
      const auto& q = jb.at("Q");
      if (q.size() != 9) throw IoError("skeleton schema error: Q must have 9 entries");
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) b.precision(r, c) = q.at(r * 3 + c).get<double>();
      b.length = jb.at("length").get<double>();
      skeleton.bones.push_back(b);
    }
    for (const auto& jj : j.at("joints")) {
      Joint jt;
      jt.bone_a = jj.at("bones").at(0).get<int>();
      jt.bone_b = jj.at("bones").at(1).get<int>();
      jt.position = Vec3(jj.at("pos").at(0).get<double>(), jj.at("pos").at(1).get<double>(),
                         jj.at("pos").at(2).get<double>());
      if (jt.bone_a == jt.bone_b || jt.bone_a < 0 || jt.bone_b < 0 ||
          jt.bone_a >= skeleton.n_bones() || jt.bone_b >= skeleton.n_bones()) {
        throw IoError("skeleton schema error: invalid joint bone indices");
      }
      skeleton.joints.push_back(jt);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("skeleton schema error: ") + e.what());
  }
  return skeleton;
}

void save_skeleton(const Skeleton& skeleton, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write skeleton file: " + path);
  out << serialize_skeleton(skeleton);
  if (!out) throw IoError("write failure: " + path);
}

Skeleton load_skeleton(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open skeleton file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_skeleton(ss.str());
}

}  // namespace skelkit
