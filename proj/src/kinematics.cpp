#include "skelkit/kinematics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "skelkit/losses.hpp"

namespace skelkit {

namespace {

Eigen::Matrix4d blended_matrix(const std::vector<Eigen::Matrix4d>& bone_mats,
                               const SkinningWeights& weights, int vertex) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  for (size_t b = 0; b < bone_mats.size(); ++b) {
    m += weights.w(vertex, static_cast<int>(b)) * bone_mats[b];
  }
  return m;
}

std::vector<Eigen::Matrix4d> bone_matrices(const PoseFrame& pose) {
  std::vector<Eigen::Matrix4d> mats;
  mats.reserve(pose.bones.size());
  for (const RigidTransform& t : pose.bones) mats.push_back(t.matrix());
  return mats;
}

}  // namespace

std::vector<Vec3> blend_skin(const std::vector<Vec3>& rest, const SkinningWeights& weights,
                             const PoseFrame& pose) {
  if (weights.n_vertices() != static_cast<int>(rest.size()) ||
      weights.n_bones() != static_cast<int>(pose.bones.size())) {
    throw IoError("blend_skin dimension mismatch");
  }
  const std::vector<Eigen::Matrix4d> mats = bone_matrices(pose);
  std::vector<Vec3> out(rest.size());
  for (size_t n = 0; n < rest.size(); ++n) {
    const Eigen::Matrix4d m = blended_matrix(mats, weights, static_cast<int>(n));
    const Vec3 blended = m.topLeftCorner<3, 3>() * rest[n] + m.topRightCorner<3, 1>();
    out[n] = pose.root * blended;
  }
  return out;
}

std::vector<Vec3> blend_skin(const TriMesh& mesh, const SkinningWeights& weights,
                             const PoseFrame& pose) {
  return blend_skin(mesh.vertices, weights, pose);
}

std::vector<Vec3> backward_blend_skin(const std::vector<Vec3>& posed,
                                      const SkinningWeights& weights, const PoseFrame& pose,
                                      bool blend_inverses) {
  if (weights.n_vertices() != static_cast<int>(posed.size()) ||
      weights.n_bones() != static_cast<int>(pose.bones.size())) {
    throw IoError("backward_blend_skin dimension mismatch");
  }
  const RigidTransform root_inv = pose.root.inverse();
  std::vector<Vec3> out(posed.size());

  if (blend_inverses) {
    // Averaged-inverse variant: blend the inverted bone matrices.
    std::vector<Eigen::Matrix4d> inv_mats;
    inv_mats.reserve(pose.bones.size());
    for (const RigidTransform& t : pose.bones) inv_mats.push_back(t.inverse().matrix());
    for (size_t n = 0; n < posed.size(); ++n) {
      const Eigen::Matrix4d m = blended_matrix(inv_mats, weights, static_cast<int>(n));
      const Vec3 y = root_inv * posed[n];
      out[n] = m.topLeftCorner<3, 3>() * y + m.topRightCorner<3, 1>();
    }
    return out;
  }

  const std::vector<Eigen::Matrix4d> mats = bone_matrices(pose);
  for (size_t n = 0; n < posed.size(); ++n) {
    const Eigen::Matrix4d m = blended_matrix(mats, weights, static_cast<int>(n));
    const Mat3 a = m.topLeftCorner<3, 3>();
    Eigen::JacobiSVD<Mat3> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double smin = svd.singularValues()(2);
    if (smin <= 0.0 || svd.singularValues()(0) / smin > 1e8) {
      throw NumericalError("blended skinning matrix near-singular at vertex " +
                           std::to_string(n));
    }
    const Vec3 y = root_inv * posed[n] - m.topRightCorner<3, 1>();
    out[n] = svd.solve(y);
  }
  return out;
}

RigidTransform fit_rigid(const std::vector<Vec3>& source, const std::vector<Vec3>& target,
                         const std::vector<double>& point_weights) {
  double total = 0.0;
  Vec3 src_mean = Vec3::Zero(), dst_mean = Vec3::Zero();
  for (size_t i = 0; i < source.size(); ++i) {
    total += point_weights[i];
    src_mean += point_weights[i] * source[i];
    dst_mean += point_weights[i] * target[i];
  }
  if (total <= 0.0) throw NumericalError("rigid fit with zero total weight");
  src_mean /= total;
  dst_mean /= total;

  Mat3 cov = Mat3::Zero();
  for (size_t i = 0; i < source.size(); ++i) {
    cov += point_weights[i] * (target[i] - dst_mean) * (source[i] - src_mean).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) {
    d(2, 2) = -1.0;
  }
  const Mat3 r = svd.matrixU() * d * svd.matrixV().transpose();
  RigidTransform out;
  out.rotation = Eigen::Quaterniond(r).normalized();
  out.translation = dst_mean - r * src_mean;
  return out;
}

PoseFrame fit_pose_procrustes(const std::vector<Vec3>& rest, const PartAssignment& parts,
                              const std::vector<Vec3>& targets, bool strict) {
  if (rest.size() != targets.size() || rest.size() != parts.part.size()) {
    throw IoError("procrustes fit dimension mismatch");
  }
  PoseFrame pose = PoseFrame::identity(parts.n_parts);
  const std::vector<double> ones(rest.size(), 1.0);
  pose.root = fit_rigid(rest, targets, ones);
  const RigidTransform root_inv = pose.root.inverse();

  for (int b = 0; b < parts.n_parts; ++b) {
    std::vector<Vec3> src, dst;
    for (size_t n = 0; n < rest.size(); ++n) {
      if (parts.part[n] != b) continue;
      src.push_back(rest[n]);
      dst.push_back(root_inv * targets[n]);
    }
    bool degenerate = src.size() < 3;
    if (!degenerate) {
      Vec3 mean = Vec3::Zero();
      for (const Vec3& p : src) mean += p;
      mean /= static_cast<double>(src.size());
      Mat3 scatter = Mat3::Zero();
      double scale = 0.0;
      for (const Vec3& p : src) {
        scatter += (p - mean) * (p - mean).transpose();
        scale = std::max(scale, (p - mean).norm());
      }
      Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
      // Collinear support: second-largest eigenvalue vanishes.
      degenerate = eig.eigenvalues()(1) <= 1e-12 * std::max(scale * scale, 1e-300);
    }
    if (degenerate) {
      if (strict) {
        throw NumericalError("degenerate (collinear or undersized) part for bone " +
                             std::to_string(b));
      }
      continue;  // identity transform; the bone follows the root
    }
    pose.bones[b] = fit_rigid(src, dst, std::vector<double>(src.size(), 1.0));
  }
  return pose;
}

PoseFrame fit_pose_procrustes(const TriMesh& mesh, const PartAssignment& parts,
                              const std::vector<Vec3>& targets, bool strict) {
  return fit_pose_procrustes(mesh.vertices, parts, targets, strict);
}

namespace {

constexpr int kPoseParams = 7;  // quaternion (w,x,y,z) + translation

void pack_pose(const PoseFrame& pose, Eigen::VectorXd& p) {
  const int n = static_cast<int>(pose.bones.size()) + 1;
  p.resize(n * kPoseParams);
  auto put = [&](int slot, const RigidTransform& t) {
    p[slot * kPoseParams + 0] = t.rotation.w();
    p[slot * kPoseParams + 1] = t.rotation.x();
    p[slot * kPoseParams + 2] = t.rotation.y();
    p[slot * kPoseParams + 3] = t.rotation.z();
    p.segment<3>(slot * kPoseParams + 4) = t.translation;
  };
  put(0, pose.root);
  for (size_t b = 0; b < pose.bones.size(); ++b) put(static_cast<int>(b) + 1, pose.bones[b]);
}

PoseFrame unpack_pose(const Eigen::VectorXd& p, const PoseFrame& like) {
  PoseFrame pose = like;
  auto get = [&](int slot) {
    Eigen::Quaterniond q(p[slot * kPoseParams + 0], p[slot * kPoseParams + 1],
                         p[slot * kPoseParams + 2], p[slot * kPoseParams + 3]);
    if (q.norm() < 1e-12) q = Eigen::Quaterniond::Identity();
    return RigidTransform::from_parts(q, p.segment<3>(slot * kPoseParams + 4));
  };
  pose.root = get(0);
  for (size_t b = 0; b < pose.bones.size(); ++b) pose.bones[b] = get(static_cast<int>(b) + 1);
  return pose;
}

}  // namespace

double pose_objective(const TriMesh& mesh, const SkinningWeights& weights, const PoseFrame& pose,
                      const std::vector<Vec3>& targets, const GradientConfig& cfg) {
  const std::vector<Vec3> posed = blend_skin(mesh.vertices, weights, pose);
  double data = 0.0;
  for (size_t n = 0; n < posed.size(); ++n) {
    data += (posed[n] - targets[n]).squaredNorm();
  }
  double reg = 0.0;
  if (cfg.eta_dr > 0.0) {
    const RigidityCoeffs r = rigidity_coefficients(weights, mesh.edges, cfg.lambda);
    reg = cfg.eta_dr * dr_loss(mesh.vertices, posed, mesh.edges, r);
  }
  return data + reg;
}

PoseFrame refine_pose_gradient(const TriMesh& mesh, const SkinningWeights& weights,
                               const PoseFrame& init, const std::vector<Vec3>& targets,
                               const GradientConfig& cfg) {
  Eigen::VectorXd params;
  pack_pose(init, params);
  auto objective = [&](const Eigen::VectorXd& p) {
    return pose_objective(mesh, weights, unpack_pose(p, init), targets, cfg);
  };

  double best = objective(params);
  if (!std::isfinite(best)) throw NumericalError("non-finite pose objective");

  double step = cfg.step;
  Eigen::VectorXd grad(params.size());
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    for (int k = 0; k < params.size(); ++k) {
      Eigen::VectorXd probe = params;
      probe[k] = params[k] + cfg.fd_epsilon;
      const double hi = objective(probe);
      probe[k] = params[k] - cfg.fd_epsilon;
      const double lo = objective(probe);
      grad[k] = (hi - lo) / (2.0 * cfg.fd_epsilon);
    }
    const double gnorm = grad.norm();
    if (gnorm < 1e-12) break;

    bool improved = false;
    while (step > 1e-14) {
      const Eigen::VectorXd candidate = params - (step / gnorm) * grad;
      const double value = objective(candidate);
      if (std::isfinite(value) && value < best) {
        params = candidate;
        best = value;
        step *= 1.5;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  return unpack_pose(params, init);
}

std::string poses_to_json(const std::vector<PoseFrame>& poses) {
  nlohmann::json j = nlohmann::json::array();
  auto dump_t = [](const RigidTransform& t) {
    nlohmann::json jt;
    jt["q"] = {t.rotation.w(), t.rotation.x(), t.rotation.y(), t.rotation.z()};
    jt["t"] = {t.translation.x(), t.translation.y(), t.translation.z()};
    return jt;
  };
  for (const PoseFrame& pose : poses) {
    nlohmann::json jf;
    jf["root"] = dump_t(pose.root);
    jf["bones"] = nlohmann::json::array();
    for (const RigidTransform& t : pose.bones) jf["bones"].push_back(dump_t(t));
    j.push_back(jf);
  }
  return j.dump(2);
}

std::vector<PoseFrame> poses_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("pose parse failure: ") + e.what());
  }
  auto read_t = [](const nlohmann::json& jt) {
    Eigen::Quaterniond q(jt.at("q").at(0).get<double>(), jt.at("q").at(1).get<double>(),
                         jt.at("q").at(2).get<double>(), jt.at("q").at(3).get<double>());
    Vec3 t(jt.at("t").at(0).get<double>(), jt.at("t").at(1).get<double>(),
           jt.at("t").at(2).get<double>());
    return RigidTransform::from_parts(q, t);
  };
  std::vector<PoseFrame> poses;
  try {
    for (const auto& jf : j) {
      PoseFrame pose;
      pose.root = read_t(jf.at("root"));
      for (const auto& jb : jf.at("bones")) pose.bones.push_back(read_t(jb));
      poses.push_back(pose);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("pose schema error: ") + e.what());
  }
  return poses;
}

void save_poses(const std::vector<PoseFrame>& poses, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write pose file: " + path);
  out << poses_to_json(poses);
  if (!out) throw IoError("write failure: " + path);
}

std::vector<PoseFrame> load_poses(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open pose file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return poses_from_json(ss.str());
}

}  // namespace skelkit
