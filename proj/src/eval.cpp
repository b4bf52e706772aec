#include "skelkit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include <json.hpp>

namespace skelkit {

namespace fs = std::filesystem;

std::string EvalMetrics::to_json() const {
  nlohmann::json j;
  j["bone_count_error"] = bone_count_error;
  j["joint_position_error"] = joint_position_error;
  j["vertex_rms"] = vertex_rms;
  j["part_agreement"] = part_agreement;
  j["keypoint_transfer"] = keypoint_transfer;
  j["chamfer"] = chamfer;
  return j.dump(2);
}

namespace {

// Hungarian algorithm (potentials formulation) for square min-cost assignment.
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = std::numeric_limits<double>::infinity();
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_of_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] > 0) row_of_col[j - 1] = p[j] - 1;
  }
  return row_of_col;
}

}  // namespace

int best_part_agreement(const std::vector<int>& labels_a, int n_a, const std::vector<int>& labels_b,
                        int n_b) {
  if (labels_a.size() != labels_b.size()) {
    throw IoError("part agreement requires equal vertex counts");
  }
  const int n = std::max(n_a, n_b);
  if (n == 0) return 0;
  std::vector<std::vector<double>> overlap(n, std::vector<double>(n, 0.0));
  for (size_t i = 0; i < labels_a.size(); ++i) {
    overlap[labels_a[i]][labels_b[i]] += 1.0;
  }
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) cost[r][c] = -overlap[r][c];
  }
  const std::vector<int> row_of_col = hungarian(cost);
  double matched = 0.0;
  for (int c = 0; c < n; ++c) {
    if (row_of_col[c] >= 0) matched += overlap[row_of_col[c]][c];
  }
  return static_cast<int>(std::lround(matched));
}

double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) throw IoError("chamfer of empty point set");
  auto one_way = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    double total = 0.0;
    for (const Vec3& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& q : to) best = std::min(best, (p - q).squaredNorm());
      total += std::sqrt(best);
    }
    return total / static_cast<double>(from.size());
  };
  return 0.5 * (one_way(a, b) + one_way(b, a));
}

EvalMetrics evaluate(const TriMesh& mesh, const GroundTruth& gt, const Skeleton& run_skeleton,
                     const SkinningWeights& run_weights, const std::vector<PoseFrame>& run_poses) {
  if (run_poses.size() != gt.positions.size()) {
    throw IoError("run pose count does not match ground-truth frame count");
  }
  EvalMetrics m;
  m.bone_count_error = std::abs(run_skeleton.n_bones() - gt.skeleton.n_bones());

  const double diag = std::max(mesh.bbox_diagonal(), 1e-12);
  if (!gt.skeleton.joints.empty()) {
    if (run_skeleton.joints.empty()) {
      m.joint_position_error = 1.0;
    } else {
      double total = 0.0;
      for (const Joint& gj : gt.skeleton.joints) {
        double best = std::numeric_limits<double>::infinity();
        for (const Joint& rj : run_skeleton.joints) {
          best = std::min(best, (gj.position - rj.position).norm());
        }
        total += best;
      }
      m.joint_position_error = total / (gt.skeleton.joints.size() * diag);
    }
  }

  // Per-frame posed reconstruction under the fitted model.
  std::vector<std::vector<Vec3>> posed(run_poses.size());
  for (size_t f = 0; f < run_poses.size(); ++f) {
    posed[f] = blend_skin(mesh.vertices, run_weights, run_poses[f]);
  }

  double rms_total = 0.0;
  double chamfer_total = 0.0;
  for (size_t f = 0; f < posed.size(); ++f) {
    double sq = 0.0;
    for (size_t n = 0; n < posed[f].size(); ++n) {
      sq += (posed[f][n] - gt.positions[f][n]).squaredNorm();
    }
    rms_total += std::sqrt(sq / posed[f].size());
    chamfer_total += chamfer_distance(posed[f], gt.positions[f]);
  }
  m.vertex_rms = rms_total / posed.size();
  m.chamfer = chamfer_total / posed.size();

  const PartAssignment run_parts = one_hot_parts(run_weights);
  const int agree = best_part_agreement(run_parts.part, run_parts.n_parts, gt.labels.part,
                                        gt.labels.n_parts);
  m.part_agreement = static_cast<double>(agree) / mesh.n_vertices();

  // Keypoint transfer: each keypoint borrows the skinning of its nearest rest
  // vertex; fitted and ground-truth maps are compared in the image at
  // d_th = 0.2 sqrt(mask area).
  if (!gt.keypoints.empty()) {
    std::vector<int> anchor(gt.keypoints.size());
    for (size_t k = 0; k < gt.keypoints.size(); ++k) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int n = 0; n < mesh.n_vertices(); ++n) {
        const double d = (mesh.vertices[n] - gt.keypoints[k]).squaredNorm();
        if (d < best) {
          best = d;
          arg = n;
        }
      }
      anchor[k] = arg;
    }
    int correct = 0, total = 0;
    for (size_t f = 0; f < run_poses.size(); ++f) {
      const Camera& cam = gt.poses[f].camera;
      const double d_th = 0.2 * std::sqrt(std::max(gt.silhouettes[f].coverage(), 0.0));
      for (size_t k = 0; k < gt.keypoints.size(); ++k) {
        const int n = anchor[k];
        // Fitted map: blended matrix of the anchor vertex applied to the keypoint.
        Eigen::Matrix4d blend = Eigen::Matrix4d::Zero();
        for (int b = 0; b < run_weights.n_bones(); ++b) {
          blend += run_weights.w(n, b) * run_poses[f].bones[b].matrix();
        }
        const Vec3 local = blend.topLeftCorner<3, 3>() * gt.keypoints[k] +
                           blend.topRightCorner<3, 1>();
        const Vec3 run_kp = run_poses[f].root * local;
        // Ground-truth map: the anchor vertex's true segment transform.
        const RigidTransform gt_t = gt.poses[f].root * gt.poses[f].bones[gt.labels.part[n]];
        const Vec3 gt_kp = gt_t * gt.keypoints[k];
        ++total;
        try {
          const Vec2 run_px = project(cam, run_kp);
          const Vec2 gt_px = project(cam, gt_kp);
          if ((run_px - gt_px).norm() <= d_th) ++correct;
        } catch (const NumericalError&) {
          // behind the camera: counted incorrect
        }
      }
    }
    m.keypoint_transfer = total > 0 ? static_cast<double>(correct) / total : 0.0;
  }
  return m;
}

EvalMetrics evaluate_run(const std::string& run_dir, const std::string& gt_dir) {
  const fs::path run(run_dir);
  for (const char* name : {"skeleton.json", "weights.bin", "poses.json"}) {
    if (!fs::exists(run / name)) {
      throw IoError("missing run artifact: " + (run / name).string());
    }
  }
  const Skeleton skeleton = load_skeleton((run / "skeleton.json").string());
  const SkinningWeights weights = load_weights((run / "weights.bin").string());
  const std::vector<PoseFrame> poses = load_poses((run / "poses.json").string());
  const Dataset ds = load_dataset(gt_dir);
  std::vector<PoseFrame> poses_with_cams = poses;
  for (size_t f = 0; f < poses_with_cams.size() && f < ds.gt.poses.size(); ++f) {
    poses_with_cams[f].camera = ds.gt.poses[f].camera;
  }
  return evaluate(ds.mesh, ds.gt, skeleton, weights, poses_with_cams);
}

}  // namespace skelkit
