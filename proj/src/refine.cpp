#include "skelkit/refine.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>

#include "skelkit/rendering.hpp"

namespace skelkit {

namespace fs = std::filesystem;

RefineConfig RefineConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("refine config parse failure: ") + e.what());
  }
  RefineConfig cfg;
  const std::vector<std::string> allowed = {
      "t_r",  "t_o",   "t_d_factor",       "h_frames",        "seed",
      "max_outer_iters", "temperature", "lambda", "merge_percentile",
      "use_gradient_refine", "contraction", "loss_weights"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw IoError("unknown key '" + it.key() + "' in refine config");
    }
  }
  try {
    cfg.t_r = j.value("t_r", cfg.t_r);
    cfg.t_o = j.value("t_o", cfg.t_o);
    cfg.t_d_factor = j.value("t_d_factor", cfg.t_d_factor);
    cfg.h_frames = j.value("h_frames", cfg.h_frames);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.max_outer_iters = j.value("max_outer_iters", cfg.max_outer_iters);
    cfg.temperature = j.value("temperature", cfg.temperature);
    cfg.lambda = j.value("lambda", cfg.lambda);
    cfg.merge_percentile = j.value("merge_percentile", cfg.merge_percentile);
    cfg.use_gradient_refine = j.value("use_gradient_refine", cfg.use_gradient_refine);
    if (j.contains("contraction")) {
      const auto& jc = j.at("contraction");
      cfg.contraction.s_l = jc.value("s_l", cfg.contraction.s_l);
      cfg.contraction.vol_eps = jc.value("vol_eps", cfg.contraction.vol_eps);
      cfg.contraction.max_iters = jc.value("max_iters", cfg.contraction.max_iters);
    }
    if (j.contains("loss_weights")) {
      const auto& jw = j.at("loss_weights");
      cfg.loss_weights.beta_silhouette = jw.value("beta1", cfg.loss_weights.beta_silhouette);
      cfg.loss_weights.beta_rgb = jw.value("beta2", cfg.loss_weights.beta_rgb);
      cfg.loss_weights.beta_flow = jw.value("beta3", cfg.loss_weights.beta_flow);
      cfg.loss_weights.alpha_shape = jw.value("alpha", cfg.loss_weights.alpha_shape);
      cfg.loss_weights.eta_dr = jw.value("eta", cfg.loss_weights.eta_dr);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("refine config schema error: ") + e.what());
  }
  if (!(cfg.t_r > 0.0 && cfg.t_r < 1.0)) throw IoError("t_r must lie in (0,1)");
  if (!(cfg.t_o > -1.0 && cfg.t_o < 1.0)) throw IoError("t_o must lie in (-1,1)");
  if (!(cfg.t_d_factor > 0.0)) throw IoError("t_d_factor must be positive");
  if (cfg.h_frames < 2) throw IoError("h_frames must be at least 2");
  return cfg;
}

std::string RefineConfig::to_json() const {
  nlohmann::json j;
  j["t_r"] = t_r;
  j["t_o"] = t_o;
  j["t_d_factor"] = t_d_factor;
  j["h_frames"] = h_frames;
  j["seed"] = seed;
  j["max_outer_iters"] = max_outer_iters;
  j["temperature"] = temperature;
  j["lambda"] = lambda;
  j["merge_percentile"] = merge_percentile;
  j["use_gradient_refine"] = use_gradient_refine;
  j["contraction"] = {{"s_l", contraction.s_l},
                      {"vol_eps", contraction.vol_eps},
                      {"max_iters", contraction.max_iters}};
  j["loss_weights"] = {{"beta1", loss_weights.beta_silhouette},
                       {"beta2", loss_weights.beta_rgb},
                       {"beta3", loss_weights.beta_flow},
                       {"alpha", loss_weights.alpha_shape},
                       {"eta", loss_weights.eta_dr}};
  return j.dump(2);
}

JointLocalization localize_joint_positions(const std::vector<Vec3>& positions,
                                           const SkinningWeights& weights,
                                           const Skeleton& skeleton, double t_r) {
  JointLocalization out;
  out.positions.resize(skeleton.n_joints());
  out.supported.assign(skeleton.n_joints(), 0);
  for (int ji = 0; ji < skeleton.n_joints(); ++ji) {
    const Joint& joint = skeleton.joints[ji];
    Vec3 mean = Vec3::Zero();
    int count = 0;
    for (size_t n = 0; n < positions.size(); ++n) {
      if (weights.w(n, joint.bone_a) >= t_r && weights.w(n, joint.bone_b) >= t_r) {
        mean += positions[n];
        ++count;
      }
    }
    if (count > 0) {
      out.positions[ji] = mean / count;
      out.supported[ji] = 1;
    } else {
      out.positions[ji] = joint.position;  // keep previous, flagged
    }
  }
  return out;
}

Skeleton localize_joints(const std::vector<Vec3>& positions, const SkinningWeights& weights,
                         const Skeleton& skeleton, double t_r) {
  const JointLocalization loc = localize_joint_positions(positions, weights, skeleton, t_r);
  Skeleton out = skeleton;
  for (int ji = 0; ji < out.n_joints(); ++ji) {
    out.joints[ji].position = loc.positions[ji];
  }
  return out;
}

Skeleton pose_skeleton(const Skeleton& skeleton, const PoseFrame& pose) {
  if (static_cast<int>(pose.bones.size()) != skeleton.n_bones()) {
    throw IoError("pose_skeleton bone count mismatch");
  }
  Skeleton out = skeleton;
  for (int b = 0; b < skeleton.n_bones(); ++b) {
    const RigidTransform t = pose.root * pose.bones[b];
    const Mat3 rot = t.rotation.toRotationMatrix();
    out.bones[b].center = t * skeleton.bones[b].center;
    out.bones[b].precision = rot * skeleton.bones[b].precision * rot.transpose();
  }
  return out;
}

Skeleton refit_bone_ellipsoids(const Skeleton& skeleton, const std::vector<Vec3>& positions,
                               const PartAssignment& parts) {
  if (parts.n_parts != skeleton.n_bones() || parts.part.size() != positions.size()) {
    throw IoError("refit_bone_ellipsoids dimension mismatch");
  }
  Skeleton out = skeleton;
  for (int b = 0; b < skeleton.n_bones(); ++b) {
    if (parts.counts[b] < 2) continue;  // unsupported bones keep their geometry
    Vec3 mean = Vec3::Zero();
    for (size_t n = 0; n < positions.size(); ++n) {
      if (parts.part[n] == b) mean += positions[n];
    }
    mean /= parts.counts[b];
    Mat3 cov = Mat3::Zero();
    for (size_t n = 0; n < positions.size(); ++n) {
      if (parts.part[n] != b) continue;
      const Vec3 d = positions[n] - mean;
      cov += d * d.transpose();
    }
    cov /= parts.counts[b];
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);

    // Length: extent of the support along the major axis.
    const Vec3 axis = eig.eigenvectors().col(2);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (size_t n = 0; n < positions.size(); ++n) {
      if (parts.part[n] != b) continue;
      const double s = (positions[n] - mean).dot(axis);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    const double length = hi - lo;

    // Semi-axes from the second moments (uniform-segment factor sqrt(3)).
    Mat3 precision = Mat3::Zero();
    for (int k = 0; k < 3; ++k) {
      const double semi =
          std::max({std::sqrt(3.0 * std::max(eig.eigenvalues()(k), 0.0)), 0.05 * length, 1e-6});
      precision += eig.eigenvectors().col(k) * eig.eigenvectors().col(k).transpose() /
                   (semi * semi);
    }
    out.bones[b].center = mean;
    out.bones[b].precision = precision;
    out.bones[b].length = length;
  }
  return out;
}

namespace {

// Splits a bone's joints into the clusters at its two ends by the sign of the
// axial coordinate. Returns per-end (mean position, count).
struct EndClusters {
  Vec3 neg_mean = Vec3::Zero();
  Vec3 pos_mean = Vec3::Zero();
  int neg_count = 0;
  int pos_count = 0;
};

EndClusters cluster_bone_joints(const Bone& bone, const std::vector<int>& joint_ids,
                                const std::vector<Vec3>& joint_positions) {
  EndClusters ends;
  const Vec3 axis = bone.major_axis();
  for (int ji : joint_ids) {
    const Vec3& p = joint_positions[ji];
    if ((p - bone.center).dot(axis) < 0) {
      ends.neg_mean += p;
      ++ends.neg_count;
    } else {
      ends.pos_mean += p;
      ++ends.pos_count;
    }
  }
  if (ends.neg_count > 0) ends.neg_mean /= ends.neg_count;
  if (ends.pos_count > 0) ends.pos_mean /= ends.pos_count;
  return ends;
}

}  // namespace

BoneLengths bone_lengths(const Skeleton& skeleton, const std::vector<Vec3>& joint_positions,
                         const std::vector<uint8_t>& joint_supported) {
  if (joint_positions.size() != skeleton.joints.size() ||
      joint_supported.size() != skeleton.joints.size()) {
    throw IoError("bone_lengths joint array mismatch");
  }
  BoneLengths out;
  out.lengths.resize(skeleton.n_bones());
  out.tracked.assign(skeleton.n_bones(), 0);
  for (int b = 0; b < skeleton.n_bones(); ++b) {
    const Bone& bone = skeleton.bones[b];
    std::vector<int> joint_ids;
    bool all_supported = true;
    for (size_t ji = 0; ji < skeleton.joints.size(); ++ji) {
      if (skeleton.joints[ji].bone_a == b || skeleton.joints[ji].bone_b == b) {
        joint_ids.push_back(static_cast<int>(ji));
        all_supported = all_supported && joint_supported[ji];
      }
    }
    if (joint_ids.empty() || !all_supported) {
      out.lengths[b] = bone.length;  // frozen
      continue;
    }
    const EndClusters ends = cluster_bone_joints(bone, joint_ids, joint_positions);
    const auto [lo, hi] = bone.endpoints();
    if (ends.neg_count > 0 && ends.pos_count > 0) {
      out.lengths[b] = (ends.pos_mean - ends.neg_mean).norm();
    } else if (ends.neg_count > 0) {
      out.lengths[b] = (hi - ends.neg_mean).norm();  // far node on the + end
    } else {
      out.lengths[b] = (lo - ends.pos_mean).norm();
    }
    out.tracked[b] = 1;
  }
  return out;
}

BoneLengths bone_lengths(const Skeleton& skeleton, const std::vector<Vec3>& joint_positions) {
  return bone_lengths(skeleton, joint_positions,
                      std::vector<uint8_t>(joint_positions.size(), 1));
}

namespace {

Mat3 clamp_spd(const Mat3& m) {
  const Mat3 sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat3> eig(sym);
  Eigen::Vector3d vals = eig.eigenvalues().cwiseMax(1e-8);
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

// Far point of `bone` looking away from `shared`: the farthest joint of the
// bone not shared with the merge partner, or the bone endpoint otherwise.
Vec3 far_point(const Skeleton& skel, int bone, int partner, const Vec3& shared) {
  Vec3 best = Vec3::Zero();
  double best_dist = -1.0;
  for (const Joint& j : skel.joints) {
    const bool mine = j.bone_a == bone || j.bone_b == bone;
    const bool with_partner = (j.bone_a == bone && j.bone_b == partner) ||
                              (j.bone_a == partner && j.bone_b == bone);
    if (!mine || with_partner) continue;
    const double d = (j.position - shared).norm();
    if (d > best_dist) {
      best_dist = d;
      best = j.position;
    }
  }
  if (best_dist >= 0.0) return best;
  const auto [lo, hi] = skel.bones[bone].endpoints();
  return (lo - shared).norm() > (hi - shared).norm() ? lo : hi;
}

double merge_statistic(std::vector<double> sims, double percentile) {
  std::sort(sims.begin(), sims.end());
  if (percentile <= 0.0) return sims.front();  // strict min over frames
  const size_t idx = std::min(sims.size() - 1,
                              static_cast<size_t>(percentile * (sims.size() - 1)));
  return sims[idx];
}

}  // namespace

RefineOutcome refine_skeleton(const Skeleton& skeleton, const MStepStats& stats,
                              const RefineConfig& cfg, const SkinningWeights& weights) {
  if (stats.frames.empty()) throw IoError("refine_skeleton needs at least one sampled frame");
  if (weights.n_bones() != skeleton.n_bones()) {
    throw IoError("refine_skeleton weight column mismatch");
  }
  const int n_bones = skeleton.n_bones();
  const int n_frames = static_cast<int>(stats.frames.size());

  // ---- Merge phase -------------------------------------------------------
  std::vector<bool> consumed(n_bones, false);
  std::vector<std::pair<int, int>> merges;

  // Vestigial bones: too little weight mass to produce reliable flow evidence
  // or support a rigid fit. The bar scales with the mean part mass so sliver
  // parts left at motion boundaries get folded into a neighbor instead of
  // wedging the merge cascade. Such skeleton-initialization outliers are
  // absorbed into their nearest joint-connected neighbor.
  {
    const double mean_mass = static_cast<double>(weights.n_vertices()) / n_bones;
    const double floor =
        std::max({1e-3 * weights.n_vertices(), 0.25 * mean_mass, 2.5});
    const auto pairs = skeleton.connected_pairs();
    for (int b = 0; b < n_bones; ++b) {
      if (consumed[b] || weights.w.col(b).sum() >= floor) continue;
      int nearest = -1;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [x, y] : pairs) {
        if (x != b && y != b) continue;
        const int other = x == b ? y : x;
        if (consumed[other]) continue;
        const double d = (skeleton.bones[b].center - skeleton.bones[other].center).norm();
        if (d < best) {
          best = d;
          nearest = other;
        }
      }
      if (nearest < 0) continue;
      consumed[b] = consumed[nearest] = true;
      merges.emplace_back(std::min(b, nearest), std::max(b, nearest));
    }
  }

  struct Candidate {
    double stat;
    int a, b;
  };
  std::vector<Candidate> candidates;
  for (const auto& [a, b] : skeleton.connected_pairs()) {
    bool usable = true;
    std::vector<double> sims;
    for (int f = 0; f < n_frames && usable; ++f) {
      const BoneFlow& flow = stats.flows[f];
      if (!flow.observed[a] || !flow.observed[b]) {
        usable = false;  // an unobserved frame removes the pair this step
        break;
      }
      if (flow.flow[a].norm() <= 1e-12 || flow.flow[b].norm() <= 1e-12) {
        continue;  // static frame: no direction evidence
      }
      sims.push_back(cosine_similarity(flow.flow[a], flow.flow[b]));
    }
    if (!usable || sims.empty()) continue;
    const double stat = merge_statistic(std::move(sims), cfg.merge_percentile);
    if (stat > cfg.t_o) candidates.push_back({stat, a, b});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    if (x.stat != y.stat) return x.stat > y.stat;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });

  for (const Candidate& c : candidates) {
    if (consumed[c.a] || consumed[c.b]) continue;  // one merge per bone per step
    consumed[c.a] = consumed[c.b] = true;
    merges.emplace_back(c.a, c.b);
  }

  // Old-bone -> new-bone map; the merged bone takes the slot of the lower
  // index member.
  std::vector<int> partner(n_bones, -1);
  for (const auto& [a, b] : merges) {
    partner[a] = b;
    partner[b] = a;
  }
  std::vector<int> bone_map(n_bones, -1);
  Skeleton merged;
  SkinningWeights merged_w;
  std::vector<bool> was_merged;
  merged_w.w.resize(weights.n_vertices(), 0);
  std::vector<Eigen::VectorXd> new_columns;
  for (int b = 0; b < n_bones; ++b) {
    if (partner[b] >= 0 && partner[b] < b) continue;  // handled with its partner
    const int slot = static_cast<int>(merged.bones.size());
    bone_map[b] = slot;
    if (partner[b] < 0) {
      merged.bones.push_back(skeleton.bones[b]);
      new_columns.push_back(weights.w.col(b));
      was_merged.push_back(false);
      continue;
    }
    const int a = b;
    const int bb = partner[b];
    bone_map[bb] = slot;
    // Blend weight from the softmax of summed vertex weights.
    const double sum_a = weights.w.col(a).sum();
    const double sum_b = weights.w.col(bb).sum();
    const double w_a = 1.0 / (1.0 + std::exp(sum_b - sum_a));
    const double w_b = 1.0 - w_a;

    Bone fused;
    fused.center = w_a * skeleton.bones[a].center + w_b * skeleton.bones[bb].center;
    fused.precision =
        clamp_spd(w_a * skeleton.bones[a].precision + w_b * skeleton.bones[bb].precision);
    // Length from the far-end joints of the two bones.
    Vec3 shared = Vec3::Zero();
    int shared_count = 0;
    for (const Joint& j : skeleton.joints) {
      if ((j.bone_a == a && j.bone_b == bb) || (j.bone_a == bb && j.bone_b == a)) {
        shared += j.position;
        ++shared_count;
      }
    }
    if (shared_count > 0) shared /= shared_count;
    const Vec3 far_a = far_point(skeleton, a, bb, shared);
    const Vec3 far_b = far_point(skeleton, bb, a, shared);
    fused.length = (far_a - far_b).norm();
    merged.bones.push_back(fused);
    new_columns.push_back(weights.w.col(a) + weights.w.col(bb));
    was_merged.push_back(true);
  }
  merged_w.w.resize(weights.n_vertices(), static_cast<int>(new_columns.size()));
  for (size_t c = 0; c < new_columns.size(); ++c) merged_w.w.col(c) = new_columns[c];

  // Joints re-pointed through the map; self-loops drop, duplicates keep the
  // first occurrence.
  std::set<std::pair<int, int>> seen_pairs;
  for (const Joint& j : skeleton.joints) {
    const int a = bone_map[j.bone_a];
    const int b = bone_map[j.bone_b];
    if (a == b) continue;
    const auto key = std::minmax(a, b);
    if (!seen_pairs.insert(key).second) continue;
    merged.joints.push_back({key.first, key.second, j.position});
  }

  // ---- Split phase -------------------------------------------------------
  // Candidates come from pre-merge stats, so only unmerged bones qualify.
  std::vector<int> split_slots;
  for (int b = 0; b < n_bones; ++b) {
    if (partner[b] >= 0) continue;
    std::vector<double> tracked;
    for (int f = 0; f < n_frames; ++f) {
      if (stats.lengths[f].tracked[b]) tracked.push_back(stats.lengths[f].lengths[b]);
    }
    if (tracked.size() < 2) continue;
    const double lo = *std::min_element(tracked.begin(), tracked.end());
    const double hi = *std::max_element(tracked.begin(), tracked.end());
    double mean = 0.0;
    for (double v : tracked) mean += v;
    mean /= static_cast<double>(tracked.size());
    if (hi - lo > cfg.t_d_factor * mean) split_slots.push_back(bone_map[b]);
  }
  std::sort(split_slots.begin(), split_slots.end());

  int splits = 0;
  for (int slot : split_slots) {
    Skeleton& skel = merged;
    const Bone bone = skel.bones[slot];
    const std::vector<int> joint_ids = skel.joints_of_bone(slot);
    std::vector<Vec3> joint_pos(skel.joints.size());
    for (size_t ji = 0; ji < skel.joints.size(); ++ji) joint_pos[ji] = skel.joints[ji].position;
    const EndClusters ends = cluster_bone_joints(bone, joint_ids, joint_pos);
    const auto [ep_lo, ep_hi] = bone.endpoints();
    const Vec3 end_a = ends.neg_count > 0 ? ends.neg_mean : ep_lo;
    const Vec3 end_b = ends.pos_count > 0 ? ends.pos_mean : ep_hi;
    const Vec3 mid = 0.5 * (end_a + end_b);

    Vec3 axis = end_b - end_a;
    if (axis.norm() < 1e-12) continue;  // nothing to split over
    axis.normalize();
    // Radial scale carried over from the split bone.
    Eigen::SelfAdjointEigenSolver<Mat3> eig(bone.precision);
    const double radial =
        1.0 / std::sqrt(std::max(std::sqrt(eig.eigenvalues()(1) * eig.eigenvalues()(2)), 1e-12));

    const Bone half_a = Bone::from_axis(0.5 * (end_a + mid), axis, (mid - end_a).norm(), radial);
    const Bone half_b = Bone::from_axis(0.5 * (mid + end_b), axis, (end_b - mid).norm(), radial);
    const int slot_b = skel.n_bones();
    skel.bones[slot] = half_a;
    skel.bones.push_back(half_b);

    // Joints at the + end move to the new half; the fresh joint links the two.
    for (int ji : joint_ids) {
      Joint& j = skel.joints[ji];
      if ((j.position - bone.center).dot(bone.major_axis()) >= 0) {
        if (j.bone_a == slot) j.bone_a = slot_b;
        if (j.bone_b == slot) j.bone_b = slot_b;
      }
    }
    skel.joints.push_back({slot, slot_b, mid});

    // Weight column halved between the two halves; row sums stay 1 and the
    // next E-step recomputes from the new ellipsoids.
    merged_w.w.conservativeResize(Eigen::NoChange, slot_b + 1);
    merged_w.w.col(slot_b) = 0.5 * merged_w.w.col(slot);
    merged_w.w.col(slot) *= 0.5;
    ++splits;
  }

  RefineOutcome outcome;
  outcome.skeleton = std::move(merged);
  outcome.weights = std::move(merged_w);
  outcome.merges = static_cast<int>(merges.size());
  outcome.splits = splits;
  return outcome;
}

namespace {

// Eq.-1 bias slot, filled with motion consistency: minus the mean squared
// reconstruction residual of assigning vertex n to bone b under the fitted
// frame transforms, scaled by the average self-residual. Pulls part
// boundaries onto the motion discontinuities that geometry alone cannot see.
Eigen::MatrixXd motion_bias(const TriMesh& mesh, const std::vector<FrameData>& frames,
                            const std::vector<PoseFrame>& poses, const PartAssignment& parts) {
  const int n = mesh.n_vertices();
  const int b = parts.n_parts;
  Eigen::MatrixXd residual = Eigen::MatrixXd::Zero(n, b);
  for (size_t f = 0; f < frames.size(); ++f) {
    for (int k = 0; k < b; ++k) {
      const RigidTransform t = poses[f].root * poses[f].bones[k];
      for (int i = 0; i < n; ++i) {
        residual(i, k) += (t * mesh.vertices[i] - frames[f].targets[i]).squaredNorm();
      }
    }
  }
  residual /= static_cast<double>(frames.size());

  double self = 0.0;
  for (int i = 0; i < n; ++i) self += residual(i, parts.part[i]);
  const double diag = mesh.bbox_diagonal();
  const double sigma_sq = std::max(self / n, 1e-10 * diag * diag);
  return (-residual / (2.0 * sigma_sq)).cwiseMax(-50.0);
}

// Portable partial Fisher-Yates; modulo bias is irrelevant here.
std::vector<int> sample_frames(std::vector<int> pool, int h, std::mt19937_64& rng) {
  const size_t take = std::min<size_t>(static_cast<size_t>(h), pool.size());
  for (size_t i = 0; i < take; ++i) {
    const size_t j = i + static_cast<size_t>(rng() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

SiosResult sios2(const TriMesh& mesh, const std::vector<FrameData>& frames,
                 const RefineConfig& cfg, const std::string& checkpoint_dir,
                 const std::vector<Vec3>* vertex_colors) {
  if (frames.size() < 2) throw IoError("sios2 needs at least 2 frames");
  for (const FrameData& f : frames) {
    if (f.targets.size() != mesh.vertices.size()) {
      throw IoError("frame target count does not match mesh vertex count");
    }
  }

  // Initial skeleton: contraction, then connectivity surgery.
  const TriMesh contracted = contract(mesh, cfg.contraction);
  const SkeletonGraph graph = connectivity_surgery(contracted);
  Skeleton skel = skeleton_from_graph(graph, mesh);

  std::mt19937_64 rng(cfg.seed);
  SiosResult result;
  int quiet = 0;
  const double shape = shape_loss(mesh);
  const LossWeights& lw = cfg.loss_weights;

  for (int iter = 0;; ++iter) {
    // ---- E-step: reconstruction-model update ----
    // The bone Gaussians and weights are part of the reconstruction model:
    // refit the ellipsoids to their hard support, fit per-part transforms,
    // then fold the motion residuals back into the weights through the Eq.-1
    // bias slot so part boundaries track the articulation.
    {
      const SkinningWeights w_pre =
          compute_skinning_weights(mesh.vertices, skel, nullptr, cfg.temperature);
      skel = refit_bone_ellipsoids(skel, mesh.vertices, one_hot_parts(w_pre));
    }
    SkinningWeights w = compute_skinning_weights(mesh.vertices, skel, nullptr, cfg.temperature);
    PartAssignment parts = one_hot_parts(w);
    std::vector<PoseFrame> poses(frames.size());
    for (size_t f = 0; f < frames.size(); ++f) {
      poses[f] = fit_pose_procrustes(mesh.vertices, parts, frames[f].targets, /*strict=*/false);
    }
    {
      const Eigen::MatrixXd bias = motion_bias(mesh, frames, poses, parts);
      w = compute_skinning_weights(mesh.vertices, skel, &bias, cfg.temperature);
      parts = one_hot_parts(w);
      skel = refit_bone_ellipsoids(skel, mesh.vertices, parts);
      w = compute_skinning_weights(mesh.vertices, skel, &bias, cfg.temperature);
      parts = one_hot_parts(w);
    }
    std::vector<std::vector<Vec3>> posed(frames.size());
    for (size_t f = 0; f < frames.size(); ++f) {
      poses[f] = fit_pose_procrustes(mesh.vertices, parts, frames[f].targets, /*strict=*/false);
      if (cfg.use_gradient_refine) {
        GradientConfig gc = cfg.gradient;
        gc.eta_dr = lw.eta_dr;
        gc.lambda = cfg.lambda;
        poses[f] = refine_pose_gradient(mesh, w, poses[f], frames[f].targets, gc);
      }
      poses[f].camera = frames[f].camera;
      posed[f] = blend_skin(mesh.vertices, w, poses[f]);
    }

    {
      const JointLocalization loc =
          localize_joint_positions(mesh.vertices, w, skel, cfg.t_r);
      for (int ji = 0; ji < skel.n_joints(); ++ji) {
        if (loc.supported[ji]) skel.joints[ji].position = loc.positions[ji];
      }
    }

    const RigidityCoeffs rig = rigidity_coefficients(w, mesh.edges, cfg.lambda);
    LossReport report;
    for (size_t f = 0; f < frames.size(); ++f) {
      LossRow row;
      row.frame = static_cast<int>(f);
      if (frames[f].silhouette.width > 0) {
        row.silhouette = silhouette_loss(
            rasterize_silhouette(posed[f], mesh.faces, frames[f].camera), frames[f].silhouette);
      }
      if (frames[f].has_rgb && vertex_colors) {
        row.rgb = rgb_loss(
            rasterize_colors(posed[f], mesh.faces, *vertex_colors, frames[f].camera),
            frames[f].rgb);
      }
      if (frames[f].has_flow && f + 1 < frames.size()) {
        row.flow = flow_loss(
            flow_from_correspondence(posed[f], posed[f + 1], frames[f].camera,
                                     frames[f + 1].camera, mesh.faces),
            frames[f].flow);
      }
      row.shape = shape;
      if (f + 1 < frames.size()) {
        row.dr = dr_loss(posed[f], posed[f + 1], mesh.edges, rig);
      }
      row.total = lw.beta_silhouette * row.silhouette + lw.beta_rgb * row.rgb +
                  lw.beta_flow * row.flow + lw.alpha_shape * row.shape + lw.eta_dr * row.dr;
      report.rows.push_back(row);
    }

    result.skeleton = skel;
    result.weights = w;
    result.poses = poses;
    result.losses = report;

    if (!checkpoint_dir.empty()) {
      const fs::path dir = fs::path(checkpoint_dir) / ("iter_" + std::to_string(iter));
      fs::create_directories(dir);
      save_skeleton(skel, (dir / "skeleton.json").string());
      save_weights(w, (dir / "weights.bin").string());
      std::ofstream csv(dir / "losses.csv", std::ios::binary);
      csv << report.to_csv();
    }

    if (quiet >= 2 || iter >= cfg.max_outer_iters) break;

    // ---- M-step: sampled-frame statistics, then merge/split ----
    std::vector<int> pool;
    for (size_t f = 0; f < frames.size(); ++f) {
      if (frames[f].has_flow) pool.push_back(static_cast<int>(f));
    }
    if (pool.empty()) break;  // no flow evidence to refine with
    MStepStats stats;
    stats.frames = sample_frames(pool, cfg.h_frames, rng);
    for (int f : stats.frames) {
      const std::vector<uint8_t> vis = visibility(posed[f], mesh.faces, frames[f].camera);
      const ProjectedVertices proj = project_vertices(frames[f].camera, posed[f]);
      std::vector<uint8_t> combined(vis.size());
      for (size_t n = 0; n < vis.size(); ++n) combined[n] = vis[n] && proj.valid[n];
      const SurfaceFlow surf = sample_surface_flow(frames[f].flow, proj.pixels, combined);
      stats.flows.push_back(bone_flow(surf, w));

      const JointLocalization loc = localize_joint_positions(posed[f], w, skel, cfg.t_r);
      const Skeleton posed_skel = pose_skeleton(skel, poses[f]);
      stats.lengths.push_back(bone_lengths(posed_skel, loc.positions, loc.supported));
    }

    if (!checkpoint_dir.empty()) {
      std::vector<std::pair<int, BoneFlow>> rows;
      for (size_t k = 0; k < stats.frames.size(); ++k) {
        rows.emplace_back(stats.frames[k], stats.flows[k]);
      }
      std::ofstream csv(fs::path(checkpoint_dir) / ("iter_" + std::to_string(iter)) /
                            "bone_flows.csv",
                        std::ios::binary);
      csv << bone_flow_csv(rows);
    }

    const RefineOutcome outcome = refine_skeleton(skel, stats, cfg, w);
    result.history.push_back({iter, skel.n_bones(), outcome.skeleton.n_bones(), outcome.merges,
                              outcome.splits, report.totals().total});
    quiet = (outcome.merges + outcome.splits == 0) ? quiet + 1 : 0;
    skel = outcome.skeleton;
  }
  return result;
}

}  // namespace skelkit
