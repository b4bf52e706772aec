#include "skelkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

namespace skelkit {

namespace fs = std::filesystem;

TriMesh make_icosphere(int subdivisions, double radius) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  std::vector<Face> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (Vec3& v : verts) v.normalize();

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int idx = static_cast<int>(verts.size());
      verts.push_back((verts[a] + verts[b]).normalized());
      midpoint[key] = idx;
      return idx;
    };
    std::vector<Face> next;
    next.reserve(faces.size() * 4);
    for (const Face& f : faces) {
      const int ab = mid(f[0], f[1]);
      const int bc = mid(f[1], f[2]);
      const int ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  for (Vec3& v : verts) v *= radius;
  return TriMesh::from_faces(std::move(verts), std::move(faces));
}

int SynthSpec::total_segments() const {
  int n = 0;
  for (const SynthChain& c : chains) n += static_cast<int>(c.lengths.size());
  return n;
}

SynthSpec SynthSpec::make_chain(const std::vector<double>& lengths,
                                const std::vector<double>& radii, int frames) {
  SynthSpec spec;
  SynthChain chain;
  chain.lengths = lengths;
  chain.radii = radii;
  chain.hinge_axes.assign(lengths.size(), Vec3::UnitZ());
  spec.chains.push_back(chain);
  spec.frames = frames;
  spec.joint_angles = Eigen::MatrixXd::Zero(frames, static_cast<int>(lengths.size()));
  return spec;
}

SynthSpec SynthSpec::quadruped(int frames) {
  SynthSpec spec;
  // Torso along +x at shoulder height.
  SynthChain torso;
  torso.base = Vec3(0, 1.0, 0);
  torso.direction = Vec3::UnitX();
  torso.lengths = {1.2, 1.2};
  torso.radii = {0.35, 0.35};
  torso.hinge_axes = {Vec3::UnitZ(), Vec3::UnitZ()};
  spec.chains.push_back(torso);

  const double leg_x[4] = {0.2, 0.2, 2.1, 2.1};
  const double leg_z[4] = {0.3, -0.3, 0.3, -0.3};
  const int leg_parent[4] = {0, 0, 1, 1};
  for (int l = 0; l < 4; ++l) {
    SynthChain leg;
    leg.base = Vec3(leg_x[l], 0.95, leg_z[l]);
    leg.direction = -Vec3::UnitY();
    leg.parent_segment = leg_parent[l];
    leg.lengths = {0.5, 0.5};
    leg.radii = {0.12, 0.1};
    leg.hinge_axes = {Vec3::UnitZ(), Vec3::UnitZ()};
    spec.chains.push_back(leg);
  }

  SynthChain neck;
  neck.base = Vec3(2.35, 1.1, 0);
  neck.direction = Vec3(0.8, 0.6, 0).normalized();
  neck.parent_segment = 1;
  neck.lengths = {0.7};
  neck.radii = {0.15};
  neck.hinge_axes = {Vec3::UnitZ()};
  spec.chains.push_back(neck);

  spec.frames = frames;
  const int total = spec.total_segments();
  spec.joint_angles = Eigen::MatrixXd::Zero(frames, total);
  // Gentle gait: legs swing out of phase, neck bobs.
  for (int f = 0; f < frames; ++f) {
    const double t = 2.0 * M_PI * f / std::max(1, frames);
    for (int l = 0; l < 4; ++l) {
      const double phase = (l % 2 == 0) ? 0.0 : M_PI;
      spec.joint_angles(f, 2 + 2 * l) = 0.4 * std::sin(t + phase);
      spec.joint_angles(f, 3 + 2 * l) = 0.3 * std::sin(t + phase + 0.5);
    }
    spec.joint_angles(f, 10) = 0.2 * std::sin(t);
  }
  spec.radial_segments = 10;
  spec.rings_per_segment = 5;
  return spec;
}

namespace {

// Deterministic, implementation-independent uniforms and gaussians.
double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double next_gaussian(std::mt19937_64& rng) {
  const double u1 = 1.0 - next_unit(rng);  // (0, 1]
  const double u2 = next_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

struct FlatSegment {
  int parent = -1;
  Vec3 pivot = Vec3::Zero();    // hinge point, rest space
  Vec3 axis = Vec3::UnitZ();    // hinge axis
  Vec3 direction = Vec3::UnitX();
  Vec3 mid = Vec3::Zero();
  double length = 0.0;
  double radius = 0.0;
};

std::vector<FlatSegment> flatten(const SynthSpec& spec) {
  std::vector<FlatSegment> flat;
  int base_index = 0;
  for (size_t ci = 0; ci < spec.chains.size(); ++ci) {
    const SynthChain& chain = spec.chains[ci];
    if (chain.lengths.size() != chain.radii.size() ||
        chain.lengths.size() != chain.hinge_axes.size()) {
      throw IoError("synth chain arrays must have equal lengths");
    }
    if (ci == 0 && chain.parent_segment >= 0) {
      throw IoError("chain 0 must be the root chain");
    }
    if (ci > 0 && (chain.parent_segment < 0 || chain.parent_segment >= base_index)) {
      throw IoError("chain parent segment must refer to an earlier chain");
    }
    const Vec3 dir = chain.direction.normalized();
    double offset = 0.0;
    for (size_t s = 0; s < chain.lengths.size(); ++s) {
      if (!(chain.lengths[s] > 0.0) || !(chain.radii[s] > 0.0)) {
        throw IoError("segment lengths and radii must be positive");
      }
      if (chain.radii[s] > chain.lengths[s]) {
        throw IoError("self-intersecting spec: radius exceeds segment length");
      }
      FlatSegment seg;
      seg.parent = s == 0 ? chain.parent_segment
                          : base_index + static_cast<int>(s) - 1;
      seg.pivot = chain.base + offset * dir;
      seg.axis = chain.hinge_axes[s].normalized();
      seg.direction = dir;
      seg.length = chain.lengths[s];
      seg.radius = chain.radii[s];
      seg.mid = seg.pivot + 0.5 * seg.length * dir;
      flat.push_back(seg);
      offset += chain.lengths[s];
    }
    base_index += static_cast<int>(chain.lengths.size());
  }
  return flat;
}

Mat3 radial_frame(const Vec3& dir) {
  const Vec3 helper = std::abs(dir.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Mat3 frame;
  frame.col(2) = dir;
  frame.col(0) = dir.cross(helper).normalized();
  frame.col(1) = dir.cross(frame.col(0)).normalized();
  // Ensure U x V = D so the strip winding faces outward.
  if (frame.col(0).cross(frame.col(1)).dot(dir) < 0) frame.col(1) = -frame.col(1);
  return frame;
}

void build_tube(const SynthChain& chain, int first_segment, int radial, int rings_per_segment,
                std::vector<Vec3>& vertices, std::vector<Face>& faces, std::vector<int>& labels) {
  const Vec3 dir = chain.direction.normalized();
  const Mat3 frame = radial_frame(dir);
  const Vec3 u = frame.col(0);
  const Vec3 v = frame.col(1);
  const int n_segments = static_cast<int>(chain.lengths.size());
  const int cap_rings = std::max(1, radial / 4);

  // Axial stations with owning segment and radius.
  struct Station {
    double offset;
    double radius;
    int segment;
  };
  std::vector<Station> stations;
  double cum = 0.0;
  for (int s = 0; s < n_segments; ++s) {
    for (int k = 0; k < rings_per_segment; ++k) {
      stations.push_back(
          {cum + chain.lengths[s] * k / rings_per_segment, chain.radii[s], first_segment + s});
    }
    cum += chain.lengths[s];
  }
  stations.push_back({cum, chain.radii[n_segments - 1], first_segment + n_segments - 1});

  const int base = static_cast<int>(vertices.size());
  auto push_ring = [&](const Vec3& center, double rho, int label) {
    for (int i = 0; i < radial; ++i) {
      const double phi = 2.0 * M_PI * i / radial;
      vertices.push_back(center + rho * (std::cos(phi) * u + std::sin(phi) * v));
      labels.push_back(label);
    }
  };

  // Start apex + cap, main stations, end cap + apex, in axial order.
  const double r0 = chain.radii[0];
  const double r1 = chain.radii[n_segments - 1];
  vertices.push_back(chain.base - r0 * dir);
  labels.push_back(first_segment);
  for (int j = 1; j <= cap_rings; ++j) {
    const double psi = 0.5 * M_PI * j / (cap_rings + 1);
    push_ring(chain.base - r0 * std::cos(psi) * dir, r0 * std::sin(psi), first_segment);
  }
  for (const Station& st : stations) {
    push_ring(chain.base + st.offset * dir, st.radius, st.segment);
  }
  const Vec3 far_end = chain.base + cum * dir;
  for (int j = cap_rings; j >= 1; --j) {
    const double psi = 0.5 * M_PI * j / (cap_rings + 1);
    push_ring(far_end + r1 * std::cos(psi) * dir, r1 * std::sin(psi),
              first_segment + n_segments - 1);
  }
  vertices.push_back(far_end + r1 * dir);
  labels.push_back(first_segment + n_segments - 1);

  const int n_rings = 2 * cap_rings + static_cast<int>(stations.size());
  const int apex0 = base;
  const int apex1 = static_cast<int>(vertices.size()) - 1;
  auto ring_vertex = [&](int ring, int i) { return base + 1 + ring * radial + (i % radial); };

  for (int i = 0; i < radial; ++i) {
    faces.push_back({apex0, ring_vertex(0, i + 1), ring_vertex(0, i)});
  }
  for (int ring = 0; ring + 1 < n_rings; ++ring) {
    for (int i = 0; i < radial; ++i) {
      faces.push_back({ring_vertex(ring, i), ring_vertex(ring, i + 1), ring_vertex(ring + 1, i + 1)});
      faces.push_back({ring_vertex(ring, i), ring_vertex(ring + 1, i + 1), ring_vertex(ring + 1, i)});
    }
  }
  for (int i = 0; i < radial; ++i) {
    faces.push_back({apex1, ring_vertex(n_rings - 1, i), ring_vertex(n_rings - 1, i + 1)});
  }
}

Camera make_lookat_camera(const Vec3& eye, const Vec3& center, int width, int height,
                          double focal) {
  Vec3 z = (center - eye).normalized();
  Vec3 up = Vec3::UnitY();
  if (std::abs(up.dot(z)) > 0.99) up = Vec3::UnitX();
  const Vec3 x = up.cross(z).normalized();
  const Vec3 y = z.cross(x).normalized();
  Mat3 rot;
  rot.row(0) = x.transpose();
  rot.row(1) = y.transpose();
  rot.row(2) = z.transpose();
  Camera cam;
  cam.fx = cam.fy = focal;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  cam.width = width;
  cam.height = height;
  cam.extrinsic.rotation = Eigen::Quaterniond(rot).normalized();
  cam.extrinsic.translation = -(rot * eye);
  return cam;
}

const std::vector<Vec3>& segment_palette() {
  static const std::vector<Vec3> palette = {
      {0.90, 0.10, 0.10}, {0.10, 0.70, 0.15}, {0.15, 0.25, 0.90}, {0.95, 0.75, 0.10},
      {0.70, 0.15, 0.80}, {0.10, 0.80, 0.80}, {0.95, 0.45, 0.10}, {0.55, 0.55, 0.55}};
  return palette;
}

nlohmann::json camera_json(const Camera& cam) {
  nlohmann::json j;
  j["fx"] = cam.fx;
  j["fy"] = cam.fy;
  j["cx"] = cam.cx;
  j["cy"] = cam.cy;
  j["width"] = cam.width;
  j["height"] = cam.height;
  j["q"] = {cam.extrinsic.rotation.w(), cam.extrinsic.rotation.x(), cam.extrinsic.rotation.y(),
            cam.extrinsic.rotation.z()};
  j["t"] = {cam.extrinsic.translation.x(), cam.extrinsic.translation.y(),
            cam.extrinsic.translation.z()};
  return j;
}

Camera camera_from(const nlohmann::json& j) {
  Camera cam;
  cam.fx = j.at("fx").get<double>();
  cam.fy = j.at("fy").get<double>();
  cam.cx = j.at("cx").get<double>();
  cam.cy = j.at("cy").get<double>();
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  cam.extrinsic.rotation =
      Eigen::Quaterniond(j.at("q").at(0).get<double>(), j.at("q").at(1).get<double>(),
                         j.at("q").at(2).get<double>(), j.at("q").at(3).get<double>())
          .normalized();
  cam.extrinsic.translation = Vec3(j.at("t").at(0).get<double>(), j.at("t").at(1).get<double>(),
                                   j.at("t").at(2).get<double>());
  return cam;
}

void check_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw IoError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

}  // namespace

std::pair<TriMesh, GroundTruth> generate(const SynthSpec& spec) {
  if (spec.frames < 1) throw IoError("synth spec needs at least one frame");
  const std::vector<FlatSegment> segments = flatten(spec);
  const int n_segments = static_cast<int>(segments.size());
  if (spec.joint_angles.rows() != spec.frames || spec.joint_angles.cols() != n_segments) {
    throw IoError("joint_angles must be frames x total_segments");
  }
  if (!spec.root_motion.empty() && static_cast<int>(spec.root_motion.size()) != spec.frames) {
    throw IoError("root_motion must be empty or one transform per frame");
  }

  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<int> labels;
  int first_segment = 0;
  for (const SynthChain& chain : spec.chains) {
    build_tube(chain, first_segment, spec.radial_segments, spec.rings_per_segment, vertices,
               faces, labels);
    first_segment += static_cast<int>(chain.lengths.size());
  }
  TriMesh mesh = TriMesh::from_faces(std::move(vertices), std::move(faces));

  GroundTruth gt;
  gt.labels.part = labels;
  gt.labels.n_parts = n_segments;
  gt.labels.counts.assign(n_segments, 0);
  for (int l : labels) ++gt.labels.counts[l];

  for (int s = 0; s < n_segments; ++s) {
    gt.skeleton.bones.push_back(
        Bone::from_axis(segments[s].mid, segments[s].direction, segments[s].length,
                        segments[s].radius));
    if (segments[s].parent >= 0) {
      gt.skeleton.joints.push_back({segments[s].parent, s, segments[s].pivot});
    }
  }

  for (int s = 0; s < n_segments; ++s) {
    if (segments[s].parent >= 0) gt.keypoints.push_back(segments[s].pivot);
  }
  for (int s = 0; s < n_segments; ++s) gt.keypoints.push_back(segments[s].mid);

  gt.vertex_colors.resize(mesh.n_vertices());
  const auto& palette = segment_palette();
  for (int n = 0; n < mesh.n_vertices(); ++n) {
    gt.vertex_colors[n] = palette[labels[n] % palette.size()];
  }

  // Forward kinematics.
  std::vector<std::vector<RigidTransform>> world(spec.frames);
  for (int f = 0; f < spec.frames; ++f) {
    world[f].resize(n_segments);
    for (int s = 0; s < n_segments; ++s) {
      if (segments[s].parent < 0) {
        world[f][s] = spec.root_motion.empty() ? RigidTransform::identity() : spec.root_motion[f];
      } else {
        const RigidTransform local = RigidTransform::about_point(
            segments[s].pivot, segments[s].axis, spec.joint_angles(f, s));
        world[f][s] = world[f][segments[s].parent] * local;
      }
    }
  }

  gt.positions.resize(spec.frames);
  for (int f = 0; f < spec.frames; ++f) {
    gt.positions[f].resize(mesh.n_vertices());
    for (int n = 0; n < mesh.n_vertices(); ++n) {
      gt.positions[f][n] = world[f][labels[n]] * mesh.vertices[n];
    }
  }

  // Cameras framed on the union of all posed frames.
  Vec3 lo = gt.positions[0][0], hi = lo;
  for (const auto& frame : gt.positions) {
    for (const Vec3& p : frame) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
  const Vec3 center = 0.5 * (lo + hi);
  const double diag = std::max((hi - lo).norm(), 1e-6);
  const double dist = spec.camera.distance_factor * diag;
  const double focal =
      0.35 * std::min(spec.camera.width, spec.camera.height) * dist / (0.5 * diag);

  gt.poses.resize(spec.frames);
  for (int f = 0; f < spec.frames; ++f) {
    Vec3 eye;
    if (spec.camera.path == SynthCamera::Path::Orbit) {
      const double theta = spec.camera.orbit_deg_per_frame * f * M_PI / 180.0;
      eye = center + dist * Vec3(std::sin(theta), 0.0, -std::cos(theta));
    } else {
      eye = center - dist * Vec3::UnitZ();
    }
    const Camera cam =
        make_lookat_camera(eye, center, spec.camera.width, spec.camera.height, focal);
    gt.poses[f].camera = cam;
    gt.poses[f].root = world[f][0];
    const RigidTransform root_inv = world[f][0].inverse();
    gt.poses[f].bones.resize(n_segments);
    for (int s = 0; s < n_segments; ++s) {
      gt.poses[f].bones[s] = root_inv * world[f][s];
    }
  }

  for (int f = 0; f < spec.frames; ++f) {
    gt.silhouettes.push_back(
        rasterize_silhouette(gt.positions[f], mesh.faces, gt.poses[f].camera));
    gt.visibility_masks.push_back(visibility(gt.positions[f], mesh.faces, gt.poses[f].camera));
  }
  for (int f = 0; f + 1 < spec.frames; ++f) {
    gt.flows.push_back(flow_from_correspondence(gt.positions[f], gt.positions[f + 1],
                                                gt.poses[f].camera, gt.poses[f + 1].camera,
                                                mesh.faces));
  }
  return {std::move(mesh), std::move(gt)};
}

GroundTruth corrupt(const GroundTruth& gt, double sigma_pos, double sigma_flow, uint64_t seed) {
  if (sigma_pos < 0.0 || sigma_flow < 0.0) {
    throw IoError("noise sigma must be non-negative");
  }
  GroundTruth out = gt;
  std::mt19937_64 rng(seed);
  if (sigma_pos > 0.0) {
    for (auto& frame : out.positions) {
      for (Vec3& p : frame) {
        p += sigma_pos * Vec3(next_gaussian(rng), next_gaussian(rng), next_gaussian(rng));
      }
    }
  }
  if (sigma_flow > 0.0) {
    for (FlowRaster& raster : out.flows) {
      for (float& f : raster.flow) {
        f += static_cast<float>(sigma_flow * next_gaussian(rng));
      }
    }
  }
  return out;
}

std::vector<FrameData> frames_from_ground_truth(const TriMesh& mesh, const GroundTruth& gt,
                                                bool with_rgb) {
  std::vector<FrameData> frames(gt.positions.size());
  for (size_t f = 0; f < gt.positions.size(); ++f) {
    frames[f].targets = gt.positions[f];
    frames[f].camera = gt.poses[f].camera;
    if (f < gt.silhouettes.size()) frames[f].silhouette = gt.silhouettes[f];
    if (f < gt.flows.size()) {
      frames[f].flow = gt.flows[f];
      frames[f].has_flow = true;
    }
    if (with_rgb && !gt.vertex_colors.empty()) {
      frames[f].rgb =
          rasterize_colors(gt.positions[f], mesh.faces, gt.vertex_colors, gt.poses[f].camera);
      frames[f].has_rgb = true;
    }
  }
  return frames;
}

std::string camera_to_json(const Camera& camera) { return camera_json(camera).dump(2); }

Camera camera_from_json(const std::string& text) {
  try {
    return camera_from(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("camera parse failure: ") + e.what());
  }
}

void save_dataset(const TriMesh& mesh, const GroundTruth& gt, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "frames");
  fs::create_directories(fs::path(dir) / "flows");
  save_mesh(mesh, (fs::path(dir) / "mesh.obj").string());
  save_skeleton(gt.skeleton, (fs::path(dir) / "gt_skeleton.json").string());
  save_poses(gt.poses, (fs::path(dir) / "poses.json").string());

  nlohmann::json targets;
  targets["frames"] = nlohmann::json::array();
  char name[64];
  for (size_t f = 0; f < gt.positions.size(); ++f) {
    std::snprintf(name, sizeof(name), "frames/frame_%04zu.pgm", f);
    const std::string sil_rel = name;
    save_pgm(gt.silhouettes[f], (fs::path(dir) / sil_rel).string());
    nlohmann::json jf;
    jf["camera"] = camera_json(gt.poses[f].camera);
    jf["silhouette"] = sil_rel;
    if (f + 1 < gt.positions.size()) {
      std::snprintf(name, sizeof(name), "flows/flow_%04zu.bin", f);
      const std::string flow_rel = name;
      save_flow(gt.flows[f], (fs::path(dir) / flow_rel).string());
      jf["flow"] = flow_rel;
    }
    auto pos = nlohmann::json::array();
    for (const Vec3& p : gt.positions[f]) pos.push_back({p.x(), p.y(), p.z()});
    jf["positions"] = pos;
    targets["frames"].push_back(jf);
  }
  targets["labels"] = gt.labels.part;
  auto kps = nlohmann::json::array();
  for (const Vec3& p : gt.keypoints) kps.push_back({p.x(), p.y(), p.z()});
  targets["keypoints"] = kps;
  auto colors = nlohmann::json::array();
  for (const Vec3& c : gt.vertex_colors) colors.push_back({c.x(), c.y(), c.z()});
  targets["colors"] = colors;

  std::ofstream out(fs::path(dir) / "targets.json", std::ios::binary);
  if (!out) throw IoError("cannot write targets.json in " + dir);
  out << targets.dump();
  if (!out) throw IoError("write failure: targets.json");
}

Dataset load_dataset(const std::string& dir) {
  Dataset ds;
  ds.mesh = load_mesh((fs::path(dir) / "mesh.obj").string());
  ds.gt.skeleton = load_skeleton((fs::path(dir) / "gt_skeleton.json").string());
  const std::vector<PoseFrame> poses = load_poses((fs::path(dir) / "poses.json").string());

  std::ifstream in(fs::path(dir) / "targets.json", std::ios::binary);
  if (!in) throw IoError("cannot open targets.json in " + dir);
  nlohmann::json targets;
  try {
    in >> targets;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("targets.json parse failure: ") + e.what());
  }

  try {
    const auto& frames = targets.at("frames");
    ds.gt.poses = poses;
    ds.gt.poses.resize(frames.size());
    for (size_t f = 0; f < frames.size(); ++f) {
      const auto& jf = frames[f];
      ds.gt.poses[f].camera = camera_from(jf.at("camera"));
      std::vector<Vec3> pos;
      for (const auto& p : jf.at("positions")) {
        pos.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
      }
      ds.gt.positions.push_back(std::move(pos));
      ds.gt.silhouettes.push_back(
          load_pgm((fs::path(dir) / jf.at("silhouette").get<std::string>()).string()));
      if (jf.contains("flow")) {
        ds.gt.flows.push_back(
            load_flow((fs::path(dir) / jf.at("flow").get<std::string>()).string()));
      }
    }
    ds.gt.labels.part = targets.at("labels").get<std::vector<int>>();
    ds.gt.labels.n_parts = ds.gt.skeleton.n_bones();
    ds.gt.labels.counts.assign(ds.gt.labels.n_parts, 0);
    for (int l : ds.gt.labels.part) {
      if (l < 0 || l >= ds.gt.labels.n_parts) throw IoError("label out of range in targets.json");
      ++ds.gt.labels.counts[l];
    }
    for (const auto& p : targets.at("keypoints")) {
      ds.gt.keypoints.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(),
                                   p.at(2).get<double>());
    }
    if (targets.contains("colors")) {
      for (const auto& c : targets.at("colors")) {
        ds.gt.vertex_colors.emplace_back(c.at(0).get<double>(), c.at(1).get<double>(),
                                         c.at(2).get<double>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("targets.json schema error: ") + e.what());
  }

  for (size_t f = 0; f < ds.gt.positions.size(); ++f) {
    ds.gt.visibility_masks.push_back(
        visibility(ds.gt.positions[f], ds.mesh.faces, ds.gt.poses[f].camera));
  }
  return ds;
}

std::string SynthSpec::to_json() const {
  nlohmann::json j;
  j["frames"] = frames;
  j["radial_segments"] = radial_segments;
  j["rings_per_segment"] = rings_per_segment;
  j["seed"] = seed;
  j["camera"] = {{"path", camera.path == SynthCamera::Path::Orbit ? "orbit" : "static"},
                 {"width", camera.width},
                 {"height", camera.height},
                 {"distance", camera.distance_factor},
                 {"orbit_deg_per_frame", camera.orbit_deg_per_frame}};
  j["chains"] = nlohmann::json::array();
  for (const SynthChain& c : chains) {
    nlohmann::json jc;
    jc["base"] = {c.base.x(), c.base.y(), c.base.z()};
    jc["direction"] = {c.direction.x(), c.direction.y(), c.direction.z()};
    jc["parent_segment"] = c.parent_segment;
    jc["lengths"] = c.lengths;
    jc["radii"] = c.radii;
    auto axes = nlohmann::json::array();
    for (const Vec3& a : c.hinge_axes) axes.push_back({a.x(), a.y(), a.z()});
    jc["hinge_axes"] = axes;
    j["chains"].push_back(jc);
  }
  auto angles = nlohmann::json::array();
  for (int f = 0; f < joint_angles.rows(); ++f) {
    auto row = nlohmann::json::array();
    for (int s = 0; s < joint_angles.cols(); ++s) row.push_back(joint_angles(f, s));
    angles.push_back(row);
  }
  j["joint_angles"] = angles;
  if (!root_motion.empty()) {
    auto rm = nlohmann::json::array();
    for (const RigidTransform& t : root_motion) {
      rm.push_back({{"q", {t.rotation.w(), t.rotation.x(), t.rotation.y(), t.rotation.z()}},
                    {"t", {t.translation.x(), t.translation.y(), t.translation.z()}}});
    }
    j["root_motion"] = rm;
  }
  return j.dump(2);
}

SynthSpec SynthSpec::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("synth spec parse failure: ") + e.what());
  }
  try {
    check_keys(j,
               {"preset", "frames", "radial_segments", "rings_per_segment", "seed", "camera",
                "chains", "joint_angles", "root_motion"},
               "synth spec");
    if (j.contains("preset")) {
      const std::string preset = j.at("preset").get<std::string>();
      const int frames = j.value("frames", 8);
      if (preset == "quadruped") return quadruped(frames);
      throw IoError("unknown synth preset: " + preset);
    }
    SynthSpec spec;
    spec.frames = j.at("frames").get<int>();
    spec.radial_segments = j.value("radial_segments", 12);
    spec.rings_per_segment = j.value("rings_per_segment", 6);
    spec.seed = j.value("seed", 0ULL);
    if (j.contains("camera")) {
      const auto& jc = j.at("camera");
      check_keys(jc, {"path", "width", "height", "distance", "orbit_deg_per_frame"},
                 "synth spec camera");
      const std::string path = jc.value("path", "static");
      if (path == "orbit") {
        spec.camera.path = SynthCamera::Path::Orbit;
      } else if (path != "static") {
        throw IoError("unknown camera path: " + path);
      }
      spec.camera.width = jc.value("width", 96);
      spec.camera.height = jc.value("height", 96);
      spec.camera.distance_factor = jc.value("distance", 3.0);
      spec.camera.orbit_deg_per_frame = jc.value("orbit_deg_per_frame", 4.0);
    }
    for (const auto& jc : j.at("chains")) {
      check_keys(jc, {"base", "direction", "parent_segment", "lengths", "radii", "hinge_axes"},
                 "synth chain");
      SynthChain c;
      if (jc.contains("base")) {
        c.base = Vec3(jc.at("base").at(0).get<double>(), jc.at("base").at(1).get<double>(),
                      jc.at("base").at(2).get<double>());
      }
      if (jc.contains("direction")) {
        c.direction =
            Vec3(jc.at("direction").at(0).get<double>(), jc.at("direction").at(1).get<double>(),
                 jc.at("direction").at(2).get<double>());
      }
      c.parent_segment = jc.value("parent_segment", -1);
      c.lengths = jc.at("lengths").get<std::vector<double>>();
      c.radii = jc.at("radii").get<std::vector<double>>();
      if (jc.contains("hinge_axes")) {
        for (const auto& a : jc.at("hinge_axes")) {
          c.hinge_axes.emplace_back(a.at(0).get<double>(), a.at(1).get<double>(),
                                    a.at(2).get<double>());
        }
      } else {
        c.hinge_axes.assign(c.lengths.size(), Vec3::UnitZ());
      }
      spec.chains.push_back(c);
    }
    const int total = spec.total_segments();
    spec.joint_angles = Eigen::MatrixXd::Zero(spec.frames, total);
    if (j.contains("joint_angles")) {
      const auto& angles = j.at("joint_angles");
      if (static_cast<int>(angles.size()) != spec.frames) {
        throw IoError("joint_angles must have one row per frame");
      }
      for (int f = 0; f < spec.frames; ++f) {
        if (static_cast<int>(angles.at(f).size()) != total) {
          throw IoError("joint_angles rows must have one entry per segment");
        }
        for (int s = 0; s < total; ++s) {
          spec.joint_angles(f, s) = angles.at(f).at(s).get<double>();
        }
      }
    }
    if (j.contains("root_motion")) {
      for (const auto& jt : j.at("root_motion")) {
        spec.root_motion.push_back(RigidTransform::from_parts(
            Eigen::Quaterniond(jt.at("q").at(0).get<double>(), jt.at("q").at(1).get<double>(),
                               jt.at("q").at(2).get<double>(), jt.at("q").at(3).get<double>()),
            Vec3(jt.at("t").at(0).get<double>(), jt.at("t").at(1).get<double>(),
                 jt.at("t").at(2).get<double>())));
      }
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("synth spec schema error: ") + e.what());
  }
}

}  // namespace skelkit
