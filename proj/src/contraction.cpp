#include "skelkit/contraction.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <json.hpp>

namespace skelkit {

ContractionState init_contraction(const TriMesh& mesh, const ContractionConfig& cfg) {
  ContractionState state;
  state.positions = mesh.vertices;
  state.rest_areas = vertex_areas(mesh, mesh.vertices);
  state.w_a.assign(mesh.vertices.size(), cfg.w_a0);
  state.w_a0 = cfg.w_a0;
  if (cfg.w_c0 > 0.0) {
    state.w_c = cfg.w_c0;
  } else {
    double total = 0.0;
    for (const Face& f : mesh.faces) {
      total += 0.5 * (mesh.vertices[f[1]] - mesh.vertices[f[0]])
                         .cross(mesh.vertices[f[2]] - mesh.vertices[f[0]])
                         .norm();
    }
    const double mean_area = mesh.faces.empty() ? 1.0 : total / mesh.faces.size();
    state.w_c = 1e-3 * std::sqrt(mean_area);
  }
  return state;
}

ContractionState contract_step(const TriMesh& mesh, const ContractionState& state,
                               const ContractionConfig& cfg) {
  const int n = mesh.n_vertices();
  const SparseMat laplacian = cotan_laplacian(mesh, state.positions);

  // Normal equations of [w_c L; diag(w_a)] X = [0; diag(w_a) X_cur].
  SparseMat lhs = (state.w_c * state.w_c) * SparseMat(laplacian.transpose() * laplacian);
  std::vector<Eigen::Triplet<double>> diag;
  diag.reserve(n);
  for (int i = 0; i < n; ++i) {
    diag.emplace_back(i, i, state.w_a[i] * state.w_a[i]);
  }
  SparseMat attraction(n, n);
  attraction.setFromTriplets(diag.begin(), diag.end());
  lhs += attraction;

  Eigen::MatrixXd rhs(n, 3);
  for (int i = 0; i < n; ++i) {
    rhs.row(i) = (state.w_a[i] * state.w_a[i]) * state.positions[i].transpose();
  }

  Eigen::SimplicialLDLT<SparseMat> solver;
  solver.compute(lhs);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("contraction system factorization failed (singular or indefinite)");
  }
  const Eigen::MatrixXd solution = solver.solve(rhs);
  if (!solution.allFinite()) {
    throw NumericalError("contraction produced non-finite positions");
  }

  ContractionState next = state;
  for (int i = 0; i < n; ++i) {
    next.positions[i] = solution.row(i).transpose();
  }
  const std::vector<double> areas = vertex_areas(mesh, next.positions);
  const double area_floor = 1e-12;
  for (int i = 0; i < n; ++i) {
    next.w_a[i] = state.w_a0 * std::sqrt(state.rest_areas[i] / std::max(areas[i], area_floor));
  }
  next.w_c = cfg.s_l * state.w_c;
  next.iteration = state.iteration + 1;
  return next;
}

TriMesh contract(const TriMesh& mesh, const ContractionConfig& cfg) {
  const double vol0 = std::abs(signed_volume(mesh));
  ContractionState state = init_contraction(mesh, cfg);
  // A mesh that starts at zero volume (e.g. fully degenerate input) is already
  // a fixed point of the termination rule.
  while (state.iteration < cfg.max_iters &&
         std::abs(signed_volume(mesh, state.positions)) > cfg.vol_eps * vol0) {
    state = contract_step(mesh, state, cfg);
  }
  return mesh.with_positions(state.positions);
}

namespace {

using Quadric = Eigen::Matrix4d;

Quadric face_quadric(const Vec3& p0, const Vec3& p1, const Vec3& p2) {
  const Vec3 cross = (p1 - p0).cross(p2 - p0);
  const double len = cross.norm();
  if (len < 1e-14) {
    return Quadric::Zero();  // degenerate faces carry no shape information
  }
  const Vec3 n = cross / len;
  Eigen::Vector4d plane(n.x(), n.y(), n.z(), -n.dot(p0));
  return plane * plane.transpose();
}

double quadric_cost(const Quadric& q, const Vec3& p) {
  Eigen::Vector4d h(p.x(), p.y(), p.z(), 1.0);
  return h.dot(q * h);
}

// Quadric-optimal placement; midpoint when the quadric is singular or the
// optimum drifts outside the edge neighborhood (near-singular quadrics send
// it arbitrarily far).
Vec3 optimal_point(const Quadric& q, const Vec3& a, const Vec3& b) {
  const Vec3 mid = 0.5 * (a + b);
  const Mat3 m = q.topLeftCorner<3, 3>();
  if (std::abs(m.determinant()) < 1e-12) {
    return mid;
  }
  const Vec3 opt = m.ldlt().solve(-q.topRightCorner<3, 1>());
  if ((opt - mid).norm() > (a - b).norm()) {
    return mid;
  }
  return opt;
}

struct CollapseMesh {
  std::vector<Vec3> pos;
  std::vector<Quadric> quadric;
  std::vector<std::vector<int>> absorbed;
  std::vector<std::set<int>> adj;
  std::vector<Face> faces;
  std::vector<bool> face_alive;
  std::vector<std::set<int>> vert_faces;  // incident alive faces
  std::vector<bool> alive;
  int alive_faces = 0;
};

bool face_has_edge(const Face& f, int i, int j) {
  const bool has_i = f[0] == i || f[1] == i || f[2] == i;
  const bool has_j = f[0] == j || f[1] == j || f[2] == j;
  return has_i && has_j;
}

// Edges adjacent to i or j travel to the merged position; their cumulative
// travel distance is the sampling cost.
double sampling_cost(const CollapseMesh& cm, int i, int j, const Vec3& target) {
  const double di = (cm.pos[i] - target).norm();
  const double dj = (cm.pos[j] - target).norm();
  double cost = 0.0;
  for (int k : cm.adj[i]) {
    if (k != j) cost += di;
  }
  for (int k : cm.adj[j]) {
    if (k != i) cost += dj;
  }
  return cost;
}

void collapse_edge(CollapseMesh& cm, int keep, int drop, const Vec3& target) {
  cm.pos[keep] = target;
  cm.quadric[keep] += cm.quadric[drop];
  cm.absorbed[keep].insert(cm.absorbed[keep].end(), cm.absorbed[drop].begin(),
                           cm.absorbed[drop].end());
  cm.absorbed[drop].clear();
  cm.alive[drop] = false;

  // Faces containing both endpoints degenerate and die; faces containing only
  // `drop` re-point to `keep`.
  std::set<int> affected = cm.vert_faces[drop];
  for (int fi : affected) {
    Face& f = cm.faces[fi];
    if (!cm.face_alive[fi]) continue;
    if (face_has_edge(f, keep, drop)) {
      cm.face_alive[fi] = false;
      --cm.alive_faces;
      for (int v : f) cm.vert_faces[v].erase(fi);
      continue;
    }
    for (int& v : f) {
      if (v == drop) v = keep;
    }
    cm.vert_faces[drop].erase(fi);
    cm.vert_faces[keep].insert(fi);
  }

  cm.adj[drop].erase(keep);
  cm.adj[keep].erase(drop);
  for (int k : cm.adj[drop]) {
    cm.adj[k].erase(drop);
    cm.adj[k].insert(keep);
    cm.adj[keep].insert(k);
  }
  cm.adj[drop].clear();
}

}  // namespace

SkeletonGraph connectivity_surgery(const TriMesh& contracted) {
  const int n = contracted.n_vertices();
  CollapseMesh cm;
  cm.pos = contracted.vertices;
  cm.quadric.assign(n, Quadric::Zero());
  cm.absorbed.resize(n);
  cm.adj.resize(n);
  cm.faces = contracted.faces;
  cm.face_alive.assign(contracted.faces.size(), true);
  cm.vert_faces.resize(n);
  cm.alive.assign(n, true);
  cm.alive_faces = contracted.n_faces();

  for (int v = 0; v < n; ++v) cm.absorbed[v] = {v};
  for (const Edge& e : contracted.edges) {
    cm.adj[e[0]].insert(e[1]);
    cm.adj[e[1]].insert(e[0]);
  }
  for (size_t fi = 0; fi < contracted.faces.size(); ++fi) {
    const Face& f = contracted.faces[fi];
    const Quadric q = face_quadric(cm.pos[f[0]], cm.pos[f[1]], cm.pos[f[2]]);
    for (int v : f) {
      cm.quadric[v] += q;
      cm.vert_faces[v].insert(static_cast<int>(fi));
    }
  }

  const double guard = 0.25 * contracted.bbox_diagonal();

  while (cm.alive_faces > 0) {
    // Scan face-adjacent edges for the cheapest collapse. The distance guard
    // defers long collapses while shorter candidates exist; the zero-face
    // postcondition wins if only guarded candidates remain.
    double best_cost = std::numeric_limits<double>::infinity();
    double best_guarded_cost = std::numeric_limits<double>::infinity();
    int best_i = -1, best_j = -1;
    int guarded_i = -1, guarded_j = -1;
    Vec3 best_target = Vec3::Zero(), guarded_target = Vec3::Zero();

    for (int i = 0; i < n; ++i) {
      if (!cm.alive[i]) continue;
      for (int j : cm.adj[i]) {
        if (j <= i) continue;
        bool face_edge = false;
        for (int fi : cm.vert_faces[i]) {
          if (cm.face_alive[fi] && face_has_edge(cm.faces[fi], i, j)) {
            face_edge = true;
            break;
          }
        }
        if (!face_edge) continue;
        const Quadric q = cm.quadric[i] + cm.quadric[j];
        const Vec3 target = optimal_point(q, cm.pos[i], cm.pos[j]);
        const double cost = quadric_cost(q, target) + sampling_cost(cm, i, j, target);
        if ((cm.pos[i] - cm.pos[j]).norm() > guard) {
          if (cost < best_guarded_cost) {
            best_guarded_cost = cost;
            guarded_i = i;
            guarded_j = j;
            guarded_target = target;
          }
        } else if (cost < best_cost) {
          best_cost = cost;
          best_i = i;
          best_j = j;
          best_target = target;
        }
      }
    }

    if (best_i < 0) {
      best_i = guarded_i;
      best_j = guarded_j;
      best_target = guarded_target;
    }
    if (best_i < 0) {
      break;  // no collapsible edge left; isolated faces cannot occur on valid input
    }
    collapse_edge(cm, best_i, best_j, best_target);
  }

  // Graph hygiene: collapse micro-edges (near-coincident nodes left behind by
  // the face-removal phase) so they do not turn into duplicate bones.
  const double micro = 0.01 * contracted.bbox_diagonal();
  bool merged_any = true;
  while (merged_any) {
    merged_any = false;
    for (int v = 0; v < n && !merged_any; ++v) {
      if (!cm.alive[v]) continue;
      for (int u : cm.adj[v]) {
        if (u <= v) continue;
        if ((cm.pos[v] - cm.pos[u]).norm() < micro) {
          collapse_edge(cm, v, u, 0.5 * (cm.pos[v] + cm.pos[u]));
          merged_any = true;
          break;
        }
      }
    }
  }

  SkeletonGraph graph;
  std::vector<int> node_of(n, -1);
  for (int v = 0; v < n; ++v) {
    if (!cm.alive[v]) continue;
    node_of[v] = static_cast<int>(graph.nodes.size());
    graph.nodes.push_back(cm.pos[v]);
    graph.node_absorbed.push_back(cm.absorbed[v]);
    std::sort(graph.node_absorbed.back().begin(), graph.node_absorbed.back().end());
  }
  for (int v = 0; v < n; ++v) {
    if (!cm.alive[v]) continue;
    for (int u : cm.adj[v]) {
      if (u > v) graph.edges.push_back({node_of[v], node_of[u]});
    }
  }
  std::sort(graph.edges.begin(), graph.edges.end());

  // Distribute each node's absorbed vertices over its incident edges by
  // nearest point-to-segment distance (contracted positions). Nodes without
  // incident edges keep theirs in node_absorbed only.
  graph.edge_absorbed.resize(graph.edges.size());
  std::vector<std::vector<int>> node_edges(graph.nodes.size());
  for (size_t ei = 0; ei < graph.edges.size(); ++ei) {
    node_edges[graph.edges[ei][0]].push_back(static_cast<int>(ei));
    node_edges[graph.edges[ei][1]].push_back(static_cast<int>(ei));
  }
  auto segment_distance = [&](const Vec3& p, const Edge& e) {
    const Vec3& a = graph.nodes[e[0]];
    const Vec3& b = graph.nodes[e[1]];
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).norm();
  };
  for (size_t ni = 0; ni < graph.nodes.size(); ++ni) {
    if (node_edges[ni].empty()) continue;
    for (int v : graph.node_absorbed[ni]) {
      int best_edge = node_edges[ni][0];
      double best_dist = segment_distance(contracted.vertices[v], graph.edges[best_edge]);
      for (size_t k = 1; k < node_edges[ni].size(); ++k) {
        const int ei = node_edges[ni][k];
        const double d = segment_distance(contracted.vertices[v], graph.edges[ei]);
        if (d < best_dist || (d == best_dist && ei < best_edge)) {
          best_dist = d;
          best_edge = ei;
        }
      }
      graph.edge_absorbed[best_edge].push_back(v);
    }
  }
  for (auto& lst : graph.edge_absorbed) std::sort(lst.begin(), lst.end());
  return graph;
}

std::string skeleton_graph_to_json(const SkeletonGraph& graph) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const Vec3& p : graph.nodes) {
    j["nodes"].push_back({p.x(), p.y(), p.z()});
  }
  j["edges"] = nlohmann::json::array();
  for (const Edge& e : graph.edges) {
    j["edges"].push_back({e[0], e[1]});
  }
  j["absorbed"] = graph.edge_absorbed;
  return j.dump(2);
}

SkeletonGraph skeleton_graph_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("skeleton graph parse failure: ") + e.what());
  }
  SkeletonGraph graph;
  try {
    for (const auto& p : j.at("nodes")) {
      graph.nodes.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(),
                               p.at(2).get<double>());
    }
    for (const auto& e : j.at("edges")) {
      graph.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
    }
    graph.edge_absorbed = j.at("absorbed").get<std::vector<std::vector<int>>>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("skeleton graph schema error: ") + e.what());
  }
  return graph;
}

}  // namespace skelkit
