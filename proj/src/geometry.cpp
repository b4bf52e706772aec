#include "skelkit/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace skelkit {

std::vector<Edge> edges_from_faces(const std::vector<Face>& faces, int n_vertices) {
  std::vector<Edge> edges;
  edges.reserve(faces.size() * 3);
  for (const Face& f : faces) {
    for (int k = 0; k < 3; ++k) {
      int a = f[k];
      int b = f[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      edges.push_back({a, b});
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (const Edge& e : edges) {
    if (e[0] < 0 || e[1] >= n_vertices) {
      throw IoError("edge index out of range");
    }
  }
  return edges;
}

TriMesh TriMesh::from_faces(std::vector<Vec3> vertices, std::vector<Face> faces) {
  const int n = static_cast<int>(vertices.size());
  std::set<std::array<int, 3>> seen;
  for (const Face& f : faces) {
    for (int idx : f) {
      if (idx < 0 || idx >= n) {
        throw IoError("face index out of range: " + std::to_string(idx));
      }
    }
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
      throw IoError("degenerate face with repeated vertex index");
    }
    std::array<int, 3> key = {f[0], f[1], f[2]};
    std::sort(key.begin(), key.end());
    if (!seen.insert(key).second) {
      throw IoError("duplicate face");
    }
  }
  TriMesh mesh;
  mesh.vertices = std::move(vertices);
  mesh.faces = std::move(faces);
  mesh.edges = edges_from_faces(mesh.faces, n);
  return mesh;
}

double TriMesh::bbox_diagonal() const {
  if (vertices.empty()) return 0.0;
  Vec3 lo = vertices[0], hi = vertices[0];
  for (const Vec3& v : vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return (hi - lo).norm();
}

TriMesh TriMesh::with_positions(std::vector<Vec3> positions) const {
  if (positions.size() != vertices.size()) {
    throw IoError("position count does not match vertex count");
  }
  TriMesh out = *this;
  out.vertices = std::move(positions);
  return out;
}

std::pair<std::vector<int>, int> TriMesh::components() const {
  const int n = n_vertices();
  std::vector<int> comp(n, -1);
  std::vector<std::vector<int>> adj(n);
  for (const Edge& e : edges) {
    adj[e[0]].push_back(e[1]);
    adj[e[1]].push_back(e[0]);
  }
  int count = 0;
  std::vector<int> stack;
  for (int seed = 0; seed < n; ++seed) {
    if (comp[seed] >= 0) continue;
    comp[seed] = count;
    stack.push_back(seed);
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int u : adj[v]) {
        if (comp[u] < 0) {
          comp[u] = count;
          stack.push_back(u);
        }
      }
    }
    ++count;
  }
  return {comp, count};
}

namespace {

int parse_obj_index(const std::string& token, int n_vertices, int line_no) {
  // Accepts "i", "i/t", "i/t/n", "i//n".
  std::string head = token.substr(0, token.find('/'));
  int idx = 0;
  auto res = std::from_chars(head.data(), head.data() + head.size(), idx);
  if (res.ec != std::errc() || res.ptr != head.data() + head.size()) {
    throw IoError("OBJ parse failure at line " + std::to_string(line_no) +
                  ": bad face index '" + token + "'");
  }
  if (idx < 0) idx = n_vertices + idx + 1;  // relative indexing
  if (idx < 1 || idx > n_vertices) {
    throw IoError("OBJ face index out of range at line " + std::to_string(line_no));
  }
  return idx - 1;
}

}  // namespace

TriMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open mesh file: " + path);
  }
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z())) {
        throw IoError("OBJ parse failure at line " + std::to_string(line_no) +
                      ": malformed vertex");
      }
      vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<std::string> tokens;
      std::string tok;
      while (ls >> tok) tokens.push_back(tok);
      if (tokens.size() != 3) {
        throw IoError("non-triangular face at line " + std::to_string(line_no) +
                      " (" + std::to_string(tokens.size()) + " vertices)");
      }
      Face f;
      for (int k = 0; k < 3; ++k) {
        f[k] = parse_obj_index(tokens[k], static_cast<int>(vertices.size()), line_no);
      }
      faces.push_back(f);
    }
    // v t / vn / comments / groups ignored
  }
  return TriMesh::from_faces(std::move(vertices), std::move(faces));
}

void save_mesh(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write mesh file: " + path);
  }
  out.precision(17);
  for (const Vec3& v : mesh.vertices) {
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  }
  for (const Face& f : mesh.faces) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
  if (!out) {
    throw IoError("write failure: " + path);
  }
}

namespace {

constexpr double kCotanClamp = 1e4;

double clamped_cotan(const Vec3& a, const Vec3& b) {
  // cot of the angle between a and b = (a.b) / |a x b|
  const double cross = a.cross(b).norm();
  const double dot = a.dot(b);
  if (cross < 1e-300) {
    return dot >= 0 ? kCotanClamp : -kCotanClamp;
  }
  return std::clamp(dot / cross, -kCotanClamp, kCotanClamp);
}

}  // namespace

SparseMat cotan_laplacian(const TriMesh& mesh, const std::vector<Vec3>& positions) {
  const int n = mesh.n_vertices();
  if (static_cast<int>(positions.size()) != n) {
    throw IoError("position count does not match vertex count");
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.faces.size() * 12);
  for (size_t fi = 0; fi < mesh.faces.size(); ++fi) {
    const Face& f = mesh.faces[fi];
    const Vec3& p0 = positions[f[0]];
    const Vec3& p1 = positions[f[1]];
    const Vec3& p2 = positions[f[2]];
    const double area2 = (p1 - p0).cross(p2 - p0).norm();
    if (!(area2 > 0.0)) {
      throw NumericalError("degenerate (zero-area) triangle at face " + std::to_string(fi));
    }
    // Corner k is opposite the edge (k+1, k+2).
    for (int k = 0; k < 3; ++k) {
      const int o = f[k];
      const int i = f[(k + 1) % 3];
      const int j = f[(k + 2) % 3];
      const double w = clamped_cotan(positions[i] - positions[o], positions[j] - positions[o]);
      trip.emplace_back(i, j, w);
      trip.emplace_back(j, i, w);
      trip.emplace_back(i, i, -w);
      trip.emplace_back(j, j, -w);
    }
  }
  SparseMat laplacian(n, n);
  laplacian.setFromTriplets(trip.begin(), trip.end());
  return laplacian;
}

SparseMat cotan_laplacian(const TriMesh& mesh) {
  return cotan_laplacian(mesh, mesh.vertices);
}

double signed_volume(const TriMesh& mesh, const std::vector<Vec3>& positions) {
  double vol = 0.0;
  for (const Face& f : mesh.faces) {
    vol += positions[f[0]].dot(positions[f[1]].cross(positions[f[2]]));
  }
  return vol / 6.0;
}

double signed_volume(const TriMesh& mesh) {
  return signed_volume(mesh, mesh.vertices);
}

std::vector<double> vertex_areas(const TriMesh& mesh, const std::vector<Vec3>& positions) {
  std::vector<double> areas(mesh.n_vertices(), 0.0);
  for (const Face& f : mesh.faces) {
    const double a =
        0.5 * (positions[f[1]] - positions[f[0]]).cross(positions[f[2]] - positions[f[0]]).norm();
    for (int idx : f) areas[idx] += a;
  }
  return areas;
}

}  // namespace skelkit
