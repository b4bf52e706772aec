#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SparseCore>

#include <array>
#include <string>
#include <vector>

#include "skelkit/errors.hpp"

namespace skelkit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using SparseMat = Eigen::SparseMatrix<double>;

using Face = std::array<int, 3>;
using Edge = std::array<int, 2>;  // stored with first < second

/// Triangle surface mesh. Vertices keep file order; the edge list is derived
/// from the faces (deduplicated, sorted), so it is identical under face
/// reordering.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Edge> edges;

  TriMesh() = default;

  /// Validates index ranges, rejects duplicate faces, and builds the edge
  /// list. Throws IoError on contract violations.
  static TriMesh from_faces(std::vector<Vec3> vertices, std::vector<Face> faces);

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_faces() const { return static_cast<int>(faces.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }

  double bbox_diagonal() const;

  /// Same connectivity, different vertex positions.
  TriMesh with_positions(std::vector<Vec3> positions) const;

  /// Connected components over the edge graph; returns per-vertex component id
  /// and the component count.
  std::pair<std::vector<int>, int> components() const;
};

/// Derive the canonical edge list (unordered pairs, deduplicated, sorted).
std::vector<Edge> edges_from_faces(const std::vector<Face>& faces, int n_vertices);

/// Wavefront OBJ loader (`v` / `f` records, 1-based indices). Triangles only.
TriMesh load_mesh(const std::string& path);

/// Writes `v`/`f` records. Positions are printed with round-trip precision.
void save_mesh(const TriMesh& mesh, const std::string& path);

/// Cotangent (curvature-flow) Laplacian: off-diagonal w_ij = cot(a_ij) +
/// cot(b_ij) over the faces incident to edge (i,j) (one term on boundary
/// edges), diagonal = -sum of the row's off-diagonals. Cotangents are clamped
/// to [-1e4, 1e4]; a zero-area face raises NumericalError naming the face.
SparseMat cotan_laplacian(const TriMesh& mesh);
SparseMat cotan_laplacian(const TriMesh& mesh, const std::vector<Vec3>& positions);

/// Divergence-theorem signed volume. For open meshes this is the pseudo-volume
/// of the cone fan to the origin; sign follows face winding.
double signed_volume(const TriMesh& mesh);
double signed_volume(const TriMesh& mesh, const std::vector<Vec3>& positions);

/// One-ring area per vertex (sum of incident triangle areas).
std::vector<double> vertex_areas(const TriMesh& mesh, const std::vector<Vec3>& positions);

}  // namespace skelkit
