#include "skelkit/losses.hpp"

#include <cmath>
#include <sstream>

namespace skelkit {

double dr_loss(const std::vector<Vec3>& pos_t, const std::vector<Vec3>& pos_t1,
               const std::vector<Edge>& edges, const RigidityCoeffs& rigidity) {
  if (pos_t.size() != pos_t1.size()) {
    throw IoError("dr_loss requires identical topology in both frames");
  }
  if (rigidity.r.size() != edges.size()) {
    throw IoError("rigidity entries do not match edge count");
  }
  double total = 0.0;
  for (size_t e = 0; e < edges.size(); ++e) {
    const double len_t = (pos_t[edges[e][0]] - pos_t[edges[e][1]]).norm();
    const double len_t1 = (pos_t1[edges[e][0]] - pos_t1[edges[e][1]]).norm();
    total += rigidity.r[e] * std::abs(len_t - len_t1);
  }
  return total;
}

double arap_loss(const std::vector<Vec3>& pos_t, const std::vector<Vec3>& pos_t1,
                 const std::vector<Edge>& edges) {
  RigidityCoeffs unit;
  unit.r.assign(edges.size(), 1.0);
  return dr_loss(pos_t, pos_t1, edges, unit);
}

double shape_loss(const TriMesh& mesh, int* isolated_count) {
  std::vector<Vec3> neighbor_sum(mesh.n_vertices(), Vec3::Zero());
  std::vector<int> degree(mesh.n_vertices(), 0);
  for (const Edge& e : mesh.edges) {
    neighbor_sum[e[0]] += mesh.vertices[e[1]];
    neighbor_sum[e[1]] += mesh.vertices[e[0]];
    ++degree[e[0]];
    ++degree[e[1]];
  }
  double total = 0.0;
  int isolated = 0;
  for (int i = 0; i < mesh.n_vertices(); ++i) {
    if (degree[i] == 0) {
      ++isolated;
      continue;
    }
    total += (mesh.vertices[i] - neighbor_sum[i] / degree[i]).squaredNorm();
  }
  if (isolated_count) *isolated_count = isolated;
  return total;
}

double silhouette_loss(const SilhouetteRaster& rendered, const SilhouetteRaster& target) {
  if (rendered.width != target.width || rendered.height != target.height) {
    throw IoError("silhouette raster size mismatch");
  }
  if (rendered.values.empty()) return 0.0;
  double total = 0.0;
  for (size_t i = 0; i < rendered.values.size(); ++i) {
    const double d = static_cast<double>(rendered.values[i]) - target.values[i];
    total += d * d;
  }
  return total / static_cast<double>(rendered.values.size());
}

double flow_loss(const FlowRaster& rendered, const FlowRaster& target) {
  if (rendered.width != target.width || rendered.height != target.height) {
    throw IoError("flow raster size mismatch");
  }
  double total = 0.0;
  double mass = 0.0;
  const size_t px = target.confidence.size();
  for (size_t i = 0; i < px; ++i) {
    const double sigma = target.confidence[i];
    if (sigma <= 0.0) continue;
    const double du = static_cast<double>(rendered.flow[i * 2]) - target.flow[i * 2];
    const double dv = static_cast<double>(rendered.flow[i * 2 + 1]) - target.flow[i * 2 + 1];
    total += sigma * (du * du + dv * dv);
    mass += sigma;
  }
  return mass > 0.0 ? total / mass : 0.0;
}

double rgb_loss(const ColorRaster& rendered, const ColorRaster& target) {
  if (rendered.width != target.width || rendered.height != target.height) {
    throw IoError("color raster size mismatch");
  }
  if (rendered.rgb.empty()) return 0.0;
  double total = 0.0;
  for (size_t i = 0; i < rendered.rgb.size(); ++i) {
    total += std::abs(static_cast<double>(rendered.rgb[i]) - target.rgb[i]);
  }
  return total / static_cast<double>(rendered.rgb.size());
}

LossRow LossReport::totals() const {
  LossRow sum;
  sum.frame = -1;
  for (const LossRow& row : rows) {
    sum.silhouette += row.silhouette;
    sum.rgb += row.rgb;
    sum.flow += row.flow;
    sum.shape += row.shape;
    sum.dr += row.dr;
    sum.total += row.total;
  }
  return sum;
}

std::string LossReport::to_csv() const {
  std::ostringstream out;
  out.precision(12);
  out << "frame,silhouette,rgb,flow,shape,dr,total\n";
  for (const LossRow& row : rows) {
    out << row.frame << ',' << row.silhouette << ',' << row.rgb << ',' << row.flow << ','
        << row.shape << ',' << row.dr << ',' << row.total << '\n';
  }
  return out.str();
}

}  // namespace skelkit
