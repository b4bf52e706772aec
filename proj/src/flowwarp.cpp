#include "skelkit/flowwarp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace skelkit {

SurfaceFlow sample_surface_flow(const FlowRaster& raster, const std::vector<Vec2>& projected,
                                const std::vector<uint8_t>& visible) {
  if (projected.size() != visible.size()) {
    throw IoError("sample_surface_flow size mismatch");
  }
  SurfaceFlow out;
  out.flow.assign(projected.size(), Vec2::Zero());
  out.visible.assign(projected.size(), 0);
  for (size_t n = 0; n < projected.size(); ++n) {
    if (!visible[n]) continue;
    const double u = projected[n].x();
    const double v = projected[n].y();
    // Pixel centers sit at half-integer coordinates; require the full
    // bilinear footprint inside the frame.
    if (!(u >= 0.5 && u <= raster.width - 0.5 && v >= 0.5 && v <= raster.height - 0.5)) {
      continue;
    }
    const double fx = std::min(u - 0.5, static_cast<double>(raster.width - 1));
    const double fy = std::min(v - 0.5, static_cast<double>(raster.height - 1));
    const int x0 = std::min(static_cast<int>(fx), raster.width - 2 >= 0 ? raster.width - 2 : 0);
    const int y0 = std::min(static_cast<int>(fy), raster.height - 2 >= 0 ? raster.height - 2 : 0);
    const double ax = fx - x0;
    const double ay = fy - y0;
    const int x1 = std::min(x0 + 1, raster.width - 1);
    const int y1 = std::min(y0 + 1, raster.height - 1);
    const Vec2 f00 = raster.flow_at(x0, y0);
    const Vec2 f10 = raster.flow_at(x1, y0);
    const Vec2 f01 = raster.flow_at(x0, y1);
    const Vec2 f11 = raster.flow_at(x1, y1);
    out.flow[n] = (1 - ax) * (1 - ay) * f00 + ax * (1 - ay) * f10 + (1 - ax) * ay * f01 +
                  ax * ay * f11;
    out.visible[n] = 1;
  }
  return out;
}

BoneFlow bone_flow(const SurfaceFlow& surface, const SkinningWeights& weights) {
  if (static_cast<int>(surface.flow.size()) != weights.n_vertices()) {
    throw IoError("bone_flow size mismatch");
  }
  const int n = weights.n_vertices();
  const int b = weights.n_bones();
  BoneFlow out;
  out.flow.assign(b, Vec2::Zero());
  out.mass.assign(b, 0.0);
  out.observed.assign(b, 0);
  for (int i = 0; i < n; ++i) {
    if (!surface.visible[i]) continue;
    for (int j = 0; j < b; ++j) {
      out.flow[j] += weights.w(i, j) * surface.flow[i];
      out.mass[j] += weights.w(i, j);
    }
  }
  const double observed_floor = 1e-3 * n;
  for (int j = 0; j < b; ++j) {
    out.observed[j] = out.mass[j] >= observed_floor ? 1 : 0;
  }
  return out;
}

double cosine_similarity(const Vec2& a, const Vec2& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na <= 1e-12 || nb <= 1e-12) {
    throw NumericalError("cosine similarity of a near-zero vector");
  }
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

std::string bone_flow_csv(const std::vector<std::pair<int, BoneFlow>>& per_frame) {
  std::ostringstream out;
  out.precision(12);
  out << "frame,bone,u,v,mass\n";
  for (const auto& [frame, flow] : per_frame) {
    for (size_t b = 0; b < flow.flow.size(); ++b) {
      out << frame << ',' << b << ',' << flow.flow[b].x() << ',' << flow.flow[b].y() << ','
          << flow.mass[b] << '\n';
    }
  }
  return out.str();
}

}  // namespace skelkit
