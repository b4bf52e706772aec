#include "skelkit/rendering.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace skelkit {

namespace {
constexpr double kNearEps = 1e-6;
}

Vec2 project(const Camera& camera, const Vec3& world_point) {
  const Vec3 p = camera.extrinsic * world_point;
  if (p.z() <= kNearEps) {
    throw NumericalError("projection of point at or behind the camera");
  }
  return {camera.fx * p.x() / p.z() + camera.cx, camera.fy * p.y() / p.z() + camera.cy};
}

ProjectedVertices project_vertices(const Camera& camera, const std::vector<Vec3>& positions) {
  ProjectedVertices out;
  out.pixels.resize(positions.size(), Vec2::Zero());
  out.valid.assign(positions.size(), 0);
  for (size_t i = 0; i < positions.size(); ++i) {
    const Vec3 p = camera.extrinsic * positions[i];
    if (p.z() > kNearEps) {
      out.pixels[i] = {camera.fx * p.x() / p.z() + camera.cx,
                       camera.fy * p.y() / p.z() + camera.cy};
      out.valid[i] = 1;
    }
  }
  return out;
}

double SilhouetteRaster::coverage() const {
  double total = 0.0;
  for (float v : values) total += v;
  return total;
}

FragmentBuffer rasterize_fragments(const std::vector<Vec3>& positions,
                                   const std::vector<Face>& faces, const Camera& camera) {
  FragmentBuffer fb;
  fb.width = camera.width;
  fb.height = camera.height;
  const size_t px = static_cast<size_t>(fb.width) * fb.height;
  fb.face.assign(px, -1);
  fb.bary.assign(px * 3, 0.f);
  fb.depth.assign(px, std::numeric_limits<float>::infinity());

  std::vector<Vec2> screen(positions.size());
  std::vector<double> depth(positions.size());
  std::vector<uint8_t> in_front(positions.size(), 0);
  for (size_t i = 0; i < positions.size(); ++i) {
    const Vec3 p = camera.extrinsic * positions[i];
    depth[i] = p.z();
    if (p.z() > kNearEps) {
      screen[i] = {camera.fx * p.x() / p.z() + camera.cx, camera.fy * p.y() / p.z() + camera.cy};
      in_front[i] = 1;
    }
  }

  for (size_t fi = 0; fi < faces.size(); ++fi) {
    const Face& f = faces[fi];
    if (!in_front[f[0]] || !in_front[f[1]] || !in_front[f[2]]) continue;  // no near clipping
    const Vec2& a = screen[f[0]];
    const Vec2& b = screen[f[1]];
    const Vec2& c = screen[f[2]];
    const double area = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
    if (area == 0.0) continue;

    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x(), b.x(), c.x()}) - 0.5)));
    const int x1 = std::min(fb.width - 1,
                            static_cast<int>(std::ceil(std::max({a.x(), b.x(), c.x()}) - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y(), b.y(), c.y()}) - 0.5)));
    const int y1 = std::min(fb.height - 1,
                            static_cast<int>(std::ceil(std::max({a.y(), b.y(), c.y()}) - 0.5)));

    const double inv_z0 = 1.0 / depth[f[0]];
    const double inv_z1 = 1.0 / depth[f[1]];
    const double inv_z2 = 1.0 / depth[f[2]];

    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Vec2 p(x + 0.5, y + 0.5);
        double l0 = ((b.x() - p.x()) * (c.y() - p.y()) - (b.y() - p.y()) * (c.x() - p.x())) / area;
        double l1 = ((c.x() - p.x()) * (a.y() - p.y()) - (c.y() - p.y()) * (a.x() - p.x())) / area;
        double l2 = 1.0 - l0 - l1;
        if (l0 < 0 || l1 < 0 || l2 < 0) continue;
        const double inv_z = l0 * inv_z0 + l1 * inv_z1 + l2 * inv_z2;
        const float z = static_cast<float>(1.0 / inv_z);
        const size_t idx = static_cast<size_t>(y) * fb.width + x;
        // Nearest depth wins; exact ties go to the lowest face index.
        if (z < fb.depth[idx] ||
            (z == fb.depth[idx] && static_cast<int>(fi) < fb.face[idx])) {
          fb.depth[idx] = z;
          fb.face[idx] = static_cast<int>(fi);
          // Perspective-correct barycentrics of the surface point.
          fb.bary[idx * 3 + 0] = static_cast<float>(l0 * inv_z0 / inv_z);
          fb.bary[idx * 3 + 1] = static_cast<float>(l1 * inv_z1 / inv_z);
          fb.bary[idx * 3 + 2] = static_cast<float>(l2 * inv_z2 / inv_z);
        }
      }
    }
  }
  return fb;
}

SilhouetteRaster rasterize_silhouette(const std::vector<Vec3>& positions,
                                      const std::vector<Face>& faces, const Camera& camera) {
  const FragmentBuffer fb = rasterize_fragments(positions, faces, camera);
  SilhouetteRaster out;
  out.width = fb.width;
  out.height = fb.height;
  out.values.resize(fb.face.size());
  for (size_t i = 0; i < fb.face.size(); ++i) {
    out.values[i] = fb.face[i] >= 0 ? 1.f : 0.f;
  }
  return out;
}

ColorRaster rasterize_colors(const std::vector<Vec3>& positions, const std::vector<Face>& faces,
                             const std::vector<Vec3>& vertex_colors, const Camera& camera) {
  const FragmentBuffer fb = rasterize_fragments(positions, faces, camera);
  ColorRaster out;
  out.width = fb.width;
  out.height = fb.height;
  out.rgb.assign(fb.face.size() * 3, 0.f);
  for (size_t i = 0; i < fb.face.size(); ++i) {
    if (fb.face[i] < 0) continue;
    const Face& f = faces[fb.face[i]];
    const Vec3 color = fb.bary[i * 3 + 0] * vertex_colors[f[0]] +
                       fb.bary[i * 3 + 1] * vertex_colors[f[1]] +
                       fb.bary[i * 3 + 2] * vertex_colors[f[2]];
    out.rgb[i * 3 + 0] = static_cast<float>(color.x());
    out.rgb[i * 3 + 1] = static_cast<float>(color.y());
    out.rgb[i * 3 + 2] = static_cast<float>(color.z());
  }
  return out;
}

namespace {

// Moller-Trumbore. Returns the hit parameter along `dir` or a negative value.
double ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& v0, const Vec3& v1,
                    const Vec3& v2) {
  const Vec3 e1 = v1 - v0;
  const Vec3 e2 = v2 - v0;
  const Vec3 pvec = dir.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < 1e-14) return -1.0;
  const double inv_det = 1.0 / det;
  const Vec3 tvec = origin - v0;
  const double u = tvec.dot(pvec) * inv_det;
  if (u < 0.0 || u > 1.0) return -1.0;
  const Vec3 qvec = tvec.cross(e1);
  const double v = dir.dot(qvec) * inv_det;
  if (v < 0.0 || u + v > 1.0) return -1.0;
  return e2.dot(qvec) * inv_det;
}

}  // namespace

std::vector<uint8_t> visibility(const std::vector<Vec3>& positions, const std::vector<Face>& faces,
                                const Camera& camera) {
  const Vec3 origin = camera.origin();
  Vec3 lo = positions.empty() ? Vec3::Zero() : positions[0];
  Vec3 hi = lo;
  for (const Vec3& p : positions) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double eps = 1e-6 * (hi - lo).norm();

  std::vector<uint8_t> vis(positions.size(), 0);
  for (size_t vi = 0; vi < positions.size(); ++vi) {
    const Vec3 cam = camera.extrinsic * positions[vi];
    if (cam.z() <= kNearEps) continue;
    const Vec3 dir = positions[vi] - origin;
    const double dist = dir.norm();
    bool occluded = false;
    for (const Face& f : faces) {
      if (f[0] == static_cast<int>(vi) || f[1] == static_cast<int>(vi) ||
          f[2] == static_cast<int>(vi)) {
        continue;
      }
      const double t = ray_triangle(origin, dir, positions[f[0]], positions[f[1]], positions[f[2]]);
      if (t > 0.0 && t * dist < dist - eps) {
        occluded = true;
        break;
      }
    }
    vis[vi] = occluded ? 0 : 1;
  }
  return vis;
}

FlowRaster flow_from_correspondence(const std::vector<Vec3>& positions_t,
                                    const std::vector<Vec3>& positions_t1,
                                    const Camera& camera_t, const Camera& camera_t1,
                                    const std::vector<Face>& faces) {
  if (positions_t.size() != positions_t1.size()) {
    throw IoError("flow correspondence requires identical topology at t and t+1");
  }
  const FragmentBuffer fb = rasterize_fragments(positions_t, faces, camera_t);
  FlowRaster out;
  out.width = fb.width;
  out.height = fb.height;
  out.flow.assign(fb.face.size() * 2, 0.f);
  out.confidence.assign(fb.face.size(), 0.f);
  for (int y = 0; y < fb.height; ++y) {
    for (int x = 0; x < fb.width; ++x) {
      const size_t idx = static_cast<size_t>(y) * fb.width + x;
      if (fb.face[idx] < 0) continue;
      const Face& f = faces[fb.face[idx]];
      const double b0 = fb.bary[idx * 3 + 0];
      const double b1 = fb.bary[idx * 3 + 1];
      const double b2 = fb.bary[idx * 3 + 2];
      const Vec3 p_t = b0 * positions_t[f[0]] + b1 * positions_t[f[1]] + b2 * positions_t[f[2]];
      const Vec3 p_t1 =
          b0 * positions_t1[f[0]] + b1 * positions_t1[f[1]] + b2 * positions_t1[f[2]];
      const Vec3 cam1 = camera_t1.extrinsic * p_t1;
      if (cam1.z() <= kNearEps) continue;  // moved behind the camera: no flow evidence
      const Vec2 px_t = project(camera_t, p_t);
      const Vec2 px_t1(camera_t1.fx * cam1.x() / cam1.z() + camera_t1.cx,
                       camera_t1.fy * cam1.y() / cam1.z() + camera_t1.cy);
      out.flow[idx * 2 + 0] = static_cast<float>(px_t1.x() - px_t.x());
      out.flow[idx * 2 + 1] = static_cast<float>(px_t1.y() - px_t.y());
      out.confidence[idx] = 1.f;
    }
  }
  return out;
}

void save_pgm(const SilhouetteRaster& raster, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write PGM file: " + path);
  out << "P5\n" << raster.width << ' ' << raster.height << "\n255\n";
  std::vector<unsigned char> row(raster.width);
  for (int y = 0; y < raster.height; ++y) {
    for (int x = 0; x < raster.width; ++x) {
      const float v = raster.at(x, y);
      row[x] = static_cast<unsigned char>(std::lround(std::clamp(v, 0.f, 1.f) * 255.f));
    }
    out.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
  if (!out) throw IoError("write failure: " + path);
}

SilhouetteRaster load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open PGM file: " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5") throw IoError("unsupported PGM format (want P5): " + path);
  int w = 0, h = 0, maxval = 0;
  in >> w >> h >> maxval;
  in.get();  // single whitespace after the header
  if (!in || w <= 0 || h <= 0 || maxval != 255) throw IoError("bad PGM header: " + path);
  SilhouetteRaster raster;
  raster.width = w;
  raster.height = h;
  raster.values.resize(static_cast<size_t>(w) * h);
  std::vector<unsigned char> data(raster.values.size());
  in.read(reinterpret_cast<char*>(data.data()), data.size());
  if (!in) throw IoError("truncated PGM data: " + path);
  for (size_t i = 0; i < data.size(); ++i) raster.values[i] = data[i] / 255.f;
  return raster;
}

namespace {
constexpr char kFlowMagic[4] = {'S', 'K', 'F', 'L'};
}

void save_flow(const FlowRaster& raster, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write flow file: " + path);
  out.write(kFlowMagic, 4);
  const uint16_t h = static_cast<uint16_t>(raster.height);
  const uint16_t w = static_cast<uint16_t>(raster.width);
  const unsigned char header[4] = {
      static_cast<unsigned char>(h & 0xff), static_cast<unsigned char>(h >> 8),
      static_cast<unsigned char>(w & 0xff), static_cast<unsigned char>(w >> 8)};
  out.write(reinterpret_cast<const char*>(header), 4);
  out.write(reinterpret_cast<const char*>(raster.flow.data()), raster.flow.size() * 4);
  out.write(reinterpret_cast<const char*>(raster.confidence.data()),
            raster.confidence.size() * 4);
  if (!out) throw IoError("write failure: " + path);
}

FlowRaster load_flow(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open flow file: " + path);
  char magic[4];
  unsigned char header[4];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(header), 4);
  if (!in || std::memcmp(magic, kFlowMagic, 4) != 0) {
    throw IoError("bad flow file magic: " + path);
  }
  FlowRaster raster;
  raster.height = header[0] | (header[1] << 8);
  raster.width = header[2] | (header[3] << 8);
  const size_t px = static_cast<size_t>(raster.width) * raster.height;
  raster.flow.resize(px * 2);
  raster.confidence.resize(px);
  in.read(reinterpret_cast<char*>(raster.flow.data()), raster.flow.size() * 4);
  in.read(reinterpret_cast<char*>(raster.confidence.data()), raster.confidence.size() * 4);
  if (!in) throw IoError("truncated flow data: " + path);
  return raster;
}

}  // namespace skelkit
