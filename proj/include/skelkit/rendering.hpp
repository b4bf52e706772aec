#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skelkit/geometry.hpp"
#include "skelkit/transform.hpp"

namespace skelkit {

/// Pinhole camera. `extrinsic` maps world to camera coordinates; the camera
/// looks down +z.
struct Camera {
  double fx = 1.0, fy = 1.0;
  double cx = 0.0, cy = 0.0;
  RigidTransform extrinsic;
  int width = 0, height = 0;

  Vec3 origin() const { return extrinsic.inverse().translation; }
};

/// Pinhole projection to pixel coordinates. Throws NumericalError when the
/// point is at or behind the camera (z <= 1e-6 in camera space).
Vec2 project(const Camera& camera, const Vec3& world_point);

/// Projects every vertex; vertices at or behind the camera get `valid` = 0
/// instead of an error.
struct ProjectedVertices {
  std::vector<Vec2> pixels;
  std::vector<uint8_t> valid;
};
ProjectedVertices project_vertices(const Camera& camera, const std::vector<Vec3>& positions);

struct SilhouetteRaster {
  int width = 0, height = 0;
  std::vector<float> values;  // row-major, in [0,1]

  float at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
  double coverage() const;  // sum of values (covered-pixel count for binary rasters)
};

struct FlowRaster {
  int width = 0, height = 0;
  std::vector<float> flow;        // row-major, 2 channels per pixel (du, dv)
  std::vector<float> confidence;  // row-major, zero outside the silhouette

  Vec2 flow_at(int x, int y) const {
    const size_t i = (static_cast<size_t>(y) * width + x) * 2;
    return {flow[i], flow[i + 1]};
  }
};

struct ColorRaster {
  int width = 0, height = 0;
  std::vector<float> rgb;  // row-major, 3 channels per pixel
};

/// Per-pixel nearest fragment from z-buffered rasterization: face index (-1
/// for background), perspective-correct barycentrics, and camera-space depth.
/// Depth ties resolve to the lowest face index.
struct FragmentBuffer {
  int width = 0, height = 0;
  std::vector<int> face;
  std::vector<float> bary;  // 3 per pixel
  std::vector<float> depth;
};

FragmentBuffer rasterize_fragments(const std::vector<Vec3>& positions,
                                   const std::vector<Face>& faces, const Camera& camera);

/// Hard binary coverage via z-buffered rasterization.
SilhouetteRaster rasterize_silhouette(const std::vector<Vec3>& positions,
                                      const std::vector<Face>& faces, const Camera& camera);

/// Flat per-vertex color rendering (synthetic RGB mode); background is black.
ColorRaster rasterize_colors(const std::vector<Vec3>& positions, const std::vector<Face>& faces,
                             const std::vector<Vec3>& vertex_colors, const Camera& camera);

/// Ray-cast vertex visibility: a vertex is visible iff the segment from the
/// camera origin to it hits no triangle strictly nearer than the vertex
/// (tolerance 1e-6 * bbox diagonal; triangles containing the vertex are
/// excluded). Vertices behind the camera are invisible.
std::vector<uint8_t> visibility(const std::vector<Vec3>& positions, const std::vector<Face>& faces,
                                const Camera& camera);

/// Ground-truth flow raster: for each pixel covered at time t, the projected
/// displacement of the rasterized surface point between t and t+1.
/// Confidence is 1 inside the t silhouette, 0 outside.
FlowRaster flow_from_correspondence(const std::vector<Vec3>& positions_t,
                                    const std::vector<Vec3>& positions_t1,
                                    const Camera& camera_t, const Camera& camera_t1,
                                    const std::vector<Face>& faces);

// Raster file formats: binary PGM (P5, 8-bit) for silhouettes; flow as magic
// "SKFL" + H, W as little-endian u16, then H*W*2 float32 flow followed by
// H*W float32 confidence, all little-endian.
void save_pgm(const SilhouetteRaster& raster, const std::string& path);
SilhouetteRaster load_pgm(const std::string& path);
void save_flow(const FlowRaster& raster, const std::string& path);
FlowRaster load_flow(const std::string& path);

}  // namespace skelkit
