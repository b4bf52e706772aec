#pragma once

#include <cstdint>
#include <vector>

#include "skelkit/geometry.hpp"
#include "skelkit/rendering.hpp"
#include "skelkit/skinning.hpp"

namespace skelkit {

/// Per-vertex 2D flow sampled from a flow raster. Flow of invisible vertices
/// is nullified.
struct SurfaceFlow {
  std::vector<Vec2> flow;
  std::vector<uint8_t> visible;
};

/// Bilinear sample of the flow raster at each projected vertex. Samples whose
/// bilinear footprint leaves the frame get zero flow and visibility 0.
SurfaceFlow sample_surface_flow(const FlowRaster& raster, const std::vector<Vec2>& projected,
                                const std::vector<uint8_t>& visible);

/// Weight-aggregated visible flow per bone:
///   F_b = sum_n W[n,b] * F_n * V_n.
/// Bones whose visible weighted mass falls below 1e-3 * N are flagged
/// unobserved for the frame.
struct BoneFlow {
  std::vector<Vec2> flow;
  std::vector<double> mass;       // sum_n W[n,b] * V_n
  std::vector<uint8_t> observed;
};

BoneFlow bone_flow(const SurfaceFlow& surface, const SkinningWeights& weights);

/// a.b / (|a| |b|). Throws NumericalError when either norm is below 1e-12;
/// callers treat such pairs as carrying no evidence.
double cosine_similarity(const Vec2& a, const Vec2& b);

/// Diagnostic CSV rows "frame,bone,u,v,mass", one per bone.
std::string bone_flow_csv(const std::vector<std::pair<int, BoneFlow>>& per_frame);

}  // namespace skelkit
