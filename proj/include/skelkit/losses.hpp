#pragma once

#include <string>
#include <vector>

#include "skelkit/geometry.hpp"
#include "skelkit/rendering.hpp"
#include "skelkit/skinning.hpp"

namespace skelkit {

/// Term weights of the rasterization-scheme objective. The perceptual slot is
/// fixed at zero.
struct LossWeights {
  double beta_silhouette = 1.0;
  double beta_rgb = 0.1;
  double beta_flow = 0.5;
  double beta_perceptual = 0.0;
  double alpha_shape = 0.1;
  double eta_dr = 1.0;
};

/// Dynamic-rigid loss: rigidity-weighted absolute edge-length change between
/// the two frames, summed over mesh edges.
double dr_loss(const std::vector<Vec3>& pos_t, const std::vector<Vec3>& pos_t1,
               const std::vector<Edge>& edges, const RigidityCoeffs& rigidity);

/// ARAP baseline: dr_loss with unit rigidity.
double arap_loss(const std::vector<Vec3>& pos_t, const std::vector<Vec3>& pos_t1,
                 const std::vector<Edge>& edges);

/// Uniform-neighbor Laplacian smoothness: sum_i || X_i - mean(neighbors) ||^2.
/// Isolated vertices are excluded; their count is reported if requested.
double shape_loss(const TriMesh& mesh, int* isolated_count = nullptr);

/// Mean squared difference between rasters.
double silhouette_loss(const SilhouetteRaster& rendered, const SilhouetteRaster& target);

/// Confidence-weighted mean squared flow difference; the confidence map comes
/// from the target raster. Zero confidence everywhere yields zero.
double flow_loss(const FlowRaster& rendered, const FlowRaster& target);

/// Mean absolute color difference.
double rgb_loss(const ColorRaster& rendered, const ColorRaster& target);

struct LossRow {
  int frame = 0;
  double silhouette = 0.0;
  double rgb = 0.0;
  double flow = 0.0;
  double shape = 0.0;
  double dr = 0.0;
  double total = 0.0;
};

struct LossReport {
  std::vector<LossRow> rows;

  LossRow totals() const;
  /// CSV with header "frame,silhouette,rgb,flow,shape,dr,total".
  std::string to_csv() const;
};

}  // namespace skelkit
