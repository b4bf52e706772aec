#pragma once

#include <string>
#include <vector>

#include "skelkit/geometry.hpp"
#include "skelkit/skeleton.hpp"

namespace skelkit {

/// Row-stochastic N x B assignment of vertices to bones.
struct SkinningWeights {
  Eigen::MatrixXd w;

  int n_vertices() const { return static_cast<int>(w.rows()); }
  int n_bones() const { return static_cast<int>(w.cols()); }
};

/// W[n,b] = softmax_b(-d(X_n, C_b, Q_b) / temperature + bias[n,b]) with d the
/// Mahalanobis distance to the bone ellipsoid. The negative sign makes nearby
/// bones dominate. `bias` is the optional per-vertex slot replacing the
/// learned term; empty means zero.
SkinningWeights compute_skinning_weights(const std::vector<Vec3>& positions,
                                         const Skeleton& skeleton,
                                         const Eigen::MatrixXd* bias = nullptr,
                                         double temperature = 1.0);
SkinningWeights compute_skinning_weights(const TriMesh& mesh, const Skeleton& skeleton,
                                         const Eigen::MatrixXd* bias = nullptr,
                                         double temperature = 1.0);

/// Per-edge rigidity, one entry per mesh edge:
///   R_ij = 1/(H_i + lambda) * 1/(H_j + lambda)
/// with H the base-2 entropy of a vertex's weight row. Computed as a product
/// of reciprocals so the zero-entropy case lands exactly on (1/lambda)^2.
struct RigidityCoeffs {
  std::vector<double> r;
  double lambda = 0.1;
};

RigidityCoeffs rigidity_coefficients(const SkinningWeights& weights,
                                     const std::vector<Edge>& edges, double lambda = 0.1);

/// Base-2 entropy per weight row (0 log 0 := 0).
std::vector<double> weight_entropies(const SkinningWeights& weights);

/// Hard decomposition: argmax per row, ties to the lowest bone index.
struct PartAssignment {
  std::vector<int> part;    // per vertex
  std::vector<int> counts;  // per bone
  int n_parts = 0;
};

PartAssignment one_hot_parts(const SkinningWeights& weights);

/// Bones whose vertex count falls below fraction * median part size — the
/// small "limb" parts that get targeted updates.
std::vector<int> select_small_parts(const PartAssignment& parts, double fraction = 0.5);

/// Binary weight format: magic "SKWB", N, B as little-endian u32, then N*B
/// float32 row-major.
void save_weights(const SkinningWeights& weights, const std::string& path);
SkinningWeights load_weights(const std::string& path);

std::string weights_to_json(const SkinningWeights& weights);
SkinningWeights weights_from_json(const std::string& text);

}  // namespace skelkit
