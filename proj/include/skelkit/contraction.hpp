#pragma once

#include <vector>

#include "skelkit/geometry.hpp"

namespace skelkit {

struct ContractionConfig {
  // Escalation of the contraction weight per iteration. With the default
  // initial weight 1e-3 * sqrt(mean face area), 5.0 is the smallest factor
  // that drives a unit icosphere below 1e-3 of its volume inside the
  // ten-iteration budget.
  double s_l = 5.0;
  double vol_eps = 1e-3;  // stop when |volume| < vol_eps * |initial volume|
  int max_iters = 10;
  double w_a0 = 1.0;  // initial attraction weight
  double w_c0 = 0.0;  // initial contraction weight; 0 -> 1e-3 * sqrt(mean face area)
};

/// Per-iteration state of the contraction. Connectivity never changes; only
/// the positions move.
struct ContractionState {
  std::vector<Vec3> positions;   // X'
  double w_c = 0.0;              // scalar contraction weight for the next solve
  std::vector<double> w_a;       // per-vertex attraction weights
  std::vector<double> rest_areas;  // one-ring areas of the input mesh
  double w_a0 = 1.0;
  int iteration = 0;
};

ContractionState init_contraction(const TriMesh& mesh, const ContractionConfig& cfg = {});

/// One contraction iteration: solves the normal equations of
///   || w_c * L * X' ||^2 + sum_i w_a[i]^2 * || X'_i - X_i ||^2
/// with L the cotan Laplacian of the current positions and X the current
/// positions, then applies the weight updates w_c <- s_l * w_c and
/// w_a[i] <- w_a0 * sqrt(A0_i / A_i).
ContractionState contract_step(const TriMesh& mesh, const ContractionState& state,
                               const ContractionConfig& cfg = {});

/// Runs contract_step until |volume| < vol_eps * |initial volume| or max_iters.
/// Connectivity of the result is identical to the input.
TriMesh contract(const TriMesh& mesh, const ContractionConfig& cfg = {});

/// 1D skeleton graph produced by connectivity surgery. `edge_absorbed`
/// partitions the original vertex indices over the surviving edges (it is
/// empty when the graph has no edges); `node_absorbed` partitions them over
/// nodes.
struct SkeletonGraph {
  std::vector<Vec3> nodes;
  std::vector<Edge> edges;
  std::vector<std::vector<int>> edge_absorbed;
  std::vector<std::vector<int>> node_absorbed;
};

/// Collapses minimum-cost edges (QEM shape cost + cumulative-travel sampling
/// cost) until no faces remain. Collapses that would merge nodes farther apart
/// than 0.25 * bbox-diagonal are deferred while cheaper candidates exist.
SkeletonGraph connectivity_surgery(const TriMesh& contracted);

std::string skeleton_graph_to_json(const SkeletonGraph& graph);
SkeletonGraph skeleton_graph_from_json(const std::string& text);

}  // namespace skelkit
