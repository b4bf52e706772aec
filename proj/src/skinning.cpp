#include "skelkit/skinning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace skelkit {

SkinningWeights compute_skinning_weights(const std::vector<Vec3>& positions,
                                         const Skeleton& skeleton, const Eigen::MatrixXd* bias,
                                         double temperature) {
  const int n = static_cast<int>(positions.size());
  const int b = skeleton.n_bones();
  if (b == 0) throw IoError("cannot compute skinning weights for an empty skeleton");
  if (bias && (bias->rows() != n || bias->cols() != b)) {
    throw IoError("skinning bias shape does not match N x B");
  }
  SkinningWeights out;
  out.w.resize(n, b);
  Eigen::VectorXd logits(b);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < b; ++j) {
      logits[j] = -skeleton.bones[j].mahalanobis(positions[i]) / temperature;
      if (bias) logits[j] += (*bias)(i, j);
    }
    const double peak = logits.maxCoeff();
    double total = 0.0;
    for (int j = 0; j < b; ++j) {
      logits[j] = std::exp(logits[j] - peak);
      total += logits[j];
    }
    out.w.row(i) = logits.transpose() / total;
  }
  return out;
}

SkinningWeights compute_skinning_weights(const TriMesh& mesh, const Skeleton& skeleton,
                                         const Eigen::MatrixXd* bias, double temperature) {
  return compute_skinning_weights(mesh.vertices, skeleton, bias, temperature);
}

std::vector<double> weight_entropies(const SkinningWeights& weights) {
  std::vector<double> h(weights.n_vertices(), 0.0);
  for (int i = 0; i < weights.n_vertices(); ++i) {
    double acc = 0.0;
    for (int j = 0; j < weights.n_bones(); ++j) {
      const double w = weights.w(i, j);
      if (w > 0.0) acc -= w * std::log2(w);
    }
    h[i] = acc;
  }
  return h;
}

RigidityCoeffs rigidity_coefficients(const SkinningWeights& weights,
                                     const std::vector<Edge>& edges, double lambda) {
  const std::vector<double> entropy = weight_entropies(weights);
  std::vector<double> inv(entropy.size());
  for (size_t i = 0; i < entropy.size(); ++i) {
    inv[i] = 1.0 / (entropy[i] + lambda);
  }
  RigidityCoeffs out;
  out.lambda = lambda;
  out.r.reserve(edges.size());
  for (const Edge& e : edges) {
    out.r.push_back(inv[e[0]] * inv[e[1]]);
  }
  return out;
}

PartAssignment one_hot_parts(const SkinningWeights& weights) {
  PartAssignment parts;
  parts.n_parts = weights.n_bones();
  parts.part.resize(weights.n_vertices());
  parts.counts.assign(weights.n_bones(), 0);
  for (int i = 0; i < weights.n_vertices(); ++i) {
    int best = 0;
    for (int j = 1; j < weights.n_bones(); ++j) {
      if (weights.w(i, j) > weights.w(i, best)) best = j;  // ties keep the lowest index
    }
    parts.part[i] = best;
    ++parts.counts[best];
  }
  return parts;
}

std::vector<int> select_small_parts(const PartAssignment& parts, double fraction) {
  if (parts.counts.empty()) return {};
  std::vector<int> sorted = parts.counts;
  std::sort(sorted.begin(), sorted.end());
  const size_t m = sorted.size();
  const double median =
      m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  std::vector<int> small;
  for (size_t b = 0; b < parts.counts.size(); ++b) {
    if (parts.counts[b] < fraction * median) small.push_back(static_cast<int>(b));
  }
  return small;
}

namespace {

constexpr char kWeightsMagic[4] = {'S', 'K', 'W', 'B'};

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void save_weights(const SkinningWeights& weights, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write weights file: " + path);
  out.write(kWeightsMagic, 4);
  put_u32(out, static_cast<uint32_t>(weights.n_vertices()));
  put_u32(out, static_cast<uint32_t>(weights.n_bones()));
  for (int i = 0; i < weights.n_vertices(); ++i) {
    for (int j = 0; j < weights.n_bones(); ++j) {
      const float f = static_cast<float>(weights.w(i, j));
      static_assert(sizeof(float) == 4);
      out.write(reinterpret_cast<const char*>(&f), 4);
    }
  }
  if (!out) throw IoError("write failure: " + path);
}

SkinningWeights load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weights file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kWeightsMagic, 4) != 0) {
    throw IoError("bad weights file magic: " + path);
  }
  const uint32_t n = get_u32(in);
  const uint32_t b = get_u32(in);
  if (!in) throw IoError("truncated weights header: " + path);
  SkinningWeights weights;
  weights.w.resize(n, b);
  for (uint32_t i = 0; i < n; ++i) {
    for (uint32_t j = 0; j < b; ++j) {
      float f = 0;
      in.read(reinterpret_cast<char*>(&f), 4);
      weights.w(i, j) = f;
    }
  }
  if (!in) throw IoError("truncated weights data: " + path);
  return weights;
}

std::string weights_to_json(const SkinningWeights& weights) {
  nlohmann::json j;
  j["n"] = weights.n_vertices();
  j["b"] = weights.n_bones();
  auto rows = nlohmann::json::array();
  for (int i = 0; i < weights.n_vertices(); ++i) {
    auto row = nlohmann::json::array();
    for (int k = 0; k < weights.n_bones(); ++k) row.push_back(weights.w(i, k));
    rows.push_back(row);
  }
  j["w"] = rows;
  return j.dump();
}

SkinningWeights weights_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("weights parse failure: ") + e.what());
  }
  SkinningWeights weights;
  try {
    const int n = j.at("n").get<int>();
    const int b = j.at("b").get<int>();
    weights.w.resize(n, b);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < b; ++k) {
        weights.w(i, k) = j.at("w").at(i).at(k).get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("weights schema error: ") + e.what());
  }
  return weights;
}

}  // namespace skelkit
