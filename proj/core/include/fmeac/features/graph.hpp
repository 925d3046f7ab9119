#pragma once

#include <vector>

#include "fmeac/common/vec3.hpp"
#include "fmeac/nn/tensor.hpp"

namespace fmeac::features {

// Node features H [n, d] and a symmetric non-negative adjacency A [n, n] without self-loops.
struct GraphInput {
  nn::Tensor node_features;
  nn::Tensor adjacency;

  std::size_t node_count() const { return node_features.rows(); }
};

// Compact form kept in replay memory. The adjacency is rebuilt on demand: an edge joins
// two nodes closer than `radius`.
struct GraphSnapshot {
  nn::Tensor node_features;
  std::vector<Vec3> positions;
  double radius = 0.0;

  GraphInput expand() const;
};

// D^-1/2 (A + I) D^-1/2 with D the row sums of A + I. Throws ContractError for a
// non-square, asymmetric or negative A.
nn::Tensor normalize_adjacency(const nn::Tensor& adjacency);

// Y = M X for a square M [n, n] and X [n, k].
nn::Tensor matmul(const nn::Tensor& m, const nn::Tensor& x);

}  // namespace fmeac::features
