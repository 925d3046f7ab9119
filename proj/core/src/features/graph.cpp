#include "fmeac/features/graph.hpp"

#include <cmath>

#include "fmeac/common/errors.hpp"

namespace fmeac::features {

nn::Tensor normalize_adjacency(const nn::Tensor& adjacency) {
  const std::size_t n = adjacency.rows();
  if (adjacency.rank() != 2 || adjacency.cols() != n) {
    throw ContractError("normalize_adjacency: adjacency must be square");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (adjacency(i, j) < 0.0) throw ContractError("normalize_adjacency: negative entry");
      if (adjacency(i, j) != adjacency(j, i)) {
        throw ContractError("normalize_adjacency: adjacency is not symmetric");
      }
    }
  }
  nn::Tensor out = adjacency;
  for (std::size_t i = 0; i < n; ++i) out(i, i) += 1.0;
  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += out(i, j);
    inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out(i, j) *= inv_sqrt_deg[i] * inv_sqrt_deg[j];
  }
  return out;
}

nn::Tensor matmul(const nn::Tensor& m, const nn::Tensor& x) {
  if (m.cols() != x.rows()) throw DimensionError("matmul: inner dimensions differ");
  nn::Tensor y = nn::Tensor::matrix(m.rows(), x.cols());
  const std::size_t k_dim = x.cols();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double* yi = y.row(i).data();
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double a = m(i, j);
      if (a == 0.0) continue;
      const double* xj = x.row(j).data();
      for (std::size_t k = 0; k < k_dim; ++k) yi[k] += a * xj[k];
    }
  }
  return y;
}

GraphInput GraphSnapshot::expand() const {
  const std::size_t n = positions.size();
  if (node_features.rows() != n) throw DimensionError("GraphSnapshot: one position per node required");
  GraphInput g{node_features, nn::Tensor::matrix(n, n)};
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (distance(positions[a], positions[b]) < radius) g.adjacency(a, b) = g.adjacency(b, a) = 1.0;
    }
  }
  return g;
}

}  // namespace fmeac::features
