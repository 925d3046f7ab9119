#include "fmeac/features/gnn.hpp"

#include <algorithm>
#include <cmath>

#include "fmeac/common/errors.hpp"

namespace fmeac::features {

namespace {

// X [n, k] * W [k, m] with W read from a flat buffer.
nn::Tensor right_multiply(const nn::Tensor& x, const double* w, std::size_t k, std::size_t m) {
  nn::Tensor y = nn::Tensor::matrix(x.rows(), m);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double* xr = x.row(r).data();
    double* yr = y.row(r).data();
    for (std::size_t i = 0; i < k; ++i) {
      const double a = xr[i];
      if (a == 0.0) continue;
      const double* wi = w + i * m;
      for (std::size_t j = 0; j < m; ++j) yr[j] += a * wi[j];
    }
  }
  return y;
}

void relu_inplace(nn::Tensor& t) {
  for (double& v : t.data()) v = std::max(v, 0.0);
}

}  // namespace

GnnModel::GnnModel(GnnConfig cfg, Rng& rng) : cfg_(cfg) {
  params_.resize(cfg_.node_dim * cfg_.hidden + cfg_.hidden * cfg_.feature_dim);
  auto init = [&](std::size_t offset, std::size_t fan_in, std::size_t count) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t i = 0; i < count; ++i) params_[offset + i] = dist(rng);
  };
  init(0, cfg_.node_dim, cfg_.node_dim * cfg_.hidden);
  init(w2_offset(), cfg_.hidden, cfg_.hidden * cfg_.feature_dim);
}

GnnModel::Pass GnnModel::forward_cached(const GraphInput& g) const {
  if (g.node_features.cols() != cfg_.node_dim) {
    throw DimensionError("GnnModel: node feature width " + std::to_string(g.node_features.cols()) +
                         " != " + std::to_string(cfg_.node_dim));
  }
  if (g.adjacency.rows() != g.node_features.rows()) {
    throw DimensionError("GnnModel: adjacency and node counts differ");
  }
  Pass p;
  p.model = this;
  p.version = version_;
  p.a_norm = normalize_adjacency(g.adjacency);
  p.ah = matmul(p.a_norm, g.node_features);
  p.h1 = right_multiply(p.ah, params_.data(), cfg_.node_dim, cfg_.hidden);
  relu_inplace(p.h1);
  // A (h1 W2) is cheaper than (A h1) W2 whenever F < hidden; the result is the same.
  p.h2 = matmul(p.a_norm, right_multiply(p.h1, params_.data() + w2_offset(), cfg_.hidden, cfg_.feature_dim));
  relu_inplace(p.h2);
  const std::size_t n = p.h2.rows();
  p.feature = nn::Tensor::matrix(1, cfg_.feature_dim);
  if (n > 0) {
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < cfg_.feature_dim; ++j) p.feature(0, j) += p.h2(r, j);
    }
    for (double& v : p.feature.data()) v *= cfg_.beta / static_cast<double>(n);
  }
  return p;
}

nn::Tensor GnnModel::forward(const GraphInput& g) const { return forward_cached(g).feature; }

nn::Tensor GnnModel::forward_batch(std::span<const GraphInput* const> graphs) const {
  nn::Tensor out = nn::Tensor::matrix(graphs.size(), cfg_.feature_dim);
  for (std::size_t b = 0; b < graphs.size(); ++b) {
    const nn::Tensor f = forward(*graphs[b]);
    std::copy(f.data().begin(), f.data().end(), out.row(b).begin());
  }
  return out;
}

std::vector<double> GnnModel::backward(const Pass& pass, std::span<const double> grad_feature) const {
  if (pass.model != this || pass.version != version_) {
    throw ContractError("GnnModel::backward: forward cache is stale or from another model");
  }
  const std::size_t n = pass.h2.rows();
  const std::size_t f = cfg_.feature_dim;
  const std::size_t h = cfg_.hidden;
  std::vector<double> grads(params_.size(), 0.0);
  if (n == 0) return grads;

  // d/dZ2 through the mean pool and the second relu.
  nn::Tensor dz2 = nn::Tensor::matrix(n, f);
  const double scale = cfg_.beta / static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < f; ++j) dz2(r, j) = pass.h2(r, j) > 0.0 ? grad_feature[j] * scale : 0.0;
  }
  // Z2 = A (h1 W2), A symmetric: d(h1 W2) = A dz2.
  const nn::Tensor adz2 = matmul(pass.a_norm, dz2);
  double* dw2 = grads.data() + w2_offset();
  const double* w2 = params_.data() + w2_offset();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < h; ++i) {
      const double a = pass.h1(r, i);
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < f; ++j) dw2[i * f + j] += a * adz2(r, j);
    }
  }
  nn::Tensor dz1 = nn::Tensor::matrix(n, h);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < h; ++i) {
      if (pass.h1(r, i) <= 0.0) continue;
      double s = 0.0;
      for (std::size_t j = 0; j < f; ++j) s += w2[i * f + j] * adz2(r, j);
      dz1(r, i) = s;
    }
  }
  // Z1 = (A H) W1
  double* dw1 = grads.data();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < cfg_.node_dim; ++k) {
      const double a = pass.ah(r, k);
      if (a == 0.0) continue;
      for (std::size_t i = 0; i < h; ++i) dw1[k * h + i] += a * dz1(r, i);
    }
  }
  return grads;
}

nn::Checkpoint GnnModel::to_checkpoint() const {
  nn::Checkpoint ck;
  ck.add("model_kind", nn::Tensor({1}, std::vector<double>{0.0}));
  ck.add("gnn.config", nn::Tensor({4}, std::vector<double>{static_cast<double>(cfg_.node_dim),
                                                            static_cast<double>(cfg_.hidden),
                                                            static_cast<double>(cfg_.feature_dim), cfg_.beta}));
  ck.add("gnn.w1", nn::Tensor({cfg_.node_dim, cfg_.hidden},
                              std::vector<double>(params_.begin(), params_.begin() + static_cast<std::ptrdiff_t>(w2_offset()))));
  ck.add("gnn.w2", nn::Tensor({cfg_.hidden, cfg_.feature_dim},
                              std::vector<double>(params_.begin() + static_cast<std::ptrdiff_t>(w2_offset()), params_.end())));
  return ck;
}

GnnModel GnnModel::from_checkpoint(const nn::Checkpoint& ck) {
  if (ck.get("model_kind")[0] != 0.0) throw ContractError("checkpoint does not hold a gnn model");
  const nn::Tensor& c = ck.get("gnn.config");
  GnnModel m;
  m.cfg_ = {static_cast<std::size_t>(c[0]), static_cast<std::size_t>(c[1]), static_cast<std::size_t>(c[2]), c[3]};
  const nn::Tensor& w1 = ck.get("gnn.w1");
  const nn::Tensor& w2 = ck.get("gnn.w2");
  m.params_.assign(w1.data().begin(), w1.data().end());
  m.params_.insert(m.params_.end(), w2.data().begin(), w2.data().end());
  if (m.params_.size() != m.cfg_.node_dim * m.cfg_.hidden + m.cfg_.hidden * m.cfg_.feature_dim) {
    throw DimensionError("gnn checkpoint: parameter count does not match config");
  }
  return m;
}

void gnn_apply_feature_gradient(GnnModel& model, std::span<const GnnModel::Pass> passes,
                                const nn::Tensor& grad_features, nn::AdamState& adam) {
  if (grad_features.rows() != passes.size()) {
    throw DimensionError("gnn_apply_feature_gradient: one gradient row per graph required");
  }
  std::vector<double> total(model.parameters().size(), 0.0);
  for (std::size_t b = 0; b < passes.size(); ++b) {
    const std::vector<double> g = model.backward(passes[b], grad_features.row(b));
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += g[i];
  }
  nn::adam_step(model.mutable_parameters(), total, adam);
}

}  // namespace fmeac::features
