#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fmeac/common/rng.hpp"
#include "fmeac/features/graph.hpp"
#include "fmeac/nn/adam.hpp"
#include "fmeac/nn/checkpoint.hpp"

namespace fmeac::features {

struct GnnConfig {
  std::size_t node_dim = 8;
  std::size_t hidden = 64;
  std::size_t feature_dim = 32;
  double beta = 0.01;  // feature normalization coefficient
};

// Two graph-convolution layers  H' = relu(A_norm H W)  followed by mean pooling over nodes;
// the pooled vector is scaled by beta.
class GnnModel {
 public:
  struct Pass {
    const GnnModel* model = nullptr;
    std::uint64_t version = 0;
    nn::Tensor a_norm;
    nn::Tensor ah;  // A_norm H
    nn::Tensor h1;  // relu(A_norm H W1)
    nn::Tensor h2;  // relu(A_norm h1 W2)
    nn::Tensor feature;  // [1, F]
  };

  GnnModel() = default;
  GnnModel(GnnConfig cfg, Rng& rng);

  const GnnConfig& config() const { return cfg_; }
  std::size_t feature_dim() const { return cfg_.feature_dim; }

  // [1, F]
  nn::Tensor forward(const GraphInput& g) const;
  Pass forward_cached(const GraphInput& g) const;
  // Parameter gradient of <grad_feature, feature>.
  std::vector<double> backward(const Pass& pass, std::span<const double> grad_feature) const;

  // Features of many graphs stacked into [batch, F].
  nn::Tensor forward_batch(std::span<const GraphInput* const> graphs) const;

  std::span<const double> parameters() const { return params_; }
  std::span<double> mutable_parameters() {
    ++version_;
    return params_;
  }

  nn::Checkpoint to_checkpoint() const;
  static GnnModel from_checkpoint(const nn::Checkpoint& ck);

 private:
  std::size_t w2_offset() const { return cfg_.node_dim * cfg_.hidden; }

  GnnConfig cfg_;
  std::vector<double> params_;  // W1 [node_dim, hidden] then W2 [hidden, F]
  std::uint64_t version_ = 0;
};

// Backpropagates the gradient of some loss w.r.t. each graph's feature row and takes one
// Adam step on the GNN parameters. `grad_features` is [batch, F] aligned with `passes`.
void gnn_apply_feature_gradient(GnnModel& model, std::span<const GnnModel::Pass> passes,
                                const nn::Tensor& grad_features, nn::AdamState& adam);

}  // namespace fmeac::features
