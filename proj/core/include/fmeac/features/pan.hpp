#pragma once

#include <span>
#include <vector>

#include "fmeac/common/rng.hpp"
#include "fmeac/nn/adam.hpp"
#include "fmeac/nn/checkpoint.hpp"
#include "fmeac/nn/dense_net.hpp"

namespace fmeac::features {

// A point array is an [n, point_dim] tensor whose first three columns are the point position
// and whose remaining `payload_dim` columns are the point's payload.
struct PanConfig {
  std::size_t point_dim = 7;
  std::size_t payload_dim = 4;
  std::size_t hidden = 64;
  std::size_t feature_dim = 32;
  std::size_t head_hidden = 64;
  std::size_t max_points = 512;
  double beta = 0.01;
};

struct PanTrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 512;
  double learning_rate = 1e-4;
};

// Permutation-invariant point encoder: a shared per-point MLP and a mean over the points.
// During pretraining a sequential head reconstructs each point's payload from the pooled
// code and the point's own position; the head is discarded when the model is frozen.
class PanModel {
 public:
  struct LossGradient {
    double loss = 0.0;
    std::vector<double> encoder;
    std::vector<double> head;
  };

  PanModel() = default;
  PanModel(PanConfig cfg, Rng& rng);

  const PanConfig& config() const { return cfg_; }
  std::size_t feature_dim() const { return cfg_.feature_dim; }

  // Mean of the encoder outputs over at most max_points points, [1, F]. An empty array maps
  // to the encoding of a single all-zero point.
  nn::Tensor pooled(const nn::Tensor& points) const;
  // beta * pooled(points)
  nn::Tensor feature(const nn::Tensor& points) const;

  // Mean squared payload reconstruction error averaged over the arrays.
  double reconstruction_loss(std::span<const nn::Tensor* const> arrays) const;
  LossGradient loss_and_gradient(std::span<const nn::Tensor* const> arrays) const;
  // One Adam step on encoder and head; returns the pre-step loss.
  double train_step(std::span<const nn::Tensor* const> arrays, nn::AdamState& encoder_adam,
                    nn::AdamState& head_adam);

  // Drops the head; later training throws ContractError.
  void freeze();
  bool frozen() const { return frozen_; }

  const nn::DenseNet& encoder() const { return encoder_; }
  nn::DenseNet& mutable_encoder();
  const nn::DenseNet& head() const { return head_; }
  nn::DenseNet& mutable_head();

  nn::Checkpoint to_checkpoint() const;
  static PanModel from_checkpoint(const nn::Checkpoint& ck);

 private:
  nn::Tensor truncated(const nn::Tensor& points) const;

  PanConfig cfg_;
  nn::DenseNet encoder_;
  nn::DenseNet head_;
  bool frozen_ = false;
};

struct PanPretrainResult {
  PanModel model;
  // loss_curve[0] is the loss before the first update, then one entry per epoch.
  std::vector<double> loss_curve;
};

// Trains encoder and head on the dataset for cfg.epochs epochs of shuffled mini-batches,
// then freezes the model. Throws ContractError for an empty dataset.
PanPretrainResult pan_pretrain(const std::vector<nn::Tensor>& dataset, const PanConfig& cfg,
                               const PanTrainConfig& train, Rng& rng);

}  // namespace fmeac::features
