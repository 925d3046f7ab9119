#pragma once

#include <span>
#include <vector>

#include "fmeac/common/rng.hpp"
#include "fmeac/nn/adam.hpp"
#include "fmeac/nn/checkpoint.hpp"
#include "fmeac/nn/dense_net.hpp"

namespace fmeac::features {

struct BpnConfig {
  std::size_t input_dim = 5;
  std::vector<std::size_t> hidden{64, 64};
};

struct BpnTrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 128;
  double learning_rate = 1e-5;
  double validation_fraction = 0.2;
};

// One labelled task-transition state: features of the state at which return-to-home starts
// and the energy (J) actually spent getting back to the docking station.
struct BpnSample {
  std::vector<double> state;
  double energy_j = 0.0;
};

// Dense regressor of energy-to-return. Labels are trained in units of `label_scale` joules.
class BpnModel {
 public:
  struct LossGradient {
    double loss = 0.0;
    std::vector<double> params;
  };

  BpnModel() = default;
  BpnModel(BpnConfig cfg, Rng& rng, double label_scale = 1.0);

  const BpnConfig& config() const { return cfg_; }
  double label_scale() const { return label_scale_; }

  double predict(std::span<const double> state) const;
  // [batch, input_dim] -> [batch, 1], in joules
  nn::Tensor predict_batch(const nn::Tensor& states) const;

  // Mean squared error in label_scale units.
  LossGradient loss_and_gradient(const nn::Tensor& states, std::span<const double> energy_j) const;
  double train_step(const nn::Tensor& states, std::span<const double> energy_j, nn::AdamState& adam);

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  const nn::DenseNet& net() const { return net_; }
  nn::DenseNet& mutable_net();

  nn::Checkpoint to_checkpoint() const;
  static BpnModel from_checkpoint(const nn::Checkpoint& ck);

 private:
  BpnConfig cfg_;
  nn::DenseNet net_;
  double label_scale_ = 1.0;
  bool frozen_ = false;
};

struct BpnPretrainResult {
  BpnModel model;
  std::vector<double> loss_curve;  // training MSE before training, then per epoch
  double validation_rmse_j = 0.0;
  double mean_label_j = 0.0;
  std::size_t train_count = 0;
  std::size_t validation_count = 0;
};

// Shuffles the samples, holds out a validation split, trains and freezes.
BpnPretrainResult bpn_pretrain(std::vector<BpnSample> samples, const BpnConfig& cfg,
                               const BpnTrainConfig& train, Rng& rng);

// The task-transition rule: return when remaining energy falls below margin x predicted need.
inline bool should_return(double remaining_j, double predicted_j, double margin = 1.2) {
  return remaining_j < margin * predicted_j;
}

}  // namespace fmeac::features
