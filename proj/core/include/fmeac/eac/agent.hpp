#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "fmeac/common/rng.hpp"
#include "fmeac/eac/config.hpp"
#include "fmeac/eac/replay.hpp"
#include "fmeac/nn/adam.hpp"
#include "fmeac/nn/checkpoint.hpp"
#include "fmeac/nn/dense_net.hpp"
#include "fmeac/nn/gaussian.hpp"

namespace fmeac::eac {

// Index of a critic in the ensemble.
enum Critic : std::size_t { qp1 = 0, qp2 = 1, qs1 = 2, qs2 = 3 };
inline constexpr std::size_t kCriticCount = 4;
const char* critic_name(std::size_t i);

struct PolicyOutput {
  nn::Tensor action;    // [B, action_dim]: velocity, then the allocation in maxent mode
  nn::Tensor log_prob;  // [B, 1]; zero in deterministic mode
  nn::ForwardPass pass;
  nn::GaussianSample gaussian;  // maxent only
};

struct Targets {
  nn::Tensor primary;    // Y_P [B, 1]
  nn::Tensor secondary;  // Y_S [B, 1]; zero when the secondary critics are off
};

struct CriticLoss {
  double loss = 0.0;
  nn::Gradients grad;  // of the loss; grad.input is [B, critic_input_dim]
};

struct ActorObjective {
  double value = 0.0;
  std::vector<double> grad_params;  // ascent direction of the objective
  nn::Tensor grad_feature;          // d objective / d feature, [B, F]
};

struct UpdateStats {
  std::array<double, kCriticCount> critic_loss{};  // pre-step, zero for unused critics
  double actor_objective = 0.0;
  bool actor_updated = false;
  nn::Tensor grad_feature_critic;  // d (sum of critic losses) / d feature, [B, F]
  nn::Tensor grad_feature_actor;   // d actor objective / d feature, [B, F]; zero if no actor step
};

// Dual-head actor, four critics and four target critics sharing one configuration.
class Agent {
 public:
  Agent(EacConfig cfg, Rng& rng);

  const EacConfig& config() const { return cfg_; }
  const nn::DenseNet& actor() const { return actor_; }
  nn::DenseNet& mutable_actor() { return actor_; }
  const nn::DenseNet& critic(std::size_t i) const { return critics_.at(i); }
  nn::DenseNet& mutable_critic(std::size_t i) { return critics_.at(i); }
  const nn::DenseNet& target(std::size_t i) const { return targets_.at(i); }
  nn::DenseNet& mutable_target(std::size_t i) { return targets_.at(i); }
  // Critics that take part in training: all four, or Q_P1 and Q_P2 without the secondary stream.
  std::size_t active_critics() const { return cfg_.secondary_critics ? 4 : 2; }

  std::size_t critic_updates() const { return critic_updates_; }
  std::size_t actor_updates() const { return actor_updates_; }

  nn::Tensor actor_input(const nn::Tensor& obs, const nn::Tensor& feature) const;
  static nn::Tensor critic_input(const nn::Tensor& obs, const nn::Tensor& action, const nn::Tensor& feature);

  // `noise` is [B, velocity_dim]. In maxent mode it is the standard normal draw of the
  // reparameterized sample; in deterministic mode it is added to the action, which is then
  // clamped to the velocity bounds.
  PolicyOutput policy(const nn::Tensor& obs, const nn::Tensor& feature, const nn::Tensor& noise) const;

  // Noise for the next-state actions inside the targets: N(0, 1) in maxent mode, and the
  // clipped smoothing noise in deterministic mode.
  nn::Tensor target_noise(std::size_t batch, Rng& rng) const;

  // Single-observation action selection. Greedy is the squashed mean (maxent) or pi(o).
  std::vector<double> act(std::span<const double> obs, std::span<const double> feature) const;
  std::vector<double> act_explore(std::span<const double> obs, std::span<const double> feature, Rng& rng) const;

  // Clipped double-Q targets with the next actions drawn from the current policy.
  Targets compute_targets(const Batch& batch, const nn::Tensor& next_noise) const;

  // Row weights of a critic's loss: all ones unless mode_split routes rows by task mode.
  std::vector<double> row_weights(std::size_t critic, const Batch& batch) const;
  // Weighted mean squared error of critic i against y and its gradient.
  CriticLoss critic_loss(std::size_t i, const Batch& batch, const nn::Tensor& y) const;

  // Mean of Q_P1 (+ Q_S1) (- alpha * log pi) over the batch for actions drawn with `noise`.
  ActorObjective actor_objective(const Batch& batch, const nn::Tensor& noise) const;

  // One round: targets, one Adam step per active critic, an actor step when the delay
  // counter allows it, then a soft update of the targets. Throws NumericError on a
  // non-finite loss before any parameter changes.
  UpdateStats update(const Batch& batch, Rng& rng);

  // phi' <- xi * phi + (1 - xi) * phi' for every target.
  void soft_update();
  void soft_update(double xi);

  nn::Checkpoint to_checkpoint() const;
  // Restores networks and counters saved by to_checkpoint(); the configuration must match.
  void load_checkpoint(const nn::Checkpoint& ck);

 private:
  EacConfig cfg_;
  nn::DenseNet actor_;
  std::array<nn::DenseNet, kCriticCount> critics_;
  std::array<nn::DenseNet, kCriticCount> targets_;
  nn::AdamState actor_adam_;
  std::array<nn::AdamState, kCriticCount> critic_adam_;
  std::size_t critic_updates_ = 0;
  std::size_t actor_updates_ = 0;
};

}  // namespace fmeac::eac
