#pragma once

#include <cstddef>
#include <vector>

namespace fmeac::eac {

// maxent: stochastic tanh-Gaussian velocity plus a softmax power split, for concurrent tasks.
// deterministic: tanh-scaled velocity with delayed policy updates, for sequential tasks.
enum class ActorMode { maxent, deterministic };

struct EacConfig {
  ActorMode mode = ActorMode::deterministic;
  bool secondary_critics = true;

  std::size_t obs_dim = 0;
  std::vector<double> velocity_bounds;  // one per velocity dimension
  std::size_t alloc_dim = 0;            // softmax entries (maxent only)
  double alloc_scale = 1.0;             // the softmax output is scaled to sum to this
  std::size_t feature_dim = 0;          // 0 disables the environment feature input
  bool feature_in_actor = false;        // the actor also reads the feature, after the observation

  // Sequential tasks: Q_P learns from COL transitions and Q_S from RTH transitions. A COL
  // transition that hands over to RTH ends the primary stream's bootstrap.
  bool mode_split = false;

  std::vector<std::size_t> actor_hidden{128, 128, 128};
  std::vector<std::size_t> critic_hidden{128, 128, 128};

  double gamma = 0.99;
  double lr_actor = 1e-4;
  double lr_critic_p = 1e-5;
  double lr_critic_s = 1e-5;
  double xi = 0.005;

  // max-entropy extras
  double temperature = 0.2;
  bool entropy_in_target = true;

  // deterministic extras, as fractions of each velocity bound
  int policy_delay = 2;
  double target_noise = 0.2;
  double target_noise_clip = 0.5;
  double exploration_noise = 0.1;

  std::size_t batch_size = 128;
  std::size_t buffer_capacity = std::size_t{1} << 16;
  double secondary_scale = 1.0;  // multiplies the secondary reward before it enters Y_S

  std::size_t velocity_dim() const { return velocity_bounds.size(); }
  std::size_t action_dim() const { return velocity_dim() + (mode == ActorMode::maxent ? alloc_dim : 0); }
  std::size_t actor_input_dim() const { return obs_dim + (feature_in_actor ? feature_dim : 0); }
  std::size_t critic_input_dim() const { return obs_dim + action_dim() + feature_dim; }
};

}  // namespace fmeac::eac
