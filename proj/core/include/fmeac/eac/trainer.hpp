#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "fmeac/eac/agent.hpp"
#include "fmeac/eac/env_adapter.hpp"
#include "fmeac/eac/feature_model.hpp"
#include "fmeac/eac/replay.hpp"

namespace fmeac::eac {

struct TrainConfig {
  std::size_t episodes = 300;
  std::size_t max_steps = 100000;     // per episode, a guard against endless episodes
  std::size_t warmup_steps = 500;     // environment steps with uniform random actions
  std::size_t updates_per_step = 1;   // 0 turns training into a pure rollout
  bool record_timing = false;         // fill wall_ms; off keeps the log bit-reproducible
  std::filesystem::path abort_checkpoint;  // last-good agent is written here on a numeric failure
};

// One row of the metrics log.
struct EpisodeLog {
  std::size_t episode = 0;
  std::size_t steps = 0;
  double reward_pri = 0.0;  // mean over UAVs of the summed primary reward
  double reward_sec = 0.0;
  std::array<double, kCriticCount> critic_loss{};  // mean over the episode's updates
  double loss_actor = 0.0;                           // mean negated actor objective
  double qos_or_aoi = 0.0;
  double completion_time_s = 0.0;
  double wall_ms = 0.0;
};

// UAV positions after each step of one episode: positions[step][uav].
struct Trajectory {
  std::size_t episode = 0;
  std::vector<std::vector<Vec3>> positions;
};

struct TrainResult {
  std::vector<EpisodeLog> log;
  std::size_t env_steps = 0;
  std::size_t updates = 0;
};

// Interact, store, sample and update for cfg.episodes episodes. An adaptive feature model
// is trained alongside the agent from the critic and actor losses. On a non-finite loss the
// agent is saved to cfg.abort_checkpoint (when set) and NumericError propagates.
TrainResult train(Agent& agent, EnvAdapter& env, FeatureModel& features, ReplayBuffer& buffer,
                  const TrainConfig& cfg, Rng& rng);

// One sampled update: rebuilds graph features for an adaptive model, updates the agent and
// then the feature model.
UpdateStats train_step(Agent& agent, FeatureModel& features, const ReplayBuffer& buffer, Rng& rng);

struct EvalResult {
  std::vector<EpisodeLog> log;  // losses are zero
  std::vector<Trajectory> trajectories;
  double online_ms_per_action = 0.0;  // feature extraction plus actor forward
  std::size_t actions = 0;
};

// Greedy rollouts of episodes [first_episode, first_episode + episodes).
EvalResult evaluate(const Agent& agent, EnvAdapter& env, const FeatureModel& features, std::size_t first_episode,
                    std::size_t episodes, Rng& rng);

EacConfig agent_config_for(const EnvAdapter& env, const FeatureModel& features, EacConfig base);

std::string metrics_csv_header();
std::string metrics_csv(const std::vector<EpisodeLog>& log);
std::vector<EpisodeLog> parse_metrics_csv(const std::string& text);
// One row per step: step, then x, y, z of every UAV.
std::string trajectory_csv(const Trajectory& trajectory);

}  // namespace fmeac::eac
