#pragma once

#include <cstddef>
#include <vector>

#include "fmeac/common/rng.hpp"
#include "fmeac/common/vec3.hpp"
#include "fmeac/features/graph.hpp"
#include "fmeac/nn/tensor.hpp"

namespace fmeac::eac {

// What one UAV saw during one step.
struct AgentStep {
  double reward = 0.0;     // r stored in replay
  double secondary = 0.0;  // r-hat stored in replay
  double log_primary = 0.0;    // reward_pri column of the metrics log
  double log_secondary = 0.0;  // reward_sec column of the metrics log
  bool done = false;
  int mode = -1;       // task mode before the step, -1 when the application has none
  int next_mode = -1;  // task mode after the step
};

struct EpisodeSummary {
  double qos_or_aoi = 0.0;
  double completion_time_s = 0.0;
};

// Multi-UAV episodic environment as seen by the trainer. All UAVs share one agent.
class EnvAdapter {
 public:
  virtual ~EnvAdapter() = default;

  virtual std::size_t agent_count() const = 0;
  // Observation width without any environment feature.
  virtual std::size_t obs_dim() const = 0;
  virtual std::vector<double> velocity_bounds() const = 0;
  virtual std::size_t alloc_dim() const { return 0; }
  virtual double alloc_scale() const { return 1.0; }
  // True when the actor reads the environment feature next to its observation.
  virtual bool feature_in_actor() const { return false; }
  virtual std::size_t graph_node_dim() const = 0;
  virtual std::size_t point_dim() const = 0;
  virtual std::size_t point_payload_dim() const = 0;

  // Starts episode `episode`; the map is chosen by the adapter.
  virtual void reset(std::size_t episode) = 0;
  virtual bool agent_active(std::size_t i) const = 0;
  virtual std::vector<double> observe(std::size_t i) const = 0;
  virtual features::GraphSnapshot graph() const = 0;
  virtual nn::Tensor points() const = 0;
  // One action per UAV; actions of inactive UAVs are ignored.
  virtual std::vector<AgentStep> step(const std::vector<std::vector<double>>& actions, Rng& rng) = 0;
  virtual bool episode_done() const = 0;
  virtual EpisodeSummary summary() const = 0;
  virtual std::vector<Vec3> positions() const = 0;

  // Uniform velocity in the bounds and a random allocation on the scaled simplex.
  std::vector<double> random_action(Rng& rng) const;
};

}  // namespace fmeac::eac
