#pragma once

#include <vector>

#include "fmeac/agri/agri_env.hpp"
#include "fmeac/eac/env_adapter.hpp"
#include "fmeac/features/bpn.hpp"
#include "fmeac/urban/urban_env.hpp"

namespace fmeac::harness {

// Episode e runs on maps[e % maps.size()].
class UrbanAdapter : public eac::EnvAdapter {
 public:
  UrbanAdapter(urban::UrbanConfig cfg, std::vector<urban::UrbanMap> maps);

  std::size_t agent_count() const override { return static_cast<std::size_t>(cfg_.n_uav); }
  std::size_t obs_dim() const override { return urban::observation_dim(cfg_, 0); }
  std::vector<double> velocity_bounds() const override { return {cfg_.v_max, cfg_.v_max, cfg_.v_max}; }
  std::size_t alloc_dim() const override { return static_cast<std::size_t>(cfg_.m_links); }
  double alloc_scale() const override { return cfg_.epsilon; }
  bool feature_in_actor() const override { return true; }
  std::size_t graph_node_dim() const override { return urban::kGraphNodeDim; }
  std::size_t point_dim() const override { return urban::kPointDim; }
  std::size_t point_payload_dim() const override { return urban::kPointPayloadDim; }

  void reset(std::size_t episode) override;
  bool agent_active(std::size_t i) const override { return !state_.uavs.at(i).done; }
  std::vector<double> observe(std::size_t i) const override;
  features::GraphSnapshot graph() const override;
  nn::Tensor points() const override;
  std::vector<eac::AgentStep> step(const std::vector<std::vector<double>>& actions, Rng& rng) override;
  bool episode_done() const override { return state_.episode_done(); }
  eac::EpisodeSummary summary() const override;
  std::vector<Vec3> positions() const override;

  const urban::UrbanState& state() const { return state_; }
  const urban::UrbanMap& map() const { return *map_; }

 private:
  urban::UrbanConfig cfg_;
  std::vector<urban::UrbanMap> maps_;
  const urban::UrbanMap* map_ = nullptr;
  urban::UrbanState state_;
  double qos_sum_ = 0.0;
  int steps_ = 0;
};

// The collection/return switch uses the battery prediction network when one is set and the
// scripted homing estimate otherwise.
class AgriAdapter : public eac::EnvAdapter {
 public:
  AgriAdapter(agri::AgriConfig cfg, std::vector<agri::AgriMap> maps);

  // The model must outlive the adapter; nullptr restores the scripted estimate.
  void set_return_model(const features::BpnModel* bpn) { bpn_ = bpn; }

  std::size_t agent_count() const override { return static_cast<std::size_t>(cfg_.n_uav); }
  std::size_t obs_dim() const override { return agri::observation_dim(cfg_); }
  std::vector<double> velocity_bounds() const override { return {cfg_.v_max.x, cfg_.v_max.y, cfg_.v_max.z}; }
  std::size_t graph_node_dim() const override { return agri::kGraphNodeDim; }
  std::size_t point_dim() const override { return agri::kPointDim; }
  std::size_t point_payload_dim() const override { return agri::kPointPayloadDim; }

  void reset(std::size_t episode) override;
  bool agent_active(std::size_t i) const override { return !state_.uavs.at(i).done; }
  std::vector<double> observe(std::size_t i) const override;
  features::GraphSnapshot graph() const override;
  nn::Tensor points() const override;
  std::vector<eac::AgentStep> step(const std::vector<std::vector<double>>& actions, Rng& rng) override;
  bool episode_done() const override { return state_.episode_done(); }
  eac::EpisodeSummary summary() const override;
  std::vector<Vec3> positions() const override;

  const agri::AgriState& state() const { return state_; }
  const agri::AgriMap& map() const { return *map_; }

 private:
  agri::AgriConfig cfg_;
  std::vector<agri::AgriMap> maps_;
  const agri::AgriMap* map_ = nullptr;
  const features::BpnModel* bpn_ = nullptr;
  agri::AgriState state_;
  double aoi_sum_ = 0.0;
  int steps_ = 0;
};

}  // namespace fmeac::harness
