#pragma once

#include <span>
#include <vector>

#include "fmeac/features/graph.hpp"
#include "fmeac/nn/tensor.hpp"
#include "fmeac/urban/urban_map.hpp"

namespace fmeac::urban {

struct UrbanAction {
  Vec3 velocity;
  std::vector<double> delta;  // power allocation per link slot
};

struct IotLink {
  int device = -1;  // index into UrbanState::devices
  double path_loss_db = 0.0;
  double delta = 0.0;
  double sinr = 0.0;  // linear
};

struct UrbanUav {
  Vec3 position;
  Vec3 velocity;
  energy::EnergyLedger ledger;
  bool done = false;
  bool arrived = false;
  bool depleted = false;
  int arrival_step = -1;  // step index k at which d_D first fell below d_end
  std::vector<IotLink> links;
  double sinr_ub_db = 0.0;     // clipped serving-cell SINR
  double qos = 0.0;            // Q_S at the current step
  double height_dev_prev = 0.0;  // h_d one step back
};

struct UrbanState {
  std::vector<UrbanUav> uavs;
  std::vector<Vec3> devices;  // ground devices first, then pedestrians
  int k = 0;

  bool episode_done() const;
};

struct UrbanRewardBreakdown {
  double progress = 0.0;
  double height = 0.0;
  double sinr = 0.0;
  double energy = 0.0;
  double qos = 0.0;
  double penalty = 0.0;
  double separation = 0.0;
  double total = 0.0;
  double secondary = 0.0;  // Q_S after the step
};

struct UrbanStepResult {
  std::vector<UrbanRewardBreakdown> rewards;  // one per UAV, zero for inactive UAVs
  std::vector<bool> active;                   // UAV moved during this step
  std::vector<bool> done;                     // UAV finished at the end of this step
  bool episode_done = false;
};

std::vector<Vec3> device_positions(const UrbanMap& map, const UrbanConfig& cfg, double t);

// Line of sight at cell resolution.
bool los_test(const UrbanMap& map, Vec3 a, Vec3 b);

// Association metric of device `p` at the UAV: Pw_it + G_IoT - PL, in dB.
double iot_link_metric_db(const UrbanMap& map, const UrbanConfig& cfg, Vec3 uav, Vec3 device, double* path_loss_db = nullptr);

// The m devices with the highest association metric, best first; ties go to the lower index.
std::vector<int> associate_iot(const UrbanMap& map, const UrbanConfig& cfg, std::span<const Vec3> devices, Vec3 uav);

// Serving base-station sector SINR (linear) at the UAV, unclipped.
double serving_sinr(const UrbanMap& map, const UrbanConfig& cfg, Vec3 uav);
double clip_sinr_db(double sinr_linear, const UrbanConfig& cfg);

// Non-negative allocation with sum <= epsilon: negatives become 0, an excess sum is rescaled.
std::vector<double> shape_delta(std::span<const double> raw, std::size_t m, double epsilon);

// SINR per connected link given the allocation; unconnected devices interfere at delta = 1.
std::vector<IotLink> evaluate_links(const UrbanMap& map, const UrbanConfig& cfg, std::span<const Vec3> devices,
                                    Vec3 uav, std::span<const int> connected, std::span<const double> delta);

// Q_S = sum over connected links of log2(1 + SINR).
double qos(const UrbanUav& uav);

UrbanState reset(const UrbanMap& map, const UrbanConfig& cfg);

// Advances every unfinished UAV by one step. Throws ContractError unless there is one action
// per UAV with m allocation entries.
UrbanStepResult step(UrbanState& state, const UrbanMap& map, const UrbanConfig& cfg,
                     std::span<const UrbanAction> actions);

// Distance to the nearest other UAV (diagonal of the task space when there is none).
double nearest_uav_distance(const UrbanState& state, const UrbanConfig& cfg, std::size_t i, Vec3* relative = nullptr);

std::size_t observation_dim(const UrbanConfig& cfg, std::size_t feature_dim);
std::vector<double> observe(const UrbanState& state, const UrbanMap& map, const UrbanConfig& cfg, std::size_t i,
                            std::span<const double> f_env);

// Graph over UAVs, base stations, ground devices and pedestrians. Node features: type one-hot
// (4), normalized position (3), battery fraction for UAVs and 0 otherwise.
inline constexpr std::size_t kGraphNodeDim = 8;
features::GraphSnapshot graph_snapshot(const UrbanState& state, const UrbanMap& map, const UrbanConfig& cfg);
features::GraphInput build_graph(const UrbanState& state, const UrbanMap& map, const UrbanConfig& cfg);

// One point per device: normalized position (3), pedestrian flag, request rate.
inline constexpr std::size_t kPointDim = 5;
inline constexpr std::size_t kPointPayloadDim = 2;
nn::Tensor point_array(const UrbanMap& map, const UrbanConfig& cfg, std::span<const Vec3> devices);

// Full speed toward the destination with an even power split.
UrbanAction straight_line_action(const UrbanState& state, const UrbanMap& map, const UrbanConfig& cfg, std::size_t i);

}  // namespace fmeac::urban
