#pragma once

#include <functional>
#include <span>
#include <vector>

#include "fmeac/agri/agri_map.hpp"
#include "fmeac/common/rng.hpp"
#include "fmeac/features/graph.hpp"
#include "fmeac/nn/tensor.hpp"

namespace fmeac::agri {

enum class Mode { col, rth };

struct WsState {
  double aoi = 0.0;              // normalized, in [0, aoi_max]
  double age_s = 0.0;            // seconds since the last delivered reading
  double since_broadcast = 0.0;  // seconds into the current broadcast period
  bool pending = false;          // a connection request is waiting for a UAV

  friend bool operator==(const WsState&, const WsState&) = default;
};

struct AgriUav {
  Vec3 position;
  Vec3 velocity;
  energy::EnergyLedger ledger;
  Mode mode = Mode::col;
  double mode_time = 0.0;  // seconds spent in the current mode
  int switch_step = -1;    // step index at which RTH began
  bool done = false;
  bool arrived = false;
  bool depleted = false;
};

struct AgriState {
  std::vector<AgriUav> uavs;
  std::vector<WsState> sensors;
  int k = 0;

  bool episode_done() const;
  double mean_aoi() const;
};

// AoI from elapsed time: min(age / T, 1) * aoi_max. Computing it from the age keeps the
// cap exact after any number of ticks.
double aoi_from_age(double age_s, double t_update, double aoi_max);

// Ages the reading by dt and fires a connection request at the end of each broadcast period.
WsState aoi_tick(const WsState& ws, double dt, double t_update, double aoi_max);

// Uplink SINR (linear) of a sensor at the UAV with other sensors uploading concurrently.
double uplink_sinr(const AgriMap& map, const AgriConfig& cfg, Vec3 sensor, Vec3 uav, std::span<const Vec3> interferers);
double uplink_received_w(const AgriMap& map, const AgriConfig& cfg, Vec3 sensor, Vec3 uav);
// BPSK packet loss for the configured packet length.
double uplink_plr(double sinr, const AgriConfig& cfg);

// One delivery attempt. Success (probability 1 - plr) resets the reading; either way the
// request is consumed and the sensor waits for its next broadcast.
bool transmit(WsState& ws, double plr, Rng& rng);

// Returns the energy (J) predicted to fly home from the given return-state features.
using ReturnPredictor = std::function<double(std::span<const double>)>;

struct AgriRewardBreakdown {
  Mode mode = Mode::col;
  int collected = 0;
  double collection = 0.0;
  double height = 0.0;
  double boundary = 0.0;
  double collision = 0.0;
  double battery = 0.0;
  double separation = 0.0;
  double energy = 0.0;
  double homing = 0.0;
  double total = 0.0;
};

struct AgriStepResult {
  std::vector<AgriRewardBreakdown> rewards;  // zero for inactive UAVs
  std::vector<bool> active;
  std::vector<bool> done;
  bool episode_done = false;
  double mean_aoi = 0.0;  // over all sensors after this step's deliveries
};

AgriState reset(const AgriMap& map, const AgriConfig& cfg);

// Advances every unfinished UAV by one step. Velocities are clipped per axis to v_max.
// Without a predictor the switch to RTH uses the scripted homing energy.
// Throws ContractError unless there is one finite action per UAV.
AgriStepResult step(AgriState& state, const AgriMap& map, const AgriConfig& cfg, std::span<const Vec3> actions,
                    Rng& rng, const ReturnPredictor& predictor = {});

// |altitude above terrain - clearance_target|
double height_deviation(const AgriMap& map, const AgriConfig& cfg, Vec3 p);
double nearest_uav_distance(const AgriState& state, const AgriConfig& cfg, std::size_t i, Vec3* relative = nullptr);
double dock_distance(const AgriMap& map, const AgriState& state, std::size_t i);

// Indices of the n_near sensors closest to p horizontally, nearest first, ties to the lower index.
std::vector<std::size_t> nearest_sensors(const AgriMap& map, Vec3 p, std::size_t count);

std::size_t col_observation_dim(const AgriConfig& cfg);
std::size_t rth_observation_dim(const AgriConfig& cfg);
// Agent input: the RTH layout (zeros where COL has no entry) followed by a mode flag.
std::size_t observation_dim(const AgriConfig& cfg);
std::vector<double> observe_col(const AgriState& state, const AgriMap& map, const AgriConfig& cfg, std::size_t i);
std::vector<double> observe_rth(const AgriState& state, const AgriMap& map, const AgriConfig& cfg, std::size_t i);
std::vector<double> observe(const AgriState& state, const AgriMap& map, const AgriConfig& cfg, std::size_t i);

// Full speed along the straight line to the point above the dock at the lowest allowed altitude.
Vec3 homing_action(const AgriMap& map, const AgriConfig& cfg, Vec3 position, std::size_t i);
// Energy the homing controller spends from `position` until it is within d_end of dock i,
// counting at least one step.
double scripted_return_energy(const AgriMap& map, const AgriConfig& cfg, Vec3 position, std::size_t i);

// Inputs of the battery prediction network: offset to the dock (3, normalized), horizontal
// distance to the dock and altitude within the task space.
inline constexpr std::size_t kReturnStateDim = 5;
std::vector<double> return_state(const AgriMap& map, const AgriConfig& cfg, Vec3 position, std::size_t i);

// Graph over UAVs and sensors. Node features: type one-hot (2), normalized position (3),
// battery fraction for UAVs and AoI for sensors.
inline constexpr std::size_t kGraphNodeDim = 6;
features::GraphSnapshot graph_snapshot(const AgriState& state, const AgriMap& map, const AgriConfig& cfg);
features::GraphInput build_graph(const AgriState& state, const AgriMap& map, const AgriConfig& cfg);

// One point per sensor: normalized position (3), update period / 60 s and AoI / aoi_max.
inline constexpr std::size_t kPointDim = 5;
inline constexpr std::size_t kPointPayloadDim = 2;
nn::Tensor point_array(const AgriState& state, const AgriMap& map, const AgriConfig& cfg);

}  // namespace fmeac::agri
