#pragma once

#include <array>
#include <vector>

#include "fmeac/energy/uav_energy.hpp"
#include "fmeac/radio/radio.hpp"

namespace fmeac::agri {

// World, link and reward constants of the agricultural application. Defaults follow the
// paper's environment and hyperparameter tables where they give a value.
struct AgriConfig {
  // task space
  double extent_x = 400.0;
  double extent_y = 400.0;
  double z_min = 30.0;
  double z_max = 150.0;
  double cell_size = 10.0;
  Vec3 v_max{10.0, 10.0, 5.0};  // per-axis speed limits
  double d_end = 30.0;
  double t_f_end = 500.0;  // longest collection phase, s
  double t_r_end = 100.0;  // longest return phase, s
  double dt = 1.0;

  // population
  int n_uav = 4;
  int ws_per_side = 20;  // n_WS = ws_per_side^2 on a regular grid
  double aoi_max = 0.8;
  std::vector<double> t_update_choices{40.0, 50.0, 60.0};
  double ds_min_separation = 100.0;

  // terrain: Gaussian hills and ravines rescaled into [0, terrain_max]
  int terrain_bumps = 10;
  double terrain_max = 20.0;
  double ws_height = 1.0;  // above ground

  // sensor uplink
  double connection_radius = 60.0;  // horizontal
  double f_c_hz = 2.8e9;
  double bandwidth_hz = 2e6;
  double temperature_k = 298.0;
  double pw_wt_dbm = -25.0;
  double g_ws_db = 0.0;
  double packet_bits = 256.0;
  radio::PathLossParams path_loss{};

  // energy
  energy::UavBody body{};
  double battery_j = 155520.0;
  double pw_cmp_w = 20.0;
  double pw_ur_dbm = 30.0;  // receiver draw while a sensor uploads
  bool comm_gating = true;
  double return_margin = 1.2;

  // reward weights as printed: collection, height, boundary, collision, battery waste,
  // separation, energy, homing
  std::array<double, 8> alpha{2.0, 0.5, 0.1, 0.01, 10.0, 0.1, 0.1, 1.0};
  double clearance_target = 30.0;
  double d_safe = 10.0;

  // observation and feature extraction
  int n_near = 8;
  double r_adj = 100.0;

  int n_ws() const { return ws_per_side * ws_per_side; }
  double ws_pitch() const { return extent_x / ws_per_side; }
  double diagonal() const;
  Bounds bounds() const { return {{0.0, 0.0, z_min}, {extent_x, extent_y, z_max}}; }
  energy::PowerDraw power_draw() const;
};

}  // namespace fmeac::agri
