#pragma once

#include <array>

#include "fmeac/energy/uav_energy.hpp"
#include "fmeac/radio/radio.hpp"

namespace fmeac::urban {

// World, link and reward constants of the urban application. Defaults follow the paper's
// environment table where it gives a value; the rest are documented knobs.
struct UrbanConfig {
  // task space
  double extent_x = 800.0;
  double extent_y = 800.0;
  double z_min = 180.0;
  double z_max = 220.0;
  double cell_size = 10.0;
  double v_max = 8.0;
  double d_end = 50.0;
  int k_end = 100;
  double dt = 1.0;

  // population (drawn uniformly per map within the ranges)
  int n_uav = 4;
  int n_bs_min = 3;
  int n_bs_max = 4;
  int n_gd_min = 20;
  int n_gd_max = 50;
  int n_pd_min = 0;
  int n_pd_max = 50;
  double min_route_length = 300.0;  // start/destination separation

  // procedural city
  double block_pitch = 100.0;
  double street_width = 20.0;
  double building_probability = 0.8;
  double building_h_min = 10.0;
  double building_h_max = 120.0;
  double bs_height = 25.0;
  double device_height = 1.5;
  double pd_speed = 1.4;
  double request_rate_min = 0.1;
  double request_rate_max = 1.0;

  // links
  int m_links = 3;
  double epsilon = 0.8;
  radio::AntennaConfig antenna{};
  radio::PathLossParams path_loss{};
  double f_iot_hz = 5.9e9;
  double bandwidth_hz = 20e6;
  double temperature_k = 298.0;
  double pw_bt_dbm = 46.0;
  double pw_it_dbm = 20.0;
  double g_iot_db = 0.0;
  double pw_ur_dbm = 20.0;
  double pw_ut_dbm = 20.0;
  double sinr_db_clip_lo = -30.0;
  double sinr_db_clip_hi = 60.0;

  // energy
  energy::UavBody body{};
  double battery_j = 155520.0;
  double pw_cmp_w = 20.0;
  bool comm_gating = true;

  // reward: progress, height, SINR, energy, QoS, penalty, separation
  std::array<double, 7> alpha{1.0, 0.75, 2.5, 0.1, 0.75, 10.0, 0.1};
  bool sec_in_pri = true;
  double d_safe = 10.0;

  // feature extraction
  double r_adj = 200.0;

  double diagonal() const;
  Bounds bounds() const { return {{0.0, 0.0, z_min}, {extent_x, extent_y, z_max}}; }
  energy::PowerDraw power_draw() const;
};

}  // namespace fmeac::urban
