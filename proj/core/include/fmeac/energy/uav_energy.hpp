#pragma once

#include "fmeac/common/vec3.hpp"

namespace fmeac::energy {

// Airframe constants of the quadrotor power model.
struct UavBody {
  double mass = 0.2;               // kg
  double gravity = 9.8;            // m/s^2
  double air_density = 1.225;      // kg/m^3
  double fuselage_area = 0.01;     // m^2
  int propellers = 4;
  double propeller_radius = 0.1;   // m
  double efficiency = 0.8;
  double drag_coefficient = 0.5;
  double hover_threshold = 0.1;    // m/s

  // A_UAV = A_surf + n_prp * pi * R_prp^2
  double total_area() const;
  // c1 = 0.5 * rho * A_UAV * C_d
  double c1() const;
  // c2 = m^2 / (eta * rho * n_prp * pi * R_prp^2)
  double c2() const;
};

// Hover branch below the threshold speed, forward-flight branch at or above it.
double flight_power(Vec3 velocity, const UavBody& body);

struct PowerDraw {
  double compute_w = 20.0;
  double transmit_w = 0.1;  // Pw_ut converted from dBm
  double receive_w = 0.1;   // Pw_ur converted from dBm, treated as a receiver-chain draw
};

struct EnergyLedger {
  double compute_j = 0.0;
  double comm_j = 0.0;
  double flight_j = 0.0;
  double capacity_j = 155520.0;
  double remaining_j = 155520.0;

  double consumed_j() const { return compute_j + comm_j + flight_j; }
  static EnergyLedger full(double capacity_j) { return {0.0, 0.0, 0.0, capacity_j, capacity_j}; }
};

struct AccumulateResult {
  EnergyLedger ledger;
  bool depleted = false;  // remaining energy went negative
};

// Rectangle-rule integration over one step of constant power.
AccumulateResult accumulate(const EnergyLedger& ledger, double dt, double flying_power_w,
                            bool comm_active, bool compute_active, const PowerDraw& draw);

struct MotionResult {
  Vec3 position;
  bool clamped = false;  // some coordinate left the task space and was pulled back
};

// Explicit Euler step clamped to the task space.
MotionResult integrate_motion(Vec3 position, Vec3 velocity, double dt, const Bounds& bounds);

}  // namespace fmeac::energy
