#include "fmeac/energy/uav_energy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fmeac/common/errors.hpp"

namespace fmeac::energy {

double UavBody::total_area() const {
  return fuselage_area + propellers * std::numbers::pi * propeller_radius * propeller_radius;
}

double UavBody::c1() const { return 0.5 * air_density * total_area() * drag_coefficient; }

double UavBody::c2() const {
  return mass * mass /
         (efficiency * air_density * propellers * std::numbers::pi * propeller_radius * propeller_radius);
}

double flight_power(Vec3 velocity, const UavBody& body) {
  const double speed = velocity.norm();
  if (speed < body.hover_threshold) {
    return body.mass * std::pow(body.gravity, 1.5) /
           (std::sqrt(2.0 * body.air_density * body.total_area()) * body.efficiency);
  }
  const double horizontal_sq = velocity.x * velocity.x + velocity.y * velocity.y;
  return body.c1() * speed * speed + body.c2() * horizontal_sq / (speed * speed * speed) +
         body.mass * body.gravity * speed;
}

AccumulateResult accumulate(const EnergyLedger& ledger, double dt, double flying_power_w,
                            bool comm_active, bool compute_active, const PowerDraw& draw) {
  if (!(dt > 0.0)) throw ContractError("accumulate: dt must be positive");
  EnergyLedger next = ledger;
  next.flight_j += flying_power_w * dt;
  if (comm_active) next.comm_j += (draw.transmit_w + draw.receive_w) * dt;
  if (compute_active) next.compute_j += draw.compute_w * dt;
  next.remaining_j = next.capacity_j - next.consumed_j();
  return {next, next.remaining_j < 0.0};
}

MotionResult integrate_motion(Vec3 position, Vec3 velocity, double dt, const Bounds& bounds) {
  if (!(dt > 0.0)) throw ContractError("integrate_motion: dt must be positive");
  const Vec3 raw = position + velocity * dt;
  const Vec3 clamped{std::clamp(raw.x, bounds.lo.x, bounds.hi.x),
                     std::clamp(raw.y, bounds.lo.y, bounds.hi.y),
                     std::clamp(raw.z, bounds.lo.z, bounds.hi.z)};
  return {clamped, !(clamped == raw)};
}

}  // namespace fmeac::energy
