#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fmeac/agri/config.hpp"
#include "fmeac/common/heightfield.hpp"

namespace fmeac::agri {

struct Sensor {
  Vec3 position;
  double t_update = 50.0;      // broadcast period, s
  double phase = 0.0;          // seconds already elapsed in the first broadcast period
  double initial_age = 0.0;    // seconds since the last delivered reading at t = 0

  friend bool operator==(const Sensor&, const Sensor&) = default;
};

struct AgriMap {
  std::uint64_t seed = 0;
  Heightfield terrain;
  std::vector<Sensor> sensors;
  std::vector<Vec3> docks;   // DS_i on the ground, one per UAV
  std::vector<Vec3> starts;  // take-off point of UAV_i above its dock

  friend bool operator==(const AgriMap&, const AgriMap&) = default;
};

// Same seed and config give the same map.
AgriMap generate_map(std::uint64_t seed, const AgriConfig& cfg);

// Text format: header "FMEAC-MAP agri v1", a seed line, then sections [grid], [ws], [ds], [uav].
std::string serialize_map(const AgriMap& map);
AgriMap parse_map(const std::string& text);
void save_map(const AgriMap& map, const std::filesystem::path& path);
AgriMap load_map(const std::filesystem::path& path);

}  // namespace fmeac::agri
