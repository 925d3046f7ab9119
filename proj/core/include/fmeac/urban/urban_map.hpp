#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fmeac/common/heightfield.hpp"
#include "fmeac/common/vec3.hpp"
#include "fmeac/urban/config.hpp"

namespace fmeac::urban {

inline constexpr int kSectorsPerBs = 3;

struct BaseStation {
  Vec3 position;
  double azimuth_offset_deg = 0.0;  // boresight of sector s is offset + 120 s

  double sector_azimuth_deg(int sector) const { return azimuth_offset_deg + 120.0 * sector; }
  friend bool operator==(const BaseStation&, const BaseStation&) = default;
};

struct GroundDevice {
  Vec3 position;
  double request_rate = 0.0;
  friend bool operator==(const GroundDevice&, const GroundDevice&) = default;
};

// Pedestrian walking a polyline at constant speed, parked at its last waypoint.
struct PedestrianTrace {
  double request_rate = 0.0;
  std::vector<Vec3> waypoints;

  Vec3 position_at(double t, double speed) const;
  friend bool operator==(const PedestrianTrace&, const PedestrianTrace&) = default;
};

struct UavRoute {
  Vec3 start;
  Vec3 destination;
  friend bool operator==(const UavRoute&, const UavRoute&) = default;
};

struct UrbanMap {
  std::uint64_t seed = 0;
  Heightfield grid;
  std::vector<BaseStation> base_stations;
  std::vector<GroundDevice> ground_devices;
  std::vector<PedestrianTrace> pedestrians;
  std::vector<UavRoute> uavs;

  std::size_t device_count() const { return ground_devices.size() + pedestrians.size(); }
  friend bool operator==(const UrbanMap&, const UrbanMap&) = default;
};

// Manhattan blocks of random height, sectorized base stations, static ground devices,
// random-waypoint pedestrians and start/destination pairs. Deterministic in (seed, cfg).
UrbanMap generate_map(std::uint64_t seed, const UrbanConfig& cfg);

// Text format:
//   FMEAC-MAP urban v1
//   seed <u64>
//   [grid]
//   <nx> <ny> <cell>
//   <ny rows of nx heights, row iy = 0 first>
//   [bs]         x y z azimuth_offset_deg
//   [gd]         x y z request_rate
//   [pd_trace]   request_rate n x1 y1 z1 ... xn yn zn
//   [uav]        sx sy sz dx dy dz
// Numbers use the shortest representation that round-trips exactly.
std::string serialize_map(const UrbanMap& map);
UrbanMap parse_map(const std::string& text);
void save_map(const UrbanMap& map, const std::filesystem::path& path);
UrbanMap load_map(const std::filesystem::path& path);

}  // namespace fmeac::urban
