#include "fmeac/urban/urban_map.hpp"

#include <algorithm>
#include <cmath>

#include "fmeac/common/errors.hpp"
#include "fmeac/common/rng.hpp"
#include "fmeac/common/text_io.hpp"
#include "../common/map_text.hpp"

namespace fmeac::urban {

double UrbanConfig::diagonal() const {
  return std::sqrt(extent_x * extent_x + extent_y * extent_y + (z_max - z_min) * (z_max - z_min));
}

energy::PowerDraw UrbanConfig::power_draw() const {
  return {pw_cmp_w, radio::dbm_to_watt(pw_ut_dbm), radio::dbm_to_watt(pw_ur_dbm)};
}

Vec3 PedestrianTrace::position_at(double t, double speed) const {
  if (waypoints.empty()) return {};
  double remaining = std::max(t, 0.0) * speed;
  for (std::size_t i = 0; i + 1 < waypoints.size(); ++i) {
    const Vec3 seg = waypoints[i + 1] - waypoints[i];
    const double len = seg.norm();
    if (remaining <= len) return len > 0.0 ? waypoints[i] + seg * (remaining / len) : waypoints[i];
    remaining -= len;
  }
  return waypoints.back();
}

namespace {

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>{lo, hi}(rng); }

Vec3 ground_point(Rng& rng, const UrbanConfig& cfg, double z) {
  return {uniform(rng, 0.0, cfg.extent_x), uniform(rng, 0.0, cfg.extent_y), z};
}

}  // namespace

UrbanMap generate_map(std::uint64_t seed, const UrbanConfig& cfg) {
  if (cfg.n_bs_min < 1 || cfg.n_bs_max < cfg.n_bs_min || cfg.n_gd_min < 0 || cfg.n_gd_max < cfg.n_gd_min ||
      cfg.n_pd_min < 0 || cfg.n_pd_max < cfg.n_pd_min || cfg.n_uav < 1) {
    throw ContractError("generate_map: invalid entity count ranges");
  }
  Rng rng = make_rng(derive_seed(seed, 1));
  UrbanMap map;
  map.seed = seed;

  const auto nx = static_cast<std::size_t>(std::ceil(cfg.extent_x / cfg.cell_size));
  const auto ny = static_cast<std::size_t>(std::ceil(cfg.extent_y / cfg.cell_size));
  map.grid = Heightfield(nx, ny, cfg.cell_size, 0.0);
  const double half_street = cfg.street_width / 2.0;
  for (double bx = 0.0; bx < cfg.extent_x; bx += cfg.block_pitch) {
    for (double by = 0.0; by < cfg.extent_y; by += cfg.block_pitch) {
      if (uniform(rng, 0.0, 1.0) >= cfg.building_probability) continue;
      const double h = uniform(rng, cfg.building_h_min, cfg.building_h_max);
      for (std::size_t ix = 0; ix < nx; ++ix) {
        const double cx = (static_cast<double>(ix) + 0.5) * cfg.cell_size;
        if (cx < bx + half_street || cx >= bx + cfg.block_pitch - half_street) continue;
        for (std::size_t iy = 0; iy < ny; ++iy) {
          const double cy = (static_cast<double>(iy) + 0.5) * cfg.cell_size;
          if (cy < by + half_street || cy >= by + cfg.block_pitch - half_street) continue;
          map.grid.at(ix, iy) = h;
        }
      }
    }
  }

  const int n_bs = uniform_int(rng, cfg.n_bs_min, cfg.n_bs_max);
  for (int i = 0; i < n_bs; ++i) {
    map.base_stations.push_back({ground_point(rng, cfg, cfg.bs_height), uniform(rng, 0.0, 120.0)});
  }
  const int n_gd = uniform_int(rng, cfg.n_gd_min, cfg.n_gd_max);
  for (int i = 0; i < n_gd; ++i) {
    const Vec3 p = ground_point(rng, cfg, cfg.device_height);
    map.ground_devices.push_back({p, uniform(rng, cfg.request_rate_min, cfg.request_rate_max)});
  }
  const int n_pd = uniform_int(rng, cfg.n_pd_min, cfg.n_pd_max);
  const double walk = cfg.pd_speed * cfg.k_end * cfg.dt;
  for (int i = 0; i < n_pd; ++i) {
    PedestrianTrace pd;
    pd.request_rate = uniform(rng, cfg.request_rate_min, cfg.request_rate_max);
    pd.waypoints.push_back(ground_point(rng, cfg, cfg.device_height));
    double length = 0.0;
    while (length <= walk) {
      const Vec3 next = ground_point(rng, cfg, cfg.device_height);
      length += distance(pd.waypoints.back(), next);
      pd.waypoints.push_back(next);
    }
    map.pedestrians.push_back(std::move(pd));
  }

  const double min_route = std::min(cfg.min_route_length, 0.7 * std::min(cfg.extent_x, cfg.extent_y));
  for (int i = 0; i < cfg.n_uav; ++i) {
    UavRoute r;
    r.start = ground_point(rng, cfg, uniform(rng, cfg.z_min, cfg.z_max));
    do {
      r.destination = ground_point(rng, cfg, uniform(rng, cfg.z_min, cfg.z_max));
    } while ((r.destination - r.start).horizontal_norm() < min_route);
    map.uavs.push_back(r);
  }
  return map;
}

using namespace map_text;

std::string serialize_map(const UrbanMap& map) {
  std::ostringstream os;
  os << "FMEAC-MAP urban v1\n";
  os << "seed " << map.seed << '\n';
  os << "[grid]\n";
  os << map.grid.nx() << ' ' << map.grid.ny() << ' ' << format_double(map.grid.cell_size()) << '\n';
  for (std::size_t iy = 0; iy < map.grid.ny(); ++iy) {
    for (std::size_t ix = 0; ix < map.grid.nx(); ++ix) {
      if (ix) os << ' ';
      os << format_double(map.grid.at(ix, iy));
    }
    os << '\n';
  }
  os << "[bs]\n";
  for (const auto& b : map.base_stations) {
    put(os, {b.position.x, b.position.y, b.position.z, b.azimuth_offset_deg});
  }
  os << "[gd]\n";
  for (const auto& g : map.ground_devices) put(os, {g.position.x, g.position.y, g.position.z, g.request_rate});
  os << "[pd_trace]\n";
  for (const auto& p : map.pedestrians) {
    os << format_double(p.request_rate) << ' ' << p.waypoints.size();
    for (const auto& w : p.waypoints) os << ' ' << format_double(w.x) << ' ' << format_double(w.y) << ' ' << format_double(w.z);
    os << '\n';
  }
  os << "[uav]\n";
  for (const auto& u : map.uavs) {
    put(os, {u.start.x, u.start.y, u.start.z, u.destination.x, u.destination.y, u.destination.z});
  }
  return os.str();
}

UrbanMap parse_map(const std::string& text) {
  SectionReader r = read_lines(text);
  if (r.done() || r.next() != "FMEAC-MAP urban v1") throw ContractError("not an urban v1 map file");
  UrbanMap map;
  {
    const auto tok = split_tokens(r.next());
    if (tok.size() != 2 || tok[0] != "seed") throw ContractError("map file: missing seed line");
    map.seed = static_cast<std::uint64_t>(std::stoull(std::string(tok[1])));
  }
  expect_section(r, "[grid]");
  const auto dims = numbers(r.next(), 3);
  const auto nx = static_cast<std::size_t>(dims[0]);
  const auto ny = static_cast<std::size_t>(dims[1]);
  map.grid = Heightfield(nx, ny, dims[2]);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    const auto row = numbers(r.next(), nx);
    for (std::size_t ix = 0; ix < nx; ++ix) map.grid.at(ix, iy) = row[ix];
  }
  expect_section(r, "[bs]");
  while (!r.at_section()) {
    const auto v = numbers(r.next(), 4);
    map.base_stations.push_back({{v[0], v[1], v[2]}, v[3]});
  }
  expect_section(r, "[gd]");
  while (!r.at_section()) {
    const auto v = numbers(r.next(), 4);
    map.ground_devices.push_back({{v[0], v[1], v[2]}, v[3]});
  }
  expect_section(r, "[pd_trace]");
  while (!r.at_section()) {
    const auto v = numbers(r.next(), 0);
    if (v.size() < 2) throw ContractError("map file: short pd_trace line");
    const auto n = static_cast<std::size_t>(v[1]);
    if (v.size() != 2 + 3 * n) throw ContractError("map file: pd_trace waypoint count mismatch");
    PedestrianTrace p;
    p.request_rate = v[0];
    for (std::size_t k = 0; k < n; ++k) p.waypoints.push_back({v[2 + 3 * k], v[3 + 3 * k], v[4 + 3 * k]});
    map.pedestrians.push_back(std::move(p));
  }
  expect_section(r, "[uav]");
  while (!r.done()) {
    const auto v = numbers(r.next(), 6);
    map.uavs.push_back({{v[0], v[1], v[2]}, {v[3], v[4], v[5]}});
  }
  return map;
}

void save_map(const UrbanMap& map, const std::filesystem::path& path) {
  write_text_file(path, serialize_map(map));
}

UrbanMap load_map(const std::filesystem::path& path) { return parse_map(read_text_file(path)); }

}  // namespace fmeac::urban
