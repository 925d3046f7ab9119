#include "fmeac/agri/agri_map.hpp"

#include <algorithm>
#include <cmath>

#include "../common/map_text.hpp"
#include "fmeac/common/errors.hpp"
#include "fmeac/common/rng.hpp"
#include "fmeac/common/text_io.hpp"

namespace fmeac::agri {

double AgriConfig::diagonal() const {
  return std::sqrt(extent_x * extent_x + extent_y * extent_y + (z_max - z_min) * (z_max - z_min));
}

energy::PowerDraw AgriConfig::power_draw() const {
  return {pw_cmp_w, 0.0, radio::dbm_to_watt(pw_ur_dbm)};
}

namespace {

struct Bump {
  double cx, cy, sigma, amplitude;
};

Heightfield make_terrain(Rng& rng, const AgriConfig& cfg) {
  const auto nx = static_cast<std::size_t>(std::ceil(cfg.extent_x / cfg.cell_size));
  const auto ny = static_cast<std::size_t>(std::ceil(cfg.extent_y / cfg.cell_size));
  Heightfield grid(nx, ny, cfg.cell_size, 0.0);
  const double span = std::min(cfg.extent_x, cfg.extent_y);
  std::vector<Bump> bumps;
  for (int b = 0; b < cfg.terrain_bumps; ++b) {
    bumps.push_back({uniform(rng, 0.0, cfg.extent_x), uniform(rng, 0.0, cfg.extent_y),
                     uniform(rng, 0.08, 0.25) * span, uniform(rng, -1.0, 1.0)});
  }
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double x = (static_cast<double>(ix) + 0.5) * cfg.cell_size;
      const double y = (static_cast<double>(iy) + 0.5) * cfg.cell_size;
      double h = 0.0;
      for (const auto& b : bumps) {
        const double r2 = (x - b.cx) * (x - b.cx) + (y - b.cy) * (y - b.cy);
        h += b.amplitude * std::exp(-r2 / (2.0 * b.sigma * b.sigma));
      }
      grid.at(ix, iy) = h;
    }
  }
  const auto [lo, hi] = std::minmax_element(grid.data().begin(), grid.data().end());
  const double low = *lo, range = *hi - *lo;
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      grid.at(ix, iy) = range > 0.0 ? (grid.at(ix, iy) - low) / range * cfg.terrain_max : 0.0;
    }
  }
  return grid;
}

}  // namespace

AgriMap generate_map(std::uint64_t seed, const AgriConfig& cfg) {
  if (cfg.n_uav < 1 || cfg.ws_per_side < 1 || cfg.t_update_choices.empty()) {
    throw ContractError("generate_map: need at least one UAV, one sensor and one update period");
  }
  Rng rng = make_rng(derive_seed(seed, 2));
  AgriMap map;
  map.seed = seed;
  map.terrain = make_terrain(rng, cfg);

  const double pitch = cfg.ws_pitch();
  std::uniform_int_distribution<std::size_t> pick(0, cfg.t_update_choices.size() - 1);
  for (int iy = 0; iy < cfg.ws_per_side; ++iy) {
    for (int ix = 0; ix < cfg.ws_per_side; ++ix) {
      Sensor s;
      s.position.x = (ix + 0.5) * pitch;
      s.position.y = (iy + 0.5) * (cfg.extent_y / cfg.ws_per_side);
      s.position.z = map.terrain.height_at(s.position.x, s.position.y) + cfg.ws_height;
      s.t_update = cfg.t_update_choices[pick(rng)];
      s.phase = uniform(rng, 0.0, s.t_update);
      s.initial_age = uniform(rng, 0.0, s.t_update);
      map.sensors.push_back(s);
    }
  }

  // Docks keep apart from each other; the separation relaxes if the area is too crowded.
  double separation = cfg.ds_min_separation;
  while (static_cast<int>(map.docks.size()) < cfg.n_uav) {
    map.docks.clear();
    for (int attempt = 0; attempt < 1000 && static_cast<int>(map.docks.size()) < cfg.n_uav; ++attempt) {
      Vec3 p{uniform(rng, 0.1, 0.9) * cfg.extent_x, uniform(rng, 0.1, 0.9) * cfg.extent_y, 0.0};
      p.z = map.terrain.height_at(p.x, p.y);
      const bool clear = std::all_of(map.docks.begin(), map.docks.end(),
                                     [&](Vec3 q) { return (p - q).horizontal_norm() >= separation; });
      if (clear) map.docks.push_back(p);
    }
    separation *= 0.5;
  }
  for (const Vec3& d : map.docks) {
    map.starts.push_back({d.x, d.y, std::clamp(d.z + cfg.clearance_target, cfg.z_min, cfg.z_max)});
  }
  return map;
}

using namespace map_text;

std::string serialize_map(const AgriMap& map) {
  std::ostringstream os;
  os << "FMEAC-MAP agri v1\n";
  os << "seed " << map.seed << '\n';
  os << "[grid]\n";
  os << map.terrain.nx() << ' ' << map.terrain.ny() << ' ' << format_double(map.terrain.cell_size()) << '\n';
  for (std::size_t iy = 0; iy < map.terrain.ny(); ++iy) {
    for (std::size_t ix = 0; ix < map.terrain.nx(); ++ix) {
      if (ix) os << ' ';
      os << format_double(map.terrain.at(ix, iy));
    }
    os << '\n';
  }
  os << "[ws]\n";
  for (const auto& s : map.sensors) {
    put(os, {s.position.x, s.position.y, s.position.z, s.t_update, s.phase, s.initial_age});
  }
  os << "[ds]\n";
  for (const auto& d : map.docks) put(os, {d.x, d.y, d.z});
  os << "[uav]\n";
  for (const auto& u : map.starts) put(os, {u.x, u.y, u.z});
  return os.str();
}

AgriMap parse_map(const std::string& text) {
  SectionReader r = read_lines(text);
  if (r.done() || r.next() != "FMEAC-MAP agri v1") throw ContractError("not an agri v1 map file");
  AgriMap map;
  {
    const auto tok = split_tokens(r.next());
    if (tok.size() != 2 || tok[0] != "seed") throw ContractError("map file: missing seed line");
    map.seed = static_cast<std::uint64_t>(std::stoull(std::string(tok[1])));
  }
  expect_section(r, "[grid]");
  const auto dims = numbers(r.next(), 3);
  const auto nx = static_cast<std::size_t>(dims[0]);
  const auto ny = static_cast<std::size_t>(dims[1]);
  map.terrain = Heightfield(nx, ny, dims[2]);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    const auto row = numbers(r.next(), nx);
    for (std::size_t ix = 0; ix < nx; ++ix) map.terrain.at(ix, iy) = row[ix];
  }
  expect_section(r, "[ws]");
  while (!r.at_section()) {
    const auto v = numbers(r.next(), 6);
    map.sensors.push_back({{v[0], v[1], v[2]}, v[3], v[4], v[5]});
  }
  expect_section(r, "[ds]");
  while (!r.at_section()) {
    const auto v = numbers(r.next(), 3);
    map.docks.push_back({v[0], v[1], v[2]});
  }
  expect_section(r, "[uav]");
  while (!r.done()) {
    const auto v = numbers(r.next(), 3);
    map.starts.push_back({v[0], v[1], v[2]});
  }
  if (map.docks.size() != map.starts.size()) throw ContractError("map file: one dock per UAV required");
  return map;
}

void save_map(const AgriMap& map, const std::filesystem::path& path) {
  write_text_file(path, serialize_map(map));
}

AgriMap load_map(const std::filesystem::path& path) { return parse_map(read_text_file(path)); }

}  // namespace fmeac::agri
