#include "fmeac/agri/agri_env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fmeac/common/errors.hpp"

namespace fmeac::agri {

bool AgriState::episode_done() const {
  return std::all_of(uavs.begin(), uavs.end(), [](const AgriUav& u) { return u.done; });
}

double AgriState::mean_aoi() const {
  if (sensors.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : sensors) sum += s.aoi;
  return sum / static_cast<double>(sensors.size());
}

double aoi_from_age(double age_s, double t_update, double aoi_max) {
  return std::min(age_s / t_update, 1.0) * aoi_max;
}

WsState aoi_tick(const WsState& ws, double dt, double t_update, double aoi_max) {
  if (!(dt > 0.0) || !(t_update > 0.0)) throw ContractError("aoi_tick: dt and update period must be positive");
  WsState next = ws;
  next.age_s += dt;
  next.aoi = aoi_from_age(next.age_s, t_update, aoi_max);
  next.since_broadcast += dt;
  while (next.since_broadcast >= t_update) {
    next.pending = true;
    next.since_broadcast -= t_update;
  }
  return next;
}

double uplink_received_w(const AgriMap& map, const AgriConfig& cfg, Vec3 sensor, Vec3 uav) {
  const double d = std::max(distance(sensor, uav), 1.0);
  const bool los = map.terrain.line_of_sight(sensor, uav);
  const double pl = radio::path_loss_db(d, cfg.f_c_hz, los, std::max(std::abs(uav.z - sensor.z), 1.0), cfg.path_loss);
  return radio::dbm_to_watt(cfg.pw_wt_dbm + cfg.g_ws_db - pl);
}

double uplink_sinr(const AgriMap& map, const AgriConfig& cfg, Vec3 sensor, Vec3 uav, std::span<const Vec3> interferers) {
  double interference = 0.0;
  for (const Vec3& q : interferers) interference += uplink_received_w(map, cfg, q, uav);
  return radio::sinr_and_capacity_w(uplink_received_w(map, cfg, sensor, uav), interference, cfg.bandwidth_hz,
                                    radio::noise_power_w(cfg.bandwidth_hz, cfg.temperature_k))
      .sinr;
}

double uplink_plr(double sinr, const AgriConfig& cfg) {
  return radio::packet_loss_rate(radio::bpsk_ber(sinr), cfg.packet_bits);
}

bool transmit(WsState& ws, double plr, Rng& rng) {
  const bool ok = uniform(rng, 0.0, 1.0) < 1.0 - plr;
  ws.pending = false;
  if (ok) {
    ws.age_s = 0.0;
    ws.aoi = 0.0;
  }
  return ok;
}

AgriState reset(const AgriMap& map, const AgriConfig& cfg) {
  AgriState s;
  for (const Vec3& p : map.starts) {
    AgriUav u;
    u.position = p;
    u.ledger = energy::EnergyLedger::full(cfg.battery_j);
    s.uavs.push_back(u);
  }
  for (const Sensor& ws : map.sensors) {
    s.sensors.push_back({aoi_from_age(ws.initial_age, ws.t_update, cfg.aoi_max), ws.initial_age, ws.phase, false});
  }
  return s;
}

double height_deviation(const AgriMap& map, const AgriConfig& cfg, Vec3 p) {
  return std::abs(p.z - map.terrain.height_at(p.x, p.y) - cfg.clearance_target);
}

double nearest_uav_distance(const AgriState& state, const AgriConfig& cfg, std::size_t i, Vec3* relative) {
  double best = cfg.diagonal();
  Vec3 rel{};
  for (std::size_t j = 0; j < state.uavs.size(); ++j) {
    if (j == i || state.uavs[j].done) continue;
    const Vec3 d = state.uavs[j].position - state.uavs[i].position;
    if (d.norm() < best) {
      best = d.norm();
      rel = d;
    }
  }
  if (relative) *relative = rel;
  return best;
}

double dock_distance(const AgriMap& map, const AgriState& state, std::size_t i) {
  return distance(state.uavs[i].position, map.docks[i]);
}

std::vector<std::size_t> nearest_sensors(const AgriMap& map, Vec3 p, std::size_t count) {
  std::vector<std::size_t> idx(map.sensors.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  count = std::min(count, idx.size());
  const auto key = [&](std::size_t j) { return (map.sensors[j].position - p).horizontal_norm(); };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double ka = key(a), kb = key(b);
                      return ka < kb || (ka == kb && a < b);
                    });
  idx.resize(count);
  return idx;
}

Vec3 homing_action(const AgriMap& map, const AgriConfig& cfg, Vec3 position, std::size_t i) {
  const Vec3 dock = map.docks.at(i);
  const Vec3 target{dock.x, dock.y, std::clamp(dock.z, cfg.z_min, cfg.z_max)};
  const Vec3 d = target - position;
  double scale = 1.0;
  const double limits[3] = {cfg.v_max.x * cfg.dt, cfg.v_max.y * cfg.dt, cfg.v_max.z * cfg.dt};
  const double comps[3] = {std::abs(d.x), std::abs(d.y), std::abs(d.z)};
  for (int a = 0; a < 3; ++a) {
    if (comps[a] > limits[a]) scale = std::min(scale, limits[a] / comps[a]);
  }
  return d * (scale / cfg.dt);
}

double scripted_return_energy(const AgriMap& map, const AgriConfig& cfg, Vec3 position, std::size_t i) {
  const double slowest = std::min({cfg.v_max.x, cfg.v_max.y, cfg.v_max.z});
  const int cap = static_cast<int>(std::ceil(2.0 * cfg.diagonal() / (slowest * cfg.dt))) + 10;
  double energy_j = 0.0;
  Vec3 p = position;
  // Docking is itself an RTH step, so at least one step is always paid for.
  int s = 0;
  do {
    const Vec3 v = homing_action(map, cfg, p, i);
    p = energy::integrate_motion(p, v, cfg.dt, cfg.bounds()).position;
    energy_j += (energy::flight_power(v, cfg.body) + cfg.pw_cmp_w) * cfg.dt;
  } while (++s < cap && distance(p, map.docks.at(i)) > cfg.d_end);
  return energy_j;
}

std::vector<double> return_state(const AgriMap& map, const AgriConfig& cfg, Vec3 position, std::size_t i) {
  const Vec3 dock = map.docks.at(i);
  const double zr = cfg.z_max - cfg.z_min;
  return {(position.x - dock.x) / cfg.extent_x, (position.y - dock.y) / cfg.extent_y, (position.z - dock.z) / zr,
          (position - dock).horizontal_norm() / std::hypot(cfg.extent_x, cfg.extent_y), (position.z - cfg.z_min) / zr};
}

AgriStepResult step(AgriState& state, const AgriMap& map, const AgriConfig& cfg, std::span<const Vec3> actions,
                    Rng& rng, const ReturnPredictor& predictor) {
  const std::size_t n = state.uavs.size();
  if (actions.size() != n) {
    throw ContractError("agri step: expected " + std::to_string(n) + " actions, got " + std::to_string(actions.size()));
  }
  for (const Vec3& a : actions) {
    if (!std::isfinite(a.x) || !std::isfinite(a.y) || !std::isfinite(a.z)) throw ContractError("agri step: non-finite action");
  }
  if (map.sensors.size() != state.sensors.size()) throw ContractError("agri step: state does not belong to this map");

  AgriStepResult out;
  out.rewards.assign(n, {});
  out.done.assign(n, false);
  for (const auto& u : state.uavs) out.active.push_back(!u.done);

  std::vector<double> h_prev(n), du_prev(n), dis_prev(n), e_prev(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.active[i]) continue;
    h_prev[i] = height_deviation(map, cfg, state.uavs[i].position);
    du_prev[i] = nearest_uav_distance(state, cfg, i);
    dis_prev[i] = dock_distance(map, state, i);
    e_prev[i] = state.uavs[i].ledger.remaining_j;
  }

  std::vector<bool> clamped(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.active[i]) continue;
    auto& u = state.uavs[i];
    u.velocity = {std::clamp(actions[i].x, -cfg.v_max.x, cfg.v_max.x), std::clamp(actions[i].y, -cfg.v_max.y, cfg.v_max.y),
                  std::clamp(actions[i].z, -cfg.v_max.z, cfg.v_max.z)};
    const auto motion = energy::integrate_motion(u.position, u.velocity, cfg.dt, cfg.bounds());
    u.position = motion.position;
    clamped[i] = motion.clamped;
  }

  for (std::size_t j = 0; j < state.sensors.size(); ++j) {
    state.sensors[j] = aoi_tick(state.sensors[j], cfg.dt, map.sensors[j].t_update, cfg.aoi_max);
  }

  // Each pending request goes to the nearest active UAV in range; each UAV accepts the
  // strongest request and the rest stay pending.
  std::vector<int> chosen(n, -1);
  std::vector<double> chosen_power(n, 0.0);
  for (std::size_t j = 0; j < state.sensors.size(); ++j) {
    if (!state.sensors[j].pending) continue;
    int best = -1;
    double best_d = cfg.connection_radius;
    for (std::size_t i = 0; i < n; ++i) {
      if (!out.active[i]) continue;
      const double d = (state.uavs[i].position - map.sensors[j].position).horizontal_norm();
      if (d <= best_d && (best < 0 || d < best_d)) {
        best = static_cast<int>(i);
        best_d = d;
      }
    }
    if (best < 0) continue;
    const auto b = static_cast<std::size_t>(best);
    const double p = uplink_received_w(map, cfg, map.sensors[j].position, state.uavs[b].position);
    if (chosen[b] < 0 || p > chosen_power[b]) {
      chosen[b] = static_cast<int>(j);
      chosen_power[b] = p;
    }
  }
  std::vector<bool> attempted(n, false);
  std::vector<double> collected_aoi(n, 0.0);
  std::vector<int> collected(n, 0);
  std::vector<double> plr(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (chosen[i] < 0) continue;
    std::vector<Vec3> others;
    for (std::size_t q = 0; q < n; ++q) {
      if (q != i && chosen[q] >= 0) others.push_back(map.sensors[static_cast<std::size_t>(chosen[q])].position);
    }
    plr[i] = uplink_plr(uplink_sinr(map, cfg, map.sensors[static_cast<std::size_t>(chosen[i])].position,
                                    state.uavs[i].position, others),
                        cfg);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (chosen[i] < 0) continue;
    WsState& ws = state.sensors[static_cast<std::size_t>(chosen[i])];
    const double aoi = ws.aoi;
    attempted[i] = true;
    if (transmit(ws, plr[i], rng)) {
      collected_aoi[i] += aoi;
      ++collected[i];
    }
  }

  const energy::PowerDraw draw = cfg.power_draw();
  std::vector<bool> depleted(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.active[i]) continue;
    auto& u = state.uavs[i];
    const bool comm = cfg.comm_gating ? static_cast<bool>(attempted[i]) : true;
    const auto acc = energy::accumulate(u.ledger, cfg.dt, energy::flight_power(u.velocity, cfg.body), comm, true, draw);
    u.ledger = acc.ledger;
    depleted[i] = acc.depleted;
  }

  const auto& al = cfg.alpha;
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.active[i]) continue;
    auto& u = state.uavs[i];
    auto& r = out.rewards[i];
    r.mode = u.mode;
    r.collected = collected[i];
    const double h_new = height_deviation(map, cfg, u.position);
    const double du_new = nearest_uav_distance(state, cfg, i);
    const double dis_new = dock_distance(map, state, i);
    const bool arriving = u.mode == Mode::rth && dis_new <= cfg.d_end;
    const double p_o = clamped[i] ? 1.0 : 0.0;
    const double p_c = du_new < cfg.d_safe ? 1.0 : 0.0;
    const double p_b = arriving ? std::max(u.ledger.remaining_j, 0.0) / u.ledger.capacity_j : 0.0;

    r.collection = al[0] * collected_aoi[i];
    r.height = al[1] * (h_prev[i] - h_new);
    r.boundary = -al[2] * p_o;
    r.separation = al[5] * (du_prev[i] - du_new);
    r.battery = -al[4] * p_b;
    if (u.mode == Mode::col) {
      r.collision = -al[3] * p_c;
    } else {
      r.energy = al[6] * (u.ledger.remaining_j - e_prev[i]);
      r.homing = al[7] * (dis_prev[i] - dis_new);
    }
    r.total = r.collection + r.height + r.boundary + r.collision + r.battery + r.separation + r.energy + r.homing;
  }

  // Mode and termination bookkeeping after all rewards so that every UAV saw the same world.
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.active[i]) continue;
    auto& u = state.uavs[i];
    u.mode_time += cfg.dt;
    if (depleted[i]) {
      u.depleted = true;
      u.done = true;
    } else if (u.mode == Mode::rth) {
      if (dock_distance(map, state, i) <= cfg.d_end) {
        u.arrived = true;
        u.done = true;
      } else if (u.mode_time >= cfg.t_r_end) {
        u.done = true;
      }
    } else if (u.mode_time >= cfg.t_f_end) {
      u.done = true;
    } else {
      const auto s_e = return_state(map, cfg, u.position, i);
      const double need = predictor ? predictor(s_e) : scripted_return_energy(map, cfg, u.position, i);
      if (u.ledger.remaining_j < cfg.return_margin * need) {
        u.mode = Mode::rth;
        u.mode_time = 0.0;
        u.switch_step = state.k + 1;
      }
    }
    out.done[i] = u.done;
  }
  ++state.k;
  out.mean_aoi = state.mean_aoi();
  out.episode_done = state.episode_done();
  return out;
}

std::size_t col_observation_dim(const AgriConfig& cfg) { return 3 + 4 * static_cast<std::size_t>(cfg.n_near) + 4; }
std::size_t rth_observation_dim(const AgriConfig& cfg) { return col_observation_dim(cfg) + 4; }
std::size_t observation_dim(const AgriConfig& cfg) { return rth_observation_dim(cfg) + 1; }

namespace {

Vec3 normalized_offset(const AgriConfig& cfg, Vec3 d) {
  return {d.x / cfg.extent_x, d.y / cfg.extent_y, d.z / (cfg.z_max - cfg.z_min)};
}

}  // namespace

std::vector<double> observe_col(const AgriState& state, const AgriMap& map, const AgriConfig& cfg, std::size_t i) {
  const auto& u = state.uavs.at(i);
  std::vector<double> o;
  o.reserve(col_observation_dim(cfg));
  o.push_back(u.position.x / cfg.extent_x);
  o.push_back(u.position.y / cfg.extent_y);
  o.push_back((u.position.z - cfg.z_min) / (cfg.z_max - cfg.z_min));
  const auto near = nearest_sensors(map, u.position, static_cast<std::size_t>(cfg.n_near));
  for (std::size_t s = 0; s < static_cast<std::size_t>(cfg.n_near); ++s) {
    if (s >= near.size()) {
      o.insert(o.end(), 4, 0.0);
      continue;
    }
    const Vec3 rel = normalized_offset(cfg, map.sensors[near[s]].position - u.position);
    o.insert(o.end(), {state.sensors[near[s]].aoi, rel.x, rel.y, rel.z});
  }
  Vec3 rel_uav;
  const double du = nearest_uav_distance(state, cfg, i, &rel_uav);
  const Vec3 rel = normalized_offset(cfg, rel_uav);
  o.insert(o.end(), {rel.x, rel.y, rel.z, du / cfg.diagonal()});
  return o;
}

std::vector<double> observe_rth(const AgriState& state, const AgriMap& map, const AgriConfig& cfg, std::size_t i) {
  std::vector<double> o = observe_col(state, map, cfg, i);
  const Vec3 dock = map.docks.at(i);
  o.insert(o.end(), {dock.x / cfg.extent_x, dock.y / cfg.extent_y, (dock.z - cfg.z_min) / (cfg.z_max - cfg.z_min),
                     dock_distance(map, state, i) / cfg.diagonal()});
  return o;
}

std::vector<double> observe(const AgriState& state, const AgriMap& map, const AgriConfig& cfg, std::size_t i) {
  if (state.uavs.at(i).mode == Mode::rth) {
    std::vector<double> o = observe_rth(state, map, cfg, i);
    o.push_back(1.0);
    return o;
  }
  std::vector<double> o = observe_col(state, map, cfg, i);
  o.insert(o.end(), 5, 0.0);
  return o;
}

features::GraphSnapshot graph_snapshot(const AgriState& state, const AgriMap& map, const AgriConfig& cfg) {
  const std::size_t n = state.uavs.size() + map.sensors.size();
  features::GraphSnapshot g{nn::Tensor::matrix(n, kGraphNodeDim), {}, cfg.r_adj};
  const auto fill = [&](std::size_t a, std::size_t type, Vec3 p, double scalar) {
    g.node_features(a, type) = 1.0;
    g.node_features(a, 2) = p.x / cfg.extent_x;
    g.node_features(a, 3) = p.y / cfg.extent_y;
    g.node_features(a, 4) = p.z / cfg.z_max;
    g.node_features(a, 5) = scalar;
    g.positions.push_back(p);
  };
  std::size_t a = 0;
  for (const auto& u : state.uavs) fill(a++, 0, u.position, u.ledger.remaining_j / u.ledger.capacity_j);
  for (std::size_t j = 0; j < map.sensors.size(); ++j) fill(a++, 1, map.sensors[j].position, state.sensors[j].aoi);
  return g;
}

features::GraphInput build_graph(const AgriState& state, const AgriMap& map, const AgriConfig& cfg) {
  return graph_snapshot(state, map, cfg).expand();
}

nn::Tensor point_array(const AgriState& state, const AgriMap& map, const AgriConfig& cfg) {
  nn::Tensor t = nn::Tensor::matrix(map.sensors.size(), kPointDim);
  for (std::size_t j = 0; j < map.sensors.size(); ++j) {
    const Vec3 p = map.sensors[j].position;
    t(j, 0) = p.x / cfg.extent_x;
    t(j, 1) = p.y / cfg.extent_y;
    t(j, 2) = p.z / cfg.z_max;
    t(j, 3) = map.sensors[j].t_update / 60.0;
    t(j, 4) = state.sensors[j].aoi / cfg.aoi_max;
  }
  return t;
}

}  // namespace fmeac::agri
