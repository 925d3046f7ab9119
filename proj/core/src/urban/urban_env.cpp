#include "fmeac/urban/urban_env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fmeac/common/errors.hpp"

namespace fmeac::urban {

namespace {

constexpr double kRad2Deg = 180.0 / std::numbers::pi;

double height_deviation(const UrbanConfig& cfg, double z) { return std::abs(z - 0.5 * (cfg.z_min + cfg.z_max)); }

double nlos_height(Vec3 a, Vec3 b) { return std::max(std::abs(a.z - b.z), 1.0); }

double noise_w(const UrbanConfig& cfg) { return radio::noise_power_w(cfg.bandwidth_hz, cfg.temperature_k); }

}  // namespace

bool UrbanState::episode_done() const {
  return std::all_of(uavs.begin(), uavs.end(), [](const UrbanUav& u) { return u.done; });
}

std::vector<Vec3> device_positions(const UrbanMap& map, const UrbanConfig& cfg, double t) {
  std::vector<Vec3> out;
  out.reserve(map.device_count());
  for (const auto& g : map.ground_devices) out.push_back(g.position);
  for (const auto& p : map.pedestrians) out.push_back(p.position_at(t, cfg.pd_speed));
  return out;
}

bool los_test(const UrbanMap& map, Vec3 a, Vec3 b) { return map.grid.line_of_sight(a, b); }

double iot_link_metric_db(const UrbanMap& map, const UrbanConfig& cfg, Vec3 uav, Vec3 device, double* path_loss_db) {
  const double d = std::max(distance(uav, device), 1.0);
  const double pl = radio::path_loss_db(d, cfg.f_iot_hz, los_test(map, uav, device), nlos_height(uav, device),
                                        cfg.path_loss);
  if (path_loss_db) *path_loss_db = pl;
  return cfg.pw_it_dbm + cfg.g_iot_db - pl;
}

std::vector<int> associate_iot(const UrbanMap& map, const UrbanConfig& cfg, std::span<const Vec3> devices, Vec3 uav) {
  std::vector<std::pair<double, int>> ranked;
  ranked.reserve(devices.size());
  for (std::size_t j = 0; j < devices.size(); ++j) {
    ranked.emplace_back(iot_link_metric_db(map, cfg, uav, devices[j]), static_cast<int>(j));
  }
  const std::size_t m = std::min(ranked.size(), static_cast<std::size_t>(cfg.m_links));
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(m), ranked.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
  std::vector<int> out;
  for (std::size_t s = 0; s < m; ++s) out.push_back(ranked[s].second);
  return out;
}

double serving_sinr(const UrbanMap& map, const UrbanConfig& cfg, Vec3 uav) {
  double best = 0.0;
  double total = 0.0;
  for (const auto& bs : map.base_stations) {
    const Vec3 d = uav - bs.position;
    const double dist = std::max(d.norm(), 1.0);
    const double pl = radio::path_loss_db(dist, cfg.antenna.f_bs_hz, los_test(map, bs.position, uav),
                                          nlos_height(uav, bs.position), cfg.path_loss);
    const double azimuth = std::atan2(d.y, d.x) * kRad2Deg;
    const double zenith = std::atan2(d.horizontal_norm(), d.z) * kRad2Deg;
    for (int s = 0; s < kSectorsPerBs; ++s) {
      const double gain = radio::antenna_gain_db(azimuth - bs.sector_azimuth_deg(s), zenith, cfg.antenna);
      const double p = radio::dbm_to_watt(cfg.pw_ur_dbm + cfg.pw_bt_dbm + gain - pl);
      best = std::max(best, p);
      total += p;
    }
  }
  if (best == 0.0) return 0.0;
  return radio::sinr_and_capacity_w(best, total - best, cfg.bandwidth_hz, noise_w(cfg)).sinr;
}

double clip_sinr_db(double sinr_linear, const UrbanConfig& cfg) {
  if (!(sinr_linear > 0.0)) return cfg.sinr_db_clip_lo;
  return std::clamp(radio::linear_to_db(sinr_linear), cfg.sinr_db_clip_lo, cfg.sinr_db_clip_hi);
}

std::vector<double> shape_delta(std::span<const double> raw, std::size_t m, double epsilon) {
  std::vector<double> out(m, 0.0);
  for (std::size_t s = 0; s < std::min(m, raw.size()); ++s) out[s] = std::isfinite(raw[s]) ? std::max(raw[s], 0.0) : 0.0;
  const double sum = std::accumulate(out.begin(), out.end(), 0.0);
  if (sum > epsilon) {
    for (double& v : out) v *= epsilon / sum;
    // rescaling can overshoot by an ulp; trim the largest entry if needed
    double again = std::accumulate(out.begin(), out.end(), 0.0);
    if (again > epsilon) {
      auto it = std::max_element(out.begin(), out.end());
      *it = std::max(0.0, *it - (again - epsilon));
    }
  }
  return out;
}

std::vector<IotLink> evaluate_links(const UrbanMap& map, const UrbanConfig& cfg, std::span<const Vec3> devices,
                                    Vec3 uav, std::span<const int> connected, std::span<const double> delta) {
  std::vector<double> metric(devices.size());
  std::vector<double> pl(devices.size());
  for (std::size_t j = 0; j < devices.size(); ++j) metric[j] = iot_link_metric_db(map, cfg, uav, devices[j], &pl[j]);
  std::vector<bool> is_connected(devices.size(), false);
  for (int j : connected) is_connected[static_cast<std::size_t>(j)] = true;
  // unconnected devices transmit at the full receive-chain share
  double interference = 0.0;
  for (std::size_t j = 0; j < devices.size(); ++j) {
    if (!is_connected[j]) interference += radio::dbm_to_watt(cfg.pw_ur_dbm + metric[j]);
  }
  std::vector<IotLink> links;
  for (std::size_t s = 0; s < connected.size(); ++s) {
    const auto j = static_cast<std::size_t>(connected[s]);
    IotLink l;
    l.device = connected[s];
    l.path_loss_db = pl[j];
    l.delta = s < delta.size() ? delta[s] : 0.0;
    const double signal = l.delta > 0.0 ? radio::dbm_to_watt(cfg.pw_ur_dbm + metric[j]) * l.delta : 0.0;
    l.sinr = radio::sinr_and_capacity_w(signal, interference, cfg.bandwidth_hz, noise_w(cfg)).sinr;
    links.push_back(l);
  }
  return links;
}

double qos(const UrbanUav& uav) {
  double q = 0.0;
  for (const auto& l : uav.links) q += std::log2(1.0 + l.sinr);
  return q;
}

namespace {

void refresh_links(UrbanUav& u, const UrbanMap& map, const UrbanConfig& cfg, std::span<const Vec3> devices,
                   std::span<const double> delta) {
  const std::vector<int> ids = associate_iot(map, cfg, devices, u.position);
  u.links = evaluate_links(map, cfg, devices, u.position, ids, delta);
  u.qos = qos(u);
  u.sinr_ub_db = clip_sinr_db(serving_sinr(map, cfg, u.position), cfg);
}

}  // namespace

UrbanState reset(const UrbanMap& map, const UrbanConfig& cfg) {
  UrbanState s;
  s.devices = device_positions(map, cfg, 0.0);
  const std::vector<double> even(static_cast<std::size_t>(cfg.m_links), cfg.epsilon / cfg.m_links);
  for (const auto& route : map.uavs) {
    UrbanUav u;
    u.position = route.start;
    u.ledger = energy::EnergyLedger::full(cfg.battery_j);
    u.height_dev_prev = height_deviation(cfg, u.position.z);
    refresh_links(u, map, cfg, s.devices, even);
    s.uavs.push_back(std::move(u));
  }
  return s;
}

double nearest_uav_distance(const UrbanState& state, const UrbanConfig& cfg, std::size_t i, Vec3* relative) {
  double best = cfg.diagonal();
  if (relative) *relative = {};
  for (std::size_t j = 0; j < state.uavs.size(); ++j) {
    if (j == i) continue;
    const Vec3 d = state.uavs[j].position - state.uavs[i].position;
    if (d.norm() < best) {
      best = d.norm();
      if (relative) *relative = d;
    }
  }
  return best;
}

UrbanStepResult step(UrbanState& state, const UrbanMap& map, const UrbanConfig& cfg,
                     std::span<const UrbanAction> actions) {
  const std::size_t n = state.uavs.size();
  if (actions.size() != n) throw ContractError("urban step: one action per UAV required");
  for (const auto& a : actions) {
    if (a.delta.size() != static_cast<std::size_t>(cfg.m_links)) {
      throw ContractError("urban step: allocation vector must have m entries");
    }
  }
  UrbanStepResult out;
  out.rewards.assign(n, {});
  out.active.assign(n, false);
  out.done.assign(n, false);

  // quantities at step k
  std::vector<double> d_dest(n), d_uav(n), energy_before(n), sinr_before(n), qos_before(n), h_now(n);
  for (std::size_t i = 0; i < n; ++i) {
    const UrbanUav& u = state.uavs[i];
    d_dest[i] = distance(u.position, map.uavs[i].destination);
    d_uav[i] = nearest_uav_distance(state, cfg, i);
    energy_before[i] = u.ledger.consumed_j();
    sinr_before[i] = u.sinr_ub_db;
    qos_before[i] = u.qos;
    h_now[i] = height_deviation(cfg, u.position.z);
  }

  std::vector<bool> clamped(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    UrbanUav& u = state.uavs[i];
    if (u.done) continue;
    out.active[i] = true;
    const Vec3 v{std::clamp(actions[i].velocity.x, -cfg.v_max, cfg.v_max),
                 std::clamp(actions[i].velocity.y, -cfg.v_max, cfg.v_max),
                 std::clamp(actions[i].velocity.z, -cfg.v_max, cfg.v_max)};
    const auto motion = energy::integrate_motion(u.position, v, cfg.dt, cfg.bounds());
    u.position = motion.position;
    u.velocity = v;
    clamped[i] = motion.clamped;
  }

  state.k += 1;
  state.devices = device_positions(map, cfg, state.k * cfg.dt);

  for (std::size_t i = 0; i < n; ++i) {
    if (!out.active[i]) continue;
    UrbanUav& u = state.uavs[i];
    const std::vector<double> delta = shape_delta(actions[i].delta, static_cast<std::size_t>(cfg.m_links), cfg.epsilon);
    refresh_links(u, map, cfg, state.devices, delta);
    const bool linked = !u.links.empty() || !cfg.comm_gating;
    const auto acc = energy::accumulate(u.ledger, cfg.dt, energy::flight_power(u.velocity, cfg.body), linked, linked,
                                        cfg.power_draw());
    u.ledger = acc.ledger;
    u.depleted = acc.depleted;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!out.active[i]) continue;
    UrbanUav& u = state.uavs[i];
    const double d_dest_next = distance(u.position, map.uavs[i].destination);
    const double d_uav_next = nearest_uav_distance(state, cfg, i);
    const bool inside_building = u.position.z < map.grid.height_at(u.position.x, u.position.y);
    const bool collision = d_uav_next < cfg.d_safe;
    const double penalty = (clamped[i] || inside_building || collision) ? -1.0 : 0.0;

    UrbanRewardBreakdown& r = out.rewards[i];
    r.progress = cfg.alpha[0] * (d_dest[i] - d_dest_next);
    r.height = cfg.alpha[1] * (h_now[i] - u.height_dev_prev);
    r.sinr = cfg.alpha[2] * (u.sinr_ub_db - sinr_before[i]);
    r.energy = cfg.alpha[3] * (energy_before[i] - u.ledger.consumed_j());
    r.qos = cfg.sec_in_pri ? cfg.alpha[4] * (qos_before[i] - u.qos) : 0.0;
    r.penalty = cfg.alpha[5] * penalty;
    r.separation = cfg.alpha[6] * (d_uav[i] - d_uav_next);
    r.total = r.progress + r.height + r.sinr + r.energy + r.qos + r.penalty + r.separation;
    r.secondary = u.qos;

    u.height_dev_prev = h_now[i];
    if (d_dest_next < cfg.d_end && !u.arrived) {
      u.arrived = true;
      u.arrival_step = state.k;
    }
    if (u.arrived || u.depleted || state.k >= cfg.k_end) u.done = true;
    out.done[i] = u.done;
  }
  for (std::size_t i = 0; i < n; ++i) out.done[i] = state.uavs[i].done;
  out.episode_done = state.episode_done();
  return out;
}

std::size_t observation_dim(const UrbanConfig& cfg, std::size_t feature_dim) {
  return 12 + 4 * static_cast<std::size_t>(cfg.m_links) + feature_dim;
}

std::vector<double> observe(const UrbanState& state, const UrbanMap& map, const UrbanConfig& cfg, std::size_t i,
                            std::span<const double> f_env) {
  const UrbanUav& u = state.uavs[i];
  const Vec3 scale{cfg.extent_x, cfg.extent_y, cfg.z_max};
  auto norm = [&](Vec3 p) { return Vec3{p.x / scale.x, p.y / scale.y, p.z / scale.z}; };
  std::vector<double> o;
  o.reserve(observation_dim(cfg, f_env.size()));
  const Vec3 p = norm(u.position);
  const Vec3 dst = norm(map.uavs[i].destination);
  o.insert(o.end(), {p.x, p.y, p.z, dst.x, dst.y, dst.z});
  o.push_back(distance(u.position, map.uavs[i].destination) / cfg.diagonal());
  Vec3 rel;
  o.push_back(nearest_uav_distance(state, cfg, i, &rel) / cfg.diagonal());
  const Vec3 rn = norm(rel);
  o.insert(o.end(), {rn.x, rn.y, rn.z});
  o.push_back(u.sinr_ub_db / cfg.sinr_db_clip_hi);
  for (int s = 0; s < cfg.m_links; ++s) {
    if (static_cast<std::size_t>(s) < u.links.size()) {
      const IotLink& l = u.links[static_cast<std::size_t>(s)];
      const Vec3 d = norm(state.devices[static_cast<std::size_t>(l.device)] - u.position);
      o.insert(o.end(), {d.x, d.y, d.z, l.path_loss_db / 100.0});
    } else {
      o.insert(o.end(), {0.0, 0.0, 0.0, 0.0});
    }
  }
  o.insert(o.end(), f_env.begin(), f_env.end());
  return o;
}

features::GraphSnapshot graph_snapshot(const UrbanState& state, const UrbanMap& map, const UrbanConfig& cfg) {
  struct Node {
    int type;
    Vec3 pos;
    double scalar;
  };
  std::vector<Node> nodes;
  for (const auto& u : state.uavs) nodes.push_back({0, u.position, u.ledger.remaining_j / u.ledger.capacity_j});
  for (const auto& b : map.base_stations) nodes.push_back({1, b.position, 0.0});
  const std::size_t n_gd = map.ground_devices.size();
  for (std::size_t j = 0; j < state.devices.size(); ++j) nodes.push_back({j < n_gd ? 2 : 3, state.devices[j], 0.0});

  const std::size_t n = nodes.size();
  features::GraphSnapshot g{nn::Tensor::matrix(n, kGraphNodeDim), {}, cfg.r_adj};
  for (std::size_t a = 0; a < n; ++a) {
    g.node_features(a, static_cast<std::size_t>(nodes[a].type)) = 1.0;
    g.node_features(a, 4) = nodes[a].pos.x / cfg.extent_x;
    g.node_features(a, 5) = nodes[a].pos.y / cfg.extent_y;
    g.node_features(a, 6) = nodes[a].pos.z / cfg.z_max;
    g.node_features(a, 7) = nodes[a].scalar;
    g.positions.push_back(nodes[a].pos);
  }
  return g;
}

features::GraphInput build_graph(const UrbanState& state, const UrbanMap& map, const UrbanConfig& cfg) {
  return graph_snapshot(state, map, cfg).expand();
}

nn::Tensor point_array(const UrbanMap& map, const UrbanConfig& cfg, std::span<const Vec3> devices) {
  nn::Tensor t = nn::Tensor::matrix(devices.size(), kPointDim);
  const std::size_t n_gd = map.ground_devices.size();
  for (std::size_t j = 0; j < devices.size(); ++j) {
    t(j, 0) = devices[j].x / cfg.extent_x;
    t(j, 1) = devices[j].y / cfg.extent_y;
    t(j, 2) = devices[j].z / cfg.z_max;
    t(j, 3) = j < n_gd ? 0.0 : 1.0;
    t(j, 4) = j < n_gd ? map.ground_devices[j].request_rate : map.pedestrians[j - n_gd].request_rate;
  }
  return t;
}

UrbanAction straight_line_action(const UrbanState& state, const UrbanMap& map, const UrbanConfig& cfg, std::size_t i) {
  const Vec3 d = map.uavs[i].destination - state.uavs[i].position;
  const double len = d.norm();
  UrbanAction a;
  if (len > 0.0) {
    const double speed = std::min(cfg.v_max, len / cfg.dt);
    a.velocity = d * (speed / len);
  }
  a.delta.assign(static_cast<std::size_t>(cfg.m_links), cfg.epsilon / cfg.m_links);
  return a;
}

}  // namespace fmeac::urban
