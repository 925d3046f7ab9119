#include "fmeac/harness/config.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <type_traits>

#include "fmeac/common/errors.hpp"
#include "fmeac/common/text_io.hpp"

namespace fmeac::harness {

std::string to_string(Application app) { return app == Application::urban ? "urban" : "agri"; }

namespace {

// ---------------------------------------------------------------- value conversions

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::string text(double v) { return format_double(v); }
std::string text(int v) { return std::to_string(v); }
std::string text(std::size_t v) { return std::to_string(v); }
std::string text(bool v) { return v ? "on" : "off"; }
std::string text(const Vec3& v) { return text(v.x) + "," + text(v.y) + "," + text(v.z); }
std::string text(Application v) { return to_string(v); }
std::string text(eac::FeatureKind v) { return eac::to_string(v); }
std::string text(eac::ActorMode v) { return v == eac::ActorMode::maxent ? "maxent" : "deterministic"; }
std::string text(radio::AttenuationForm v) {
  return v == radio::AttenuationForm::squared_3gpp ? "squared_3gpp" : "as_printed";
}
template <class T>
std::string text(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + text(v[i]);
  return s;
}
template <class T, std::size_t N>
std::string text(const std::array<T, N>& v) {
  return text(std::vector<T>(v.begin(), v.end()));
}

void parse(const std::string& s, double& v) { v = parse_double(s); }
void parse(const std::string& s, int& v) { v = static_cast<int>(parse_int(s)); }
void parse(const std::string& s, std::size_t& v) {
  const long long x = parse_int(s);
  if (x < 0) throw ConfigError("expected a non-negative integer, got '" + s + "'");
  v = static_cast<std::size_t>(x);
}
void parse(const std::string& s, bool& v) {
  if (s == "on" || s == "true" || s == "1") {
    v = true;
  } else if (s == "off" || s == "false" || s == "0") {
    v = false;
  } else {
    throw ConfigError("expected on/off, got '" + s + "'");
  }
}
void parse(const std::string& s, Vec3& v) {
  const auto parts = split_list(s);
  if (parts.size() != 3) throw ConfigError("expected x,y,z, got '" + s + "'");
  v = {parse_double(parts[0]), parse_double(parts[1]), parse_double(parts[2])};
}
void parse(const std::string& s, Application& v) {
  if (s == "urban") {
    v = Application::urban;
  } else if (s == "agri") {
    v = Application::agri;
  } else {
    throw ConfigError("application must be urban or agri, got '" + s + "'");
  }
}
void parse(const std::string& s, eac::FeatureKind& v) { v = eac::parse_feature_kind(s); }
void parse(const std::string& s, eac::ActorMode& v) {
  if (s == "maxent") {
    v = eac::ActorMode::maxent;
  } else if (s == "deterministic") {
    v = eac::ActorMode::deterministic;
  } else {
    throw ConfigError("actor mode must be maxent or deterministic, got '" + s + "'");
  }
}
void parse(const std::string& s, radio::AttenuationForm& v) {
  if (s == "squared_3gpp") {
    v = radio::AttenuationForm::squared_3gpp;
  } else if (s == "as_printed") {
    v = radio::AttenuationForm::as_printed;
  } else {
    throw ConfigError("attenuation form must be squared_3gpp or as_printed, got '" + s + "'");
  }
}
template <class T>
void parse(const std::string& s, std::vector<T>& v) {
  std::vector<T> out;
  for (const auto& item : split_list(s)) {
    T x{};
    parse(item, x);
    out.push_back(x);
  }
  v = std::move(out);
}
template <class T, std::size_t N>
void parse(const std::string& s, std::array<T, N>& v) {
  std::vector<T> tmp;
  parse(s, tmp);
  if (tmp.size() != N) throw ConfigError("expected " + std::to_string(N) + " comma-separated values");
  std::copy(tmp.begin(), tmp.end(), v.begin());
}
static_assert(std::is_same_v<std::uint64_t, std::size_t>, "seeds are parsed as std::size_t");

// ---------------------------------------------------------------- key table

struct Field {
  std::string key;
  std::string doc;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <class Access>
Field field(std::string key, std::string doc, Access access) {
  return {std::move(key), std::move(doc),
          [access](const ExperimentConfig& c) { return text(access(const_cast<ExperimentConfig&>(c))); },
          [access](ExperimentConfig& c, const std::string& v) { parse(v, access(c)); }};
}

#define FMEAC_KEY(name, doc, expr) field(name, doc, [](ExperimentConfig & c) -> auto& { return expr; })

void add_body(std::vector<Field>& f, const std::string& p, energy::UavBody& (*get)(ExperimentConfig&)) {
  const auto body = [get](auto member) {
    return [get, member](ExperimentConfig& c) -> auto& { return get(c).*member; };
  };
  f.push_back(field(p + "body.mass", "UAV mass, kg", body(&energy::UavBody::mass)));
  f.push_back(field(p + "body.gravity", "gravitational acceleration, m/s^2", body(&energy::UavBody::gravity)));
  f.push_back(field(p + "body.air_density", "air density, kg/m^3", body(&energy::UavBody::air_density)));
  f.push_back(field(p + "body.fuselage_area", "fuselage area, m^2", body(&energy::UavBody::fuselage_area)));
  f.push_back(field(p + "body.propellers", "propeller count", body(&energy::UavBody::propellers)));
  f.push_back(field(p + "body.propeller_radius", "propeller radius, m", body(&energy::UavBody::propeller_radius)));
  f.push_back(field(p + "body.efficiency", "mechanical efficiency", body(&energy::UavBody::efficiency)));
  f.push_back(field(p + "body.drag_coefficient", "drag coefficient", body(&energy::UavBody::drag_coefficient)));
  f.push_back(field(p + "body.hover_threshold", "hover speed threshold, m/s", body(&energy::UavBody::hover_threshold)));
}

std::vector<Field> build_fields() {
  std::vector<Field> f;
  // experiment
  f.push_back(FMEAC_KEY("application", "urban or agri; selects the base values", c.application));
  f.push_back(FMEAC_KEY("feature_model", "none, gnn or pan", c.feature_model));
  f.push_back(FMEAC_KEY("seed", "experiment seed", c.seed));
  f.push_back(FMEAC_KEY("train_maps", "map seeds used for training", c.train_maps));
  f.push_back(FMEAC_KEY("eval_map_min", "smallest map seed the evaluation map is drawn from", c.eval_map_min));
  f.push_back(FMEAC_KEY("eval_map_max", "largest map seed the evaluation map is drawn from", c.eval_map_max));
  f.push_back(FMEAC_KEY("eval_episodes", "greedy evaluation episodes", c.eval_episodes));
  f.push_back(FMEAC_KEY("episodes", "training episodes", c.episodes));
  f.push_back(FMEAC_KEY("warmup_steps", "environment steps with random actions before learning", c.warmup_steps));
  f.push_back(FMEAC_KEY("updates_per_step", "gradient rounds per environment step (0 = rollout only)", c.updates_per_step));
  f.push_back(FMEAC_KEY("max_steps", "per-episode step guard", c.max_steps));
  f.push_back(FMEAC_KEY("record_timing", "fill wall_ms in the metrics log", c.record_timing));

  // agent
  f.push_back(FMEAC_KEY("eac.actor_mode", "maxent or deterministic", c.eac.mode));
  f.push_back(FMEAC_KEY("eac.secondary_critics", "train the Q_S pair next to Q_P", c.eac.secondary_critics));
  f.push_back(FMEAC_KEY("eac.mode_split", "route COL rows to Q_P and RTH rows to Q_S", c.eac.mode_split));
  f.push_back(FMEAC_KEY("eac.actor_hidden", "actor hidden widths", c.eac.actor_hidden));
  f.push_back(FMEAC_KEY("eac.critic_hidden", "critic hidden widths", c.eac.critic_hidden));
  f.push_back(FMEAC_KEY("eac.gamma", "discount factor", c.eac.gamma));
  f.push_back(FMEAC_KEY("eac.lr_actor", "actor learning rate", c.eac.lr_actor));
  f.push_back(FMEAC_KEY("eac.lr_critic_p", "primary critic learning rate", c.eac.lr_critic_p));
  f.push_back(FMEAC_KEY("eac.lr_critic_s", "secondary critic learning rate", c.eac.lr_critic_s));
  f.push_back(FMEAC_KEY("eac.xi", "soft update rate", c.eac.xi));
  f.push_back(FMEAC_KEY("eac.temperature", "entropy temperature (maxent)", c.eac.temperature));
  f.push_back(FMEAC_KEY("eac.entropy_in_target", "entropy term inside the targets (maxent)", c.eac.entropy_in_target));
  f.push_back(FMEAC_KEY("eac.policy_delay", "critic updates per actor update (deterministic)", c.eac.policy_delay));
  f.push_back(FMEAC_KEY("eac.target_noise", "target smoothing noise, fraction of the bound", c.eac.target_noise));
  f.push_back(FMEAC_KEY("eac.target_noise_clip", "smoothing noise clip, fraction of the bound", c.eac.target_noise_clip));
  f.push_back(FMEAC_KEY("eac.exploration_noise", "exploration noise, fraction of the bound", c.eac.exploration_noise));
  f.push_back(FMEAC_KEY("eac.batch_size", "replay batch size", c.eac.batch_size));
  f.push_back(FMEAC_KEY("eac.buffer_capacity", "replay capacity", c.eac.buffer_capacity));
  f.push_back(FMEAC_KEY("eac.secondary_scale", "weight of the secondary reward in Y_S", c.eac.secondary_scale));

  // feature models
  f.push_back(FMEAC_KEY("gnn.hidden", "GCN hidden width", c.gnn.hidden));
  f.push_back(FMEAC_KEY("gnn.feature_dim", "GNN feature width", c.gnn.feature_dim));
  f.push_back(FMEAC_KEY("gnn.beta", "GNN feature scale", c.gnn.beta));
  f.push_back(FMEAC_KEY("gnn.lr", "GNN learning rate", c.gnn_lr));
  f.push_back(FMEAC_KEY("pan.hidden", "PAN point-encoder width", c.pan.hidden));
  f.push_back(FMEAC_KEY("pan.feature_dim", "PAN feature width", c.pan.feature_dim));
  f.push_back(FMEAC_KEY("pan.head_hidden", "PAN pretraining head width", c.pan.head_hidden));
  f.push_back(FMEAC_KEY("pan.max_points", "PAN point cap", c.pan.max_points));
  f.push_back(FMEAC_KEY("pan.beta", "PAN feature scale", c.pan.beta));
  f.push_back(FMEAC_KEY("pan.epochs", "PAN pretraining epochs", c.pan_train.epochs));
  f.push_back(FMEAC_KEY("pan.batch_size", "PAN pretraining batch size", c.pan_train.batch_size));
  f.push_back(FMEAC_KEY("pan.lr", "PAN learning rate", c.pan_train.learning_rate));
  f.push_back(FMEAC_KEY("pan.snapshots_per_map", "point arrays recorded per training map", c.pan_snapshots_per_map));
  f.push_back(FMEAC_KEY("bpn.enabled", "agri: use the battery prediction network for the RTH switch", c.use_bpn));
  f.push_back(FMEAC_KEY("bpn.hidden", "BPN hidden widths", c.bpn.hidden));
  f.push_back(FMEAC_KEY("bpn.epochs", "BPN pretraining epochs", c.bpn_train.epochs));
  f.push_back(FMEAC_KEY("bpn.batch_size", "BPN pretraining batch size", c.bpn_train.batch_size));
  f.push_back(FMEAC_KEY("bpn.lr", "BPN learning rate", c.bpn_train.learning_rate));
  f.push_back(FMEAC_KEY("bpn.validation_fraction", "BPN held-out fraction", c.bpn_train.validation_fraction));
  f.push_back(FMEAC_KEY("bpn.samples_per_map", "labelled return states per training map", c.bpn_samples_per_map));

  // analysis
  f.push_back(FMEAC_KEY("bench.nodes", "node/point counts timed by bench-inference", c.bench_nodes));
  f.push_back(FMEAC_KEY("bench.repeats", "forward passes per timing", c.bench_repeats));
  f.push_back(FMEAC_KEY("plot.smoothing_window", "moving-average window of the reward curve", c.smoothing_window));

  // urban environment
  f.push_back(FMEAC_KEY("urban.extent_x", "task space x, m", c.urban.extent_x));
  f.push_back(FMEAC_KEY("urban.extent_y", "task space y, m", c.urban.extent_y));
  f.push_back(FMEAC_KEY("urban.z_min", "lowest altitude, m", c.urban.z_min));
  f.push_back(FMEAC_KEY("urban.z_max", "highest altitude, m", c.urban.z_max));
  f.push_back(FMEAC_KEY("urban.cell_size", "grid cell, m", c.urban.cell_size));
  f.push_back(FMEAC_KEY("urban.v_max", "per-axis speed limit, m/s", c.urban.v_max));
  f.push_back(FMEAC_KEY("urban.d_end", "arrival distance, m", c.urban.d_end));
  f.push_back(FMEAC_KEY("urban.k_end", "steps per episode", c.urban.k_end));
  f.push_back(FMEAC_KEY("urban.dt", "step length, s", c.urban.dt));
  f.push_back(FMEAC_KEY("urban.n_uav", "UAV count", c.urban.n_uav));
  f.push_back(FMEAC_KEY("urban.n_bs_min", "fewest base stations", c.urban.n_bs_min));
  f.push_back(FMEAC_KEY("urban.n_bs_max", "most base stations", c.urban.n_bs_max));
  f.push_back(FMEAC_KEY("urban.n_gd_min", "fewest ground devices", c.urban.n_gd_min));
  f.push_back(FMEAC_KEY("urban.n_gd_max", "most ground devices", c.urban.n_gd_max));
  f.push_back(FMEAC_KEY("urban.n_pd_min", "fewest pedestrians", c.urban.n_pd_min));
  f.push_back(FMEAC_KEY("urban.n_pd_max", "most pedestrians", c.urban.n_pd_max));
  f.push_back(FMEAC_KEY("urban.min_route_length", "start/destination separation, m", c.urban.min_route_length));
  f.push_back(FMEAC_KEY("urban.block_pitch", "city block pitch, m", c.urban.block_pitch));
  f.push_back(FMEAC_KEY("urban.street_width", "street width, m", c.urban.street_width));
  f.push_back(FMEAC_KEY("urban.building_probability", "chance a block holds a building", c.urban.building_probability));
  f.push_back(FMEAC_KEY("urban.building_h_min", "lowest building, m", c.urban.building_h_min));
  f.push_back(FMEAC_KEY("urban.building_h_max", "highest building, m", c.urban.building_h_max));
  f.push_back(FMEAC_KEY("urban.bs_height", "base station mast height, m", c.urban.bs_height));
  f.push_back(FMEAC_KEY("urban.device_height", "device height, m", c.urban.device_height));
  f.push_back(FMEAC_KEY("urban.pd_speed", "pedestrian speed, m/s", c.urban.pd_speed));
  f.push_back(FMEAC_KEY("urban.request_rate_min", "lowest device request rate", c.urban.request_rate_min));
  f.push_back(FMEAC_KEY("urban.request_rate_max", "highest device request rate", c.urban.request_rate_max));
  f.push_back(FMEAC_KEY("urban.m_links", "uplinks per UAV", c.urban.m_links));
  f.push_back(FMEAC_KEY("urban.epsilon", "allocation proportion", c.urban.epsilon));
  f.push_back(FMEAC_KEY("urban.antenna.m_ula", "array columns", c.urban.antenna.m_ula));
  f.push_back(FMEAC_KEY("urban.antenna.n_ula", "array rows", c.urban.antenna.n_ula));
  f.push_back(FMEAC_KEY("urban.antenna.d_ula", "element spacing, m", c.urban.antenna.d_ula));
  f.push_back(FMEAC_KEY("urban.antenna.theta_main_deg", "horizontal main lobe, deg", c.urban.antenna.theta_main_deg));
  f.push_back(FMEAC_KEY("urban.antenna.phi_main_deg", "vertical main lobe, deg", c.urban.antenna.phi_main_deg));
  f.push_back(FMEAC_KEY("urban.antenna.theta_3db_deg", "horizontal 3 dB width, deg", c.urban.antenna.theta_3db_deg));
  f.push_back(FMEAC_KEY("urban.antenna.phi_3db_deg", "vertical 3 dB width, deg", c.urban.antenna.phi_3db_deg));
  f.push_back(FMEAC_KEY("urban.antenna.g_element_db", "element gain, dB", c.urban.antenna.g_element_db));
  f.push_back(FMEAC_KEY("urban.antenna.f_bs_hz", "base station carrier, Hz", c.urban.antenna.f_bs_hz));
  f.push_back(FMEAC_KEY("urban.antenna.attenuation_cap_db", "element attenuation cap, dB", c.urban.antenna.attenuation_cap_db));
  f.push_back(FMEAC_KEY("urban.antenna.af_floor", "array factor floor", c.urban.antenna.af_floor));
  f.push_back(FMEAC_KEY("urban.antenna.attenuation_form", "squared_3gpp or as_printed", c.urban.antenna.attenuation_form));
  f.push_back(FMEAC_KEY("urban.path_loss.nlos_coefficient", "NLoS height coefficient", c.urban.path_loss.nlos_coefficient));
  f.push_back(FMEAC_KEY("urban.f_iot_hz", "IoT carrier, Hz", c.urban.f_iot_hz));
  f.push_back(FMEAC_KEY("urban.bandwidth_hz", "bandwidth, Hz", c.urban.bandwidth_hz));
  f.push_back(FMEAC_KEY("urban.temperature_k", "noise temperature, K", c.urban.temperature_k));
  f.push_back(FMEAC_KEY("urban.pw_bt_dbm", "base station transmit power, dBm", c.urban.pw_bt_dbm));
  f.push_back(FMEAC_KEY("urban.pw_it_dbm", "IoT transmit power, dBm", c.urban.pw_it_dbm));
  f.push_back(FMEAC_KEY("urban.g_iot_db", "IoT antenna gain, dB", c.urban.g_iot_db));
  f.push_back(FMEAC_KEY("urban.pw_ur_dbm", "UAV receive power, dBm", c.urban.pw_ur_dbm));
  f.push_back(FMEAC_KEY("urban.pw_ut_dbm", "UAV transmit power, dBm", c.urban.pw_ut_dbm));
  f.push_back(FMEAC_KEY("urban.sinr_db_clip_lo", "lowest SINR, dB", c.urban.sinr_db_clip_lo));
  f.push_back(FMEAC_KEY("urban.sinr_db_clip_hi", "highest SINR, dB", c.urban.sinr_db_clip_hi));
  add_body(f, "urban.", [](ExperimentConfig& c) -> energy::UavBody& { return c.urban.body; });
  f.push_back(FMEAC_KEY("urban.battery_j", "battery capacity, J", c.urban.battery_j));
  f.push_back(FMEAC_KEY("urban.pw_cmp_w", "computation power, W", c.urban.pw_cmp_w));
  f.push_back(FMEAC_KEY("urban.comm_gating", "radio draw only while links are active", c.urban.comm_gating));
  f.push_back(FMEAC_KEY("urban.alpha", "reward weights: progress, height, SINR, energy, QoS, penalty, separation", c.urban.alpha));
  f.push_back(FMEAC_KEY("urban.sec_in_pri", "QoS term inside the primary reward", c.urban.sec_in_pri));
  f.push_back(FMEAC_KEY("urban.d_safe", "safe separation, m", c.urban.d_safe));
  f.push_back(FMEAC_KEY("urban.r_adj", "graph edge radius, m", c.urban.r_adj));

  // agricultural environment
  f.push_back(FMEAC_KEY("agri.extent_x", "task space x, m", c.agri.extent_x));
  f.push_back(FMEAC_KEY("agri.extent_y", "task space y, m", c.agri.extent_y));
  f.push_back(FMEAC_KEY("agri.z_min", "lowest altitude, m", c.agri.z_min));
  f.push_back(FMEAC_KEY("agri.z_max", "highest altitude, m", c.agri.z_max));
  f.push_back(FMEAC_KEY("agri.cell_size", "terrain cell, m", c.agri.cell_size));
  f.push_back(FMEAC_KEY("agri.v_max", "per-axis speed limits x,y,z, m/s", c.agri.v_max));
  f.push_back(FMEAC_KEY("agri.d_end", "docking distance, m", c.agri.d_end));
  f.push_back(FMEAC_KEY("agri.t_f_end", "longest collection phase, s", c.agri.t_f_end));
  f.push_back(FMEAC_KEY("agri.t_r_end", "longest return phase, s", c.agri.t_r_end));
  f.push_back(FMEAC_KEY("agri.dt", "step length, s", c.agri.dt));
  f.push_back(FMEAC_KEY("agri.n_uav", "UAV count", c.agri.n_uav));
  f.push_back(FMEAC_KEY("agri.ws_per_side", "sensors per grid side", c.agri.ws_per_side));
  f.push_back(FMEAC_KEY("agri.aoi_max", "AoI cap", c.agri.aoi_max));
  f.push_back(FMEAC_KEY("agri.t_update_choices", "sensor broadcast periods, s", c.agri.t_update_choices));
  f.push_back(FMEAC_KEY("agri.ds_min_separation", "dock separation, m", c.agri.ds_min_separation));
  f.push_back(FMEAC_KEY("agri.terrain_bumps", "terrain hill/ravine count", c.agri.terrain_bumps));
  f.push_back(FMEAC_KEY("agri.terrain_max", "terrain relief, m", c.agri.terrain_max));
  f.push_back(FMEAC_KEY("agri.ws_height", "sensor height above ground, m", c.agri.ws_height));
  f.push_back(FMEAC_KEY("agri.connection_radius", "horizontal sensor reach, m", c.agri.connection_radius));
  f.push_back(FMEAC_KEY("agri.f_c_hz", "carrier, Hz", c.agri.f_c_hz));
  f.push_back(FMEAC_KEY("agri.bandwidth_hz", "bandwidth, Hz", c.agri.bandwidth_hz));
  f.push_back(FMEAC_KEY("agri.temperature_k", "noise temperature, K", c.agri.temperature_k));
  f.push_back(FMEAC_KEY("agri.pw_wt_dbm", "sensor transmit power, dBm", c.agri.pw_wt_dbm));
  f.push_back(FMEAC_KEY("agri.g_ws_db", "sensor antenna gain, dB", c.agri.g_ws_db));
  f.push_back(FMEAC_KEY("agri.packet_bits", "packet length, bits", c.agri.packet_bits));
  f.push_back(FMEAC_KEY("agri.path_loss.nlos_coefficient", "NLoS height coefficient", c.agri.path_loss.nlos_coefficient));
  add_body(f, "agri.", [](ExperimentConfig& c) -> energy::UavBody& { return c.agri.body; });
  f.push_back(FMEAC_KEY("agri.battery_j", "battery capacity, J", c.agri.battery_j));
  f.push_back(FMEAC_KEY("agri.pw_cmp_w", "computation power, W", c.agri.pw_cmp_w));
  f.push_back(FMEAC_KEY("agri.pw_ur_dbm", "receiver draw while a sensor uploads, dBm", c.agri.pw_ur_dbm));
  f.push_back(FMEAC_KEY("agri.comm_gating", "receiver draw only during uploads", c.agri.comm_gating));
  f.push_back(FMEAC_KEY("agri.return_margin", "return when battery < margin x predicted need", c.agri.return_margin));
  f.push_back(FMEAC_KEY("agri.alpha",
                        "reward weights: collection, height, boundary, collision, battery, separation, energy, homing",
                        c.agri.alpha));
  f.push_back(FMEAC_KEY("agri.clearance_target", "preferred height above terrain, m", c.agri.clearance_target));
  f.push_back(FMEAC_KEY("agri.d_safe", "safe separation, m", c.agri.d_safe));
  f.push_back(FMEAC_KEY("agri.n_near", "nearest sensors in the observation", c.agri.n_near));
  f.push_back(FMEAC_KEY("agri.r_adj", "graph edge radius, m", c.agri.r_adj));
  return f;
}

#undef FMEAC_KEY

const std::vector<Field>& fields() {
  static const std::vector<Field> table = build_fields();
  return table;
}

const Field* find_field(const std::string& key) {
  for (const Field& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

}  // namespace

ExperimentConfig ExperimentConfig::paper(Application app) {
  ExperimentConfig c;
  c.application = app;
  c.eac.gamma = 0.99;
  c.eac.actor_hidden = {128, 128, 128};
  c.eac.critic_hidden = {128, 128, 128};
  c.eac.buffer_capacity = std::size_t{1} << 16;
  c.gnn_lr = 1e-3;
  c.gnn.beta = 0.01;
  c.pan.beta = 0.01;
  c.pan_train.learning_rate = 1e-4;
  c.pan_train.batch_size = 512;
  if (app == Application::urban) {
    c.feature_model = eac::FeatureKind::gnn;
    c.eac.mode = eac::ActorMode::maxent;
    c.eac.mode_split = false;
    c.eac.lr_actor = 1e-5;
    c.eac.lr_critic_p = 1e-4;
    c.eac.lr_critic_s = 1e-5;
    c.eac.xi = 0.01;
    c.eac.batch_size = 256;
    c.eac.secondary_scale = 10.0;
    c.episodes = 1000;
    c.pan_train.epochs = 100;
    c.use_bpn = false;
  } else {
    c.feature_model = eac::FeatureKind::pan;
    c.eac.mode = eac::ActorMode::deterministic;
    c.eac.mode_split = true;
    c.eac.lr_actor = 1e-4;
    c.eac.lr_critic_p = 1e-5;
    c.eac.lr_critic_s = 1e-5;
    c.eac.xi = 0.005;
    c.eac.batch_size = 128;
    c.eac.secondary_scale = 1.0;
    c.episodes = 10000;
    c.pan_train.epochs = 1000;
    c.use_bpn = true;
    c.bpn_train.learning_rate = 1e-5;
  }
  return c;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

std::vector<std::string> preset_names() { return {"toy-agri", "toy-urban", "paper-scale", "paper-scale-urban"}; }

ExperimentConfig preset(const std::string& name) {
  if (name == "paper-scale") return ExperimentConfig::paper(Application::agri);
  if (name == "paper-scale-urban") return ExperimentConfig::paper(Application::urban);

  const auto small_agent = [](ExperimentConfig& c) {
    c.eac.actor_hidden = {64, 64};
    c.eac.critic_hidden = {64, 64};
    c.eac.batch_size = 64;
    c.eac.lr_actor = 1e-3;
    c.eac.lr_critic_p = 1e-3;
    c.eac.lr_critic_s = 1e-3;
    c.warmup_steps = 500;
    c.gnn.hidden = 32;
    c.gnn.feature_dim = 16;
    c.pan.hidden = 32;
    c.pan.feature_dim = 16;
    c.pan.head_hidden = 32;
    c.pan_train.epochs = 40;
    c.pan_train.batch_size = 32;
    c.pan_train.learning_rate = 1e-3;
    c.bpn.hidden = {32, 32};
    c.bpn_train.epochs = 100;
    c.bpn_train.batch_size = 64;
    c.bpn_train.learning_rate = 1e-3;
    c.bpn_samples_per_map = 300;
  };

  if (name == "toy-agri") {
    ExperimentConfig c = ExperimentConfig::paper(Application::agri);
    small_agent(c);
    c.episodes = 300;
    auto& a = c.agri;
    a.extent_x = a.extent_y = 50.0;
    a.z_min = 8.0;
    a.z_max = 40.0;
    a.cell_size = 5.0;
    a.v_max = {5.0, 5.0, 2.0};
    a.ws_per_side = 4;
    a.t_update_choices = {8.0, 10.0, 12.0};
    a.connection_radius = 20.0;
    a.terrain_max = 5.0;
    a.clearance_target = 10.0;
    a.d_end = 12.0;
    a.n_uav = 1;
    a.t_f_end = 40.0;
    a.t_r_end = 20.0;
    a.battery_j = 1000.0;
    a.ds_min_separation = 20.0;
    a.r_adj = 25.0;
    return c;
  }
  if (name == "toy-urban") {
    ExperimentConfig c = ExperimentConfig::paper(Application::urban);
    small_agent(c);
    c.episodes = 200;
    c.eac.xi = 0.005;
    auto& u = c.urban;
    u.extent_x = u.extent_y = 300.0;
    u.n_uav = 2;
    u.k_end = 60;
    u.n_gd_min = 5;
    u.n_gd_max = 10;
    u.n_pd_min = 0;
    u.n_pd_max = 5;
    u.min_route_length = 150.0;
    u.block_pitch = 60.0;
    u.r_adj = 100.0;
    return c;
  }
  std::string known;
  for (const auto& n : preset_names()) known += " " + n;
  throw ConfigError("unknown preset '" + name + "' (known:" + known + ")");
}

ExperimentConfig parse_config(const std::string& text) {
  struct Entry {
    std::string key, value;
    int line;
  };
  std::vector<Entry> entries;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    Entry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    if (e.key != "preset" && !find_field(e.key)) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + e.key + "'");
    }
    if (!seen.insert(e.key).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": key '" + e.key + "' repeated");
    }
    entries.push_back(std::move(e));
  }

  const auto value_of = [&](const std::string& key) -> const Entry* {
    for (const auto& e : entries) {
      if (e.key == key) return &e;
    }
    return nullptr;
  };
  const auto fail = [](const Entry& e, const std::exception& err) {
    return ConfigError("line " + std::to_string(e.line) + " (" + e.key + "): " + err.what());
  };

  ExperimentConfig cfg;
  try {
    if (const Entry* p = value_of("preset")) {
      cfg = preset(p->value);
    } else {
      Application app = Application::agri;
      if (const Entry* a = value_of("application")) parse(a->value, app);
      cfg = ExperimentConfig::paper(app);
    }
  } catch (const ConfigError& err) {
    const Entry* e = value_of("preset") ? value_of("preset") : value_of("application");
    throw fail(*e, err);
  }
  for (const auto& e : entries) {
    if (e.key == "preset") continue;
    try {
      find_field(e.key)->set(cfg, e.value);
    } catch (const ConfigError& err) {
      throw fail(e, err);
    } catch (const std::exception& err) {
      throw fail(e, err);
    }
  }
  return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  for (const Field& f : fields()) os << f.key << " = " << f.get(cfg) << '\n';
  return os.str();
}

ExperimentConfig load_config(const std::string& path_or_preset) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), path_or_preset) != names.end()) return preset(path_or_preset);
  if (!std::filesystem::exists(path_or_preset)) {
    throw ConfigError("config '" + path_or_preset + "' is neither a file nor a preset");
  }
  return parse_config(read_text_file(path_or_preset));
}

std::vector<ConfigKey> config_keys() {
  std::vector<ConfigKey> out{{"preset", "start from a built-in preset instead of the application defaults"}};
  for (const Field& f : fields()) out.push_back({f.key, f.doc});
  return out;
}

}  // namespace fmeac::harness
