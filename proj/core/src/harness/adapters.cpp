#include "fmeac/harness/adapters.hpp"

#include "fmeac/common/errors.hpp"

namespace fmeac::harness {

namespace {

template <class Map>
const Map* pick(const std::vector<Map>& maps, std::size_t episode) {
  if (maps.empty()) throw ContractError("adapter: no maps");
  return &maps[episode % maps.size()];
}

Vec3 velocity_of(const std::vector<double>& a) {
  if (a.size() < 3) throw DimensionError("adapter: action needs three velocity components");
  return {a[0], a[1], a[2]};
}

}  // namespace

// ---------------------------------------------------------------- urban

UrbanAdapter::UrbanAdapter(urban::UrbanConfig cfg, std::vector<urban::UrbanMap> maps)
    : cfg_(std::move(cfg)), maps_(std::move(maps)) {
  reset(0);
}

void UrbanAdapter::reset(std::size_t episode) {
  map_ = pick(maps_, episode);
  state_ = urban::reset(*map_, cfg_);
  qos_sum_ = 0.0;
  steps_ = 0;
}

std::vector<double> UrbanAdapter::observe(std::size_t i) const { return urban::observe(state_, *map_, cfg_, i, {}); }

features::GraphSnapshot UrbanAdapter::graph() const { return urban::graph_snapshot(state_, *map_, cfg_); }

nn::Tensor UrbanAdapter::points() const { return urban::point_array(*map_, cfg_, state_.devices); }

std::vector<eac::AgentStep> UrbanAdapter::step(const std::vector<std::vector<double>>& actions, Rng&) {
  const std::size_t n = agent_count();
  const std::size_t m = alloc_dim();
  if (actions.size() != n) throw DimensionError("urban adapter: one action per UAV required");
  std::vector<urban::UrbanAction> act(n);
  for (std::size_t i = 0; i < n; ++i) {
    act[i].velocity = velocity_of(actions[i]);
    act[i].delta.assign(m, 0.0);
    for (std::size_t j = 0; j < m && 3 + j < actions[i].size(); ++j) act[i].delta[j] = actions[i][3 + j];
  }
  const urban::UrbanStepResult res = urban::step(state_, *map_, cfg_, act);
  std::vector<eac::AgentStep> out(n);
  double qos = 0.0;
  int active = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!res.active[i]) continue;
    const auto& r = res.rewards[i];
    out[i] = {r.total, r.secondary, r.total, r.secondary, static_cast<bool>(res.done[i]), -1, -1};
    qos += r.secondary;
    ++active;
  }
  if (active > 0) qos_sum_ += qos / active;
  ++steps_;
  return out;
}

eac::EpisodeSummary UrbanAdapter::summary() const {
  eac::EpisodeSummary s;
  if (steps_ > 0) s.qos_or_aoi = qos_sum_ / steps_;
  double total = 0.0;
  for (const auto& u : state_.uavs) {
    total += u.arrived ? (u.arrival_step + 1) * cfg_.dt : steps_ * cfg_.dt;
  }
  s.completion_time_s = total / static_cast<double>(state_.uavs.size());
  return s;
}

std::vector<Vec3> UrbanAdapter::positions() const {
  std::vector<Vec3> p;
  for (const auto& u : state_.uavs) p.push_back(u.position);
  return p;
}

// ---------------------------------------------------------------- agri

AgriAdapter::AgriAdapter(agri::AgriConfig cfg, std::vector<agri::AgriMap> maps)
    : cfg_(std::move(cfg)), maps_(std::move(maps)) {
  reset(0);
}

void AgriAdapter::reset(std::size_t episode) {
  map_ = pick(maps_, episode);
  state_ = agri::reset(*map_, cfg_);
  aoi_sum_ = 0.0;
  steps_ = 0;
}

std::vector<double> AgriAdapter::observe(std::size_t i) const { return agri::observe(state_, *map_, cfg_, i); }

features::GraphSnapshot AgriAdapter::graph() const { return agri::graph_snapshot(state_, *map_, cfg_); }

nn::Tensor AgriAdapter::points() const { return agri::point_array(state_, *map_, cfg_); }

std::vector<eac::AgentStep> AgriAdapter::step(const std::vector<std::vector<double>>& actions, Rng& rng) {
  const std::size_t n = agent_count();
  if (actions.size() != n) throw DimensionError("agri adapter: one action per UAV required");
  std::vector<Vec3> act(n);
  std::vector<int> mode_before(n);
  for (std::size_t i = 0; i < n; ++i) {
    act[i] = velocity_of(actions[i]);
    mode_before[i] = state_.uavs[i].mode == agri::Mode::rth ? 1 : 0;
  }
  agri::ReturnPredictor predictor;
  if (bpn_) predictor = [this](std::span<const double> s) { return bpn_->predict(s); };
  const agri::AgriStepResult res = agri::step(state_, *map_, cfg_, act, rng, predictor);

  std::vector<eac::AgentStep> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!res.active[i]) continue;
    const double total = res.rewards[i].total;
    const int next_mode = state_.uavs[i].mode == agri::Mode::rth ? 1 : 0;
    // Both streams carry the full reward; the task mode decides which critic pair learns from it.
    out[i] = {total, total, total, mode_before[i] == 1 ? total : 0.0, static_cast<bool>(res.done[i]),
              mode_before[i], next_mode};
  }
  aoi_sum_ += res.mean_aoi;
  ++steps_;
  return out;
}

eac::EpisodeSummary AgriAdapter::summary() const {
  eac::EpisodeSummary s;
  if (steps_ > 0) s.qos_or_aoi = aoi_sum_ / steps_;
  s.completion_time_s = steps_ * cfg_.dt;
  return s;
}

std::vector<Vec3> AgriAdapter::positions() const {
  std::vector<Vec3> p;
  for (const auto& u : state_.uavs) p.push_back(u.position);
  return p;
}

}  // namespace fmeac::harness
