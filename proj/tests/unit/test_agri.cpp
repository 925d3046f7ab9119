#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fmeac/agri/agri_env.hpp"
#include "fmeac/common/errors.hpp"

using namespace fmeac;
using namespace fmeac::agri;

namespace {

AgriConfig toy_config() {
  AgriConfig c;
  c.extent_x = c.extent_y = 50.0;
  c.z_min = 8.0;
  c.z_max = 40.0;
  c.cell_size = 5.0;
  c.v_max = {5.0, 5.0, 2.0};
  c.ws_per_side = 4;
  c.t_update_choices = {8.0, 10.0, 12.0};
  c.connection_radius = 20.0;
  c.terrain_max = 5.0;
  c.clearance_target = 10.0;
  c.d_end = 12.0;
  c.n_uav = 2;
  c.t_f_end = 40.0;
  c.t_r_end = 20.0;
  c.battery_j = 1000.0;
  c.ds_min_separation = 20.0;
  c.r_adj = 25.0;
  return c;
}

// Flat field with one sensor and a UAV parked right above it.
AgriMap single_sensor_map(const AgriConfig& cfg) {
  AgriMap m;
  m.terrain = Heightfield(10, 10, 5.0, 0.0);
  m.sensors.push_back({{25.0, 25.0, 1.0}, 10.0, 0.0, 0.0});
  m.docks.push_back({5.0, 5.0, 0.0});
  m.starts.push_back({25.0, 25.0, cfg.z_min});
  return m;
}

double never_return(std::span<const double>) { return 0.0; }

double hand_los_path_loss(double d, double f_hz) { return 28.0 + 22.0 * std::log10(d) + 20.0 * std::log10(f_hz / 1e9); }

}  // namespace

TEST(AgriMap, PaperLayout) {
  const AgriConfig cfg;
  const AgriMap m = generate_map(0, cfg);
  ASSERT_EQ(m.sensors.size(), 400u);
  EXPECT_EQ(m.docks.size(), 4u);
  EXPECT_EQ(m.starts.size(), 4u);
  EXPECT_DOUBLE_EQ(m.sensors[1].position.x - m.sensors[0].position.x, 20.0);
  EXPECT_DOUBLE_EQ(m.sensors[20].position.y - m.sensors[0].position.y, 20.0);
  for (const auto& s : m.sensors) {
    EXPECT_TRUE(s.t_update == 40.0 || s.t_update == 50.0 || s.t_update == 60.0);
    EXPECT_GE(s.phase, 0.0);
    EXPECT_LT(s.phase, s.t_update);
  }
  const auto [lo, hi] = std::minmax_element(m.terrain.data().begin(), m.terrain.data().end());
  EXPECT_DOUBLE_EQ(*lo, 0.0);
  EXPECT_DOUBLE_EQ(*hi, cfg.terrain_max);
  for (const auto& p : m.starts) EXPECT_TRUE(cfg.bounds().contains(p));
}

TEST(AgriMap, DeterministicDistinctAndRoundTrip) {
  const AgriConfig cfg;
  EXPECT_EQ(serialize_map(generate_map(5, cfg)), serialize_map(generate_map(5, cfg)));
  std::set<std::string> seen;
  for (int s = 0; s < 10; ++s) seen.insert(serialize_map(generate_map(s, cfg)));
  EXPECT_EQ(seen.size(), 10u);
  const AgriMap m = generate_map(3, toy_config());
  const std::string text = serialize_map(m);
  EXPECT_EQ(text.rfind("FMEAC-MAP agri v1\n", 0), 0u);
  EXPECT_EQ(parse_map(text), m);
  EXPECT_THROW(parse_map("FMEAC-MAP urban v1\nseed 0\n"), ContractError);
}

TEST(AoiTick, SaturatesAtCap) {
  WsState ws{0.8, 100.0, 0.0, false};
  EXPECT_EQ(aoi_tick(ws, 1.0, 40.0, 0.8).aoi, 0.8);
}

TEST(AoiTick, FullIntervalReachesCap) {
  EXPECT_EQ(aoi_tick(WsState{}, 40.0, 40.0, 0.8).aoi, 0.8);
}

TEST(AoiTick, FortyUnitTicksAreExact) {
  WsState ws;
  for (int i = 0; i < 40; ++i) ws = aoi_tick(ws, 1.0, 40.0, 0.8);
  EXPECT_EQ(ws.aoi, 0.8);
}

TEST(AoiTick, NeverDecreasesAndBroadcastsOncePerPeriod) {
  WsState ws;
  int requests = 0;
  for (int i = 0; i < 100; ++i) {
    WsState next = aoi_tick(ws, 1.0, 10.0, 0.8);
    EXPECT_GE(next.aoi, ws.aoi);
    if (next.pending && !ws.pending) ++requests;
    next.pending = false;
    ws = next;
  }
  EXPECT_EQ(requests, 10);
}

TEST(AoiTick, RejectsNonPositiveStep) {
  EXPECT_THROW(aoi_tick(WsState{}, 0.0, 40.0, 0.8), ContractError);
}

TEST(Transmit, PerfectAndDeadChannels) {
  Rng rng = make_rng(1);
  for (int i = 0; i < 1000; ++i) {
    WsState ws{0.5, 20.0, 0.0, true};
    EXPECT_TRUE(transmit(ws, 0.0, rng));
    EXPECT_EQ(ws.aoi, 0.0);
    EXPECT_FALSE(ws.pending);
    WsState dead{0.5, 20.0, 0.0, true};
    EXPECT_FALSE(transmit(dead, 1.0, rng));
    EXPECT_EQ(dead.aoi, 0.5);
    EXPECT_FALSE(dead.pending);
  }
}

TEST(Transmit, MonteCarloSuccessRate) {
  Rng rng = make_rng(2);
  const double plr = 0.0952;
  int ok = 0;
  const int trials = 100000;
  for (int i = 0; i < trials; ++i) {
    WsState ws{0.5, 20.0, 0.0, true};
    ok += transmit(ws, plr, rng) ? 1 : 0;
  }
  EXPECT_NEAR(static_cast<double>(ok) / trials, 1.0 - plr, 0.005 * (1.0 - plr));
}

TEST(Uplink, MatchesHandLinkBudget) {
  const AgriConfig cfg;
  const AgriMap m = single_sensor_map(cfg);
  const Vec3 ws = m.sensors[0].position;
  const Vec3 uav{ws.x + 40.0, ws.y, ws.z + 30.0};
  const double pl = hand_los_path_loss(50.0, 2.8e9);
  const double signal = std::pow(10.0, (-25.0 - pl - 30.0) / 10.0);
  const double noise = 1.38e-23 * 298.0 * 2e6;
  const double sinr = signal / noise;
  EXPECT_NEAR(uplink_sinr(m, cfg, ws, uav, {}), sinr, 1e-9 * sinr);
  const double ber = 0.5 * std::exp(-sinr);
  EXPECT_NEAR(uplink_plr(sinr, cfg), 1.0 - std::pow(1.0 - ber, 256.0), 1e-12);
}

TEST(Uplink, DistanceAndInterferenceHurt) {
  const AgriConfig cfg;
  const AgriMap m = single_sensor_map(cfg);
  const Vec3 ws = m.sensors[0].position;
  double prev = std::numeric_limits<double>::infinity();
  for (double d = 0.0; d <= 120.0; d += 10.0) {
    const double s = uplink_sinr(m, cfg, ws, {ws.x + d, ws.y, 40.0}, {});
    EXPECT_LT(s, prev);
    prev = s;
  }
  const Vec3 uav{ws.x, ws.y, 40.0};
  const std::vector<Vec3> other{{ws.x + 30.0, ws.y, 1.0}};
  EXPECT_LT(uplink_sinr(m, cfg, ws, uav, other), uplink_sinr(m, cfg, ws, uav, {}));
}

TEST(AgriStep, StationaryCollectionFiresOncePerBroadcast) {
  AgriConfig cfg = toy_config();
  cfg.n_uav = 1;
  cfg.battery_j = 1e6;
  cfg.t_f_end = 1000.0;
  const AgriMap m = single_sensor_map(cfg);
  ASSERT_LT(uplink_plr(uplink_sinr(m, cfg, m.sensors[0].position, m.starts[0], {}), cfg), 1e-12);
  AgriState s = reset(m, cfg);
  Rng rng = make_rng(3);
  const Vec3 hover{};
  std::vector<int> fired;
  for (int k = 0; k < 35; ++k) {
    const auto r = step(s, m, cfg, std::span<const Vec3>(&hover, 1), rng, never_return);
    if (r.rewards[0].collected) {
      fired.push_back(k);
      EXPECT_DOUBLE_EQ(r.rewards[0].collection, cfg.alpha[0] * cfg.aoi_max);
    } else {
      EXPECT_EQ(r.rewards[0].collection, 0.0);
    }
  }
  EXPECT_EQ(fired, (std::vector<int>{9, 19, 29}));
}

TEST(AgriStep, HomingProgressIsPositive) {
  AgriConfig cfg = toy_config();
  cfg.n_uav = 1;
  const AgriMap m = generate_map(4, cfg);
  AgriState s = reset(m, cfg);
  s.uavs[0].mode = Mode::rth;
  s.uavs[0].position = {cfg.extent_x - m.docks[0].x > m.docks[0].x ? cfg.extent_x : 0.0, m.docks[0].y, 30.0};
  Rng rng = make_rng(4);
  int steps = 0;
  while (!s.episode_done()) {
    const Vec3 a = homing_action(m, cfg, s.uavs[0].position, 0);
    const auto r = step(s, m, cfg, std::span<const Vec3>(&a, 1), rng);
    EXPECT_GT(r.rewards[0].homing, 0.0);
    EXPECT_LT(r.rewards[0].energy, 0.0);
    ++steps;
  }
  EXPECT_TRUE(s.uavs[0].arrived);
  EXPECT_LT(steps, 20);
}

namespace {

struct UavSnap {
  Vec3 pos;
  double remaining;
  Mode mode;
  bool done;
};

double oracle_height(const AgriMap& m, const AgriConfig& c, Vec3 p) {
  return std::abs(p.z - m.terrain.height_at(p.x, p.y) - c.clearance_target);
}

double oracle_nearest(const std::vector<UavSnap>& u, const std::vector<bool>& active, std::size_t i, double none) {
  double best = none;
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (j != i && active[j]) best = std::min(best, distance(u[j].pos, u[i].pos));
  }
  return best;
}

}  // namespace

TEST(AgriStep, ReplayOracleMatchesRewards) {
  const AgriConfig cfg = toy_config();
  const AgriMap m = generate_map(6, cfg);
  AgriState s = reset(m, cfg);
  Rng rng = make_rng(6), actions_rng = make_rng(7);
  const auto& al = cfg.alpha;
  const double none = cfg.diagonal();
  double env_total = 0.0, oracle_total = 0.0;
  int rth_steps = 0;
  while (!s.episode_done()) {
    std::vector<Vec3> a;
    for (std::size_t i = 0; i < s.uavs.size(); ++i) {
      a.push_back(s.uavs[i].mode == Mode::rth ? homing_action(m, cfg, s.uavs[i].position, i)
                                              : Vec3{uniform(actions_rng, -6, 6), uniform(actions_rng, -6, 6),
                                                     uniform(actions_rng, -3, 3)});
    }
    std::vector<UavSnap> before, after;
    for (const auto& u : s.uavs) before.push_back({u.position, u.ledger.remaining_j, u.mode, u.done});
    const auto sensors_before = s.sensors;
    const auto r = step(s, m, cfg, a, rng);
    for (const auto& u : s.uavs) after.push_back({u.position, u.ledger.remaining_j, u.mode, u.done});
    std::vector<bool> active;
    for (const auto& b : before) active.push_back(!b.done);

    // deliveries: readings whose age restarted, credited to the nearest active UAV in range
    std::vector<double> credited(s.uavs.size(), 0.0);
    for (std::size_t j = 0; j < s.sensors.size(); ++j) {
      if (!(s.sensors[j].age_s == 0.0)) continue;
      const double aoi = std::min((sensors_before[j].age_s + cfg.dt) / m.sensors[j].t_update, 1.0) * cfg.aoi_max;
      std::size_t best = s.uavs.size();
      double best_d = cfg.connection_radius;
      for (std::size_t i = 0; i < s.uavs.size(); ++i) {
        const double d = std::hypot(after[i].pos.x - m.sensors[j].position.x, after[i].pos.y - m.sensors[j].position.y);
        if (active[i] && d <= best_d && (best == s.uavs.size() || d < best_d)) {
          best = i;
          best_d = d;
        }
      }
      ASSERT_LT(best, s.uavs.size());
      credited[best] += aoi;
    }

    for (std::size_t i = 0; i < s.uavs.size(); ++i) {
      if (!active[i]) {
        EXPECT_EQ(r.rewards[i].total, 0.0);
        continue;
      }
      const Vec3 v{std::clamp(a[i].x, -cfg.v_max.x, cfg.v_max.x), std::clamp(a[i].y, -cfg.v_max.y, cfg.v_max.y),
                   std::clamp(a[i].z, -cfg.v_max.z, cfg.v_max.z)};
      const bool clamped = !(before[i].pos + v * cfg.dt == after[i].pos);
      const double du_b = oracle_nearest(before, active, i, none), du_a = oracle_nearest(after, active, i, none);
      const double dis_b = distance(before[i].pos, m.docks[i]), dis_a = distance(after[i].pos, m.docks[i]);
      double expect = al[0] * credited[i] + al[1] * (oracle_height(m, cfg, before[i].pos) - oracle_height(m, cfg, after[i].pos)) -
                      al[2] * (clamped ? 1.0 : 0.0) + al[5] * (du_b - du_a);
      if (before[i].mode == Mode::col) {
        expect -= al[3] * (du_a < cfg.d_safe ? 1.0 : 0.0);
      } else {
        ++rth_steps;
        expect += al[6] * (after[i].remaining - before[i].remaining) + al[7] * (dis_b - dis_a);
        if (dis_a <= cfg.d_end) expect -= al[4] * std::max(after[i].remaining, 0.0) / cfg.battery_j;
      }
      EXPECT_NEAR(r.rewards[i].total, expect, 1e-9 * (1.0 + std::abs(expect)));
      env_total += r.rewards[i].total;
      oracle_total += expect;
    }
  }
  EXPECT_GT(rth_steps, 0);
  EXPECT_NEAR(env_total, oracle_total, 1e-9 * (1.0 + std::abs(oracle_total)));
}

TEST(AgriStep, InvariantsUnderRandomFlight) {
  const AgriConfig cfg = toy_config();
  for (int seed = 0; seed < 5; ++seed) {
    const AgriMap m = generate_map(10 + seed, cfg);
    AgriState s = reset(m, cfg);
    Rng rng = make_rng(seed), act = make_rng(100 + seed);
    std::vector<double> aoi_log;
    double reported = 0.0;
    int steps = 0;
    while (!s.episode_done()) {
      std::vector<Vec3> a(s.uavs.size());
      for (auto& v : a) v = {uniform(act, -8, 8), uniform(act, -8, 8), uniform(act, -4, 4)};
      const auto before = s;
      const auto r = step(s, m, cfg, a, rng);
      ++steps;
      double sum = 0.0;
      for (std::size_t j = 0; j < s.sensors.size(); ++j) {
        const double aoi = s.sensors[j].aoi;
        EXPECT_GE(aoi, 0.0);
        EXPECT_LE(aoi, cfg.aoi_max);
        if (aoi < before.sensors[j].aoi) EXPECT_EQ(aoi, 0.0);
        sum += aoi;
      }
      aoi_log.push_back(sum / static_cast<double>(s.sensors.size()));
      reported += r.mean_aoi;
      for (std::size_t i = 0; i < s.uavs.size(); ++i) {
        if (before.uavs[i].mode == Mode::rth) EXPECT_EQ(s.uavs[i].mode, Mode::rth);
        EXPECT_TRUE(cfg.bounds().contains(s.uavs[i].position));
        if (before.uavs[i].done) EXPECT_EQ(s.uavs[i].position, before.uavs[i].position);
      }
    }
    double scan = 0.0;
    for (double x : aoi_log) scan += x;
    EXPECT_NEAR(scan / steps, reported / steps, 1e-12);
    EXPECT_LE(steps, static_cast<int>(cfg.t_f_end + cfg.t_r_end));
  }
}

TEST(AgriStep, CollectionTimeoutEndsEpisode) {
  AgriConfig cfg = toy_config();
  cfg.n_uav = 1;
  cfg.battery_j = 1e6;
  const AgriMap m = generate_map(8, cfg);
  AgriState s = reset(m, cfg);
  Rng rng = make_rng(8);
  const Vec3 hover{};
  int steps = 0;
  while (!s.episode_done()) {
    step(s, m, cfg, std::span<const Vec3>(&hover, 1), rng, never_return);
    ++steps;
  }
  EXPECT_EQ(steps, 40);
  EXPECT_EQ(s.uavs[0].mode, Mode::col);
  EXPECT_FALSE(s.uavs[0].arrived);
}

TEST(AgriStep, LowBatterySwitchesToReturn) {
  AgriConfig cfg = toy_config();
  cfg.n_uav = 1;
  const AgriMap m = generate_map(9, cfg);
  AgriState s = reset(m, cfg);
  Rng rng = make_rng(9);
  const Vec3 hover{};
  step(s, m, cfg, std::span<const Vec3>(&hover, 1), rng, [](std::span<const double>) { return 1e9; });
  EXPECT_EQ(s.uavs[0].mode, Mode::rth);
  EXPECT_EQ(s.uavs[0].switch_step, 1);
}

TEST(AgriStep, ShapeErrors) {
  const AgriConfig cfg = toy_config();
  const AgriMap m = generate_map(1, cfg);
  AgriState s = reset(m, cfg);
  Rng rng = make_rng(1);
  const std::vector<Vec3> one(1);
  EXPECT_THROW(step(s, m, cfg, one, rng), ContractError);
  const std::vector<Vec3> nan(2, Vec3{std::nan(""), 0.0, 0.0});
  EXPECT_THROW(step(s, m, cfg, nan, rng), ContractError);
}

TEST(AgriObserve, Layout) {
  const AgriConfig cfg;
  EXPECT_EQ(col_observation_dim(cfg), 39u);
  EXPECT_EQ(rth_observation_dim(cfg), 43u);
  EXPECT_EQ(observation_dim(cfg), 44u);
  const AgriMap m = generate_map(0, cfg);
  AgriState s = reset(m, cfg);
  EXPECT_EQ(observe_col(s, m, cfg, 0).size(), 39u);
  EXPECT_EQ(observe_rth(s, m, cfg, 0).size(), 43u);
  const auto o = observe(s, m, cfg, 0);
  ASSERT_EQ(o.size(), 44u);
  for (std::size_t k = 39; k < 44; ++k) EXPECT_EQ(o[k], 0.0);
  s.uavs[0].mode = Mode::rth;
  EXPECT_EQ(observe(s, m, cfg, 0).back(), 1.0);
}

TEST(AgriObserve, FreshFieldHasZeroAoiBlock) {
  const AgriConfig cfg;
  const AgriMap m = generate_map(1, cfg);
  AgriState s = reset(m, cfg);
  for (auto& ws : s.sensors) ws = WsState{};
  const auto o = observe_col(s, m, cfg, 2);
  for (int n = 0; n < cfg.n_near; ++n) EXPECT_EQ(o[3 + 4 * static_cast<std::size_t>(n)], 0.0);
}

TEST(AgriObserve, AtDockDistanceIsZero) {
  const AgriConfig cfg;
  const AgriMap m = generate_map(1, cfg);
  AgriState s = reset(m, cfg);
  s.uavs[1].position = m.docks[1];
  EXPECT_EQ(observe_rth(s, m, cfg, 1).back(), 0.0);
}

TEST(AgriObserve, NearestSensorsSortedWithIndexTies) {
  const AgriConfig cfg;
  const AgriMap m = generate_map(2, cfg);
  const auto near = nearest_sensors(m, {20.0, 20.0, 50.0}, 4);
  // (20,20) is equidistant from the four surrounding grid sensors
  EXPECT_EQ(near, (std::vector<std::size_t>{0, 1, 20, 21}));
}

TEST(ReturnEnergy, AtLeastOneStepAndGrowsWithDistance) {
  const AgriConfig cfg;
  const AgriMap m = generate_map(3, cfg);
  const Vec3 d = m.docks[0];
  const Vec3 above{d.x, d.y, cfg.z_min};
  const double one = scripted_return_energy(m, cfg, above, 0);
  EXPECT_NEAR(one, energy::flight_power({}, cfg.body) + cfg.pw_cmp_w, 1e-9);
  const double dir = d.x < cfg.extent_x / 2 ? 1.0 : -1.0;
  double prev = one;
  for (double k = 50.0; k <= 150.0; k += 50.0) {
    const double e = scripted_return_energy(m, cfg, {d.x + dir * k, d.y, 60.0}, 0);
    EXPECT_GT(e, prev);
    prev = e;
  }
  EXPECT_EQ(return_state(m, cfg, above, 0).size(), kReturnStateDim);
}

TEST(AgriFeatures, GraphAndPoints) {
  const AgriConfig cfg;
  const AgriMap m = generate_map(4, cfg);
  const AgriState s = reset(m, cfg);
  const auto g = build_graph(s, m, cfg);
  EXPECT_EQ(g.node_count(), 404u);
  EXPECT_EQ(g.node_features.cols(), kGraphNodeDim);
  EXPECT_EQ(g.adjacency(0, 0), 0.0);
  const auto p = point_array(s, m, cfg);
  EXPECT_EQ(p.rows(), 400u);
  EXPECT_EQ(p.cols(), kPointDim);
  for (std::size_t j = 0; j < p.rows(); ++j) EXPECT_LE(p(j, 4), 1.0);
}
