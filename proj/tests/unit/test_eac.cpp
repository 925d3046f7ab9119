#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fmeac/common/errors.hpp"
#include "fmeac/eac/agent.hpp"
#include "fmeac/eac/replay.hpp"
#include "gradcheck.hpp"

using namespace fmeac;
using namespace fmeac::eac;
using nn::Tensor;

namespace {

EacConfig small_config(ActorMode mode, bool secondary = true, std::size_t feature_dim = 0) {
  EacConfig cfg;
  cfg.mode = mode;
  cfg.secondary_critics = secondary;
  cfg.obs_dim = 4;
  cfg.velocity_bounds = {2.0, 1.0};
  cfg.alloc_dim = mode == ActorMode::maxent ? 3 : 0;
  cfg.alloc_scale = 0.8;
  cfg.feature_dim = feature_dim;
  cfg.actor_hidden = {16, 16};
  cfg.critic_hidden = {16, 16};
  cfg.lr_actor = 1e-3;
  cfg.lr_critic_p = 1e-3;
  cfg.lr_critic_s = 1e-3;
  cfg.xi = 0.01;
  cfg.batch_size = 8;
  return cfg;
}

std::vector<double> random_vector(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = uniform(rng, lo, hi);
  return v;
}

std::vector<Transition> random_transitions(const EacConfig& cfg, std::size_t count, Rng& rng) {
  std::vector<Transition> out;
  for (std::size_t i = 0; i < count; ++i) {
    Transition t;
    t.obs = random_vector(cfg.obs_dim, rng);
    t.next_obs = random_vector(cfg.obs_dim, rng);
    for (std::size_t j = 0; j < cfg.velocity_dim(); ++j) {
      const double b = cfg.velocity_bounds[j];
      t.action.push_back(uniform(rng, -b, b));
    }
    if (cfg.mode == ActorMode::maxent && cfg.alloc_dim > 0) {
      const auto raw = random_vector(cfg.alloc_dim, rng, 0.0, 1.0);
      double sum = 0.0;
      for (double x : raw) sum += x;
      for (double x : raw) t.action.push_back(cfg.alloc_scale * x / sum);
    }
    t.reward = uniform(rng, -1.0, 1.0);
    t.secondary = uniform(rng, -1.0, 1.0);
    t.done = uniform(rng, 0.0, 1.0) < 0.25;
    t.feature = random_vector(cfg.feature_dim, rng);
    t.next_feature = random_vector(cfg.feature_dim, rng);
    out.push_back(std::move(t));
  }
  return out;
}

Batch batch_of(const std::vector<Transition>& items, std::size_t feature_dim) {
  std::vector<const Transition*> ptrs;
  for (const auto& t : items) ptrs.push_back(&t);
  return make_batch(ptrs, feature_dim);
}

Tensor normal_noise(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t = Tensor::matrix(rows, cols);
  for (double& x : t.data()) x = standard_normal(rng);
  return t;
}

// Turns a single-layer (hidden = {}) network into y = w.x + c.
void set_linear(nn::DenseNet& net, std::span<const double> w, double c) {
  auto p = net.mutable_parameters();
  ASSERT_EQ(p.size(), w.size() + 1);
  std::copy(w.begin(), w.end(), p.begin());
  p[w.size()] = c;
}

}  // namespace

// ---------------------------------------------------------------- replay

TEST(Replay, EvictsOldestAtCapacity) {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) {
    Transition t;
    t.reward = i;
    buf.push(t);
  }
  EXPECT_EQ(buf.size(), 3u);
  std::vector<double> kept;
  for (std::size_t i = 0; i < buf.size(); ++i) kept.push_back(buf.at(i).reward);
  std::sort(kept.begin(), kept.end());
  EXPECT_EQ(kept, (std::vector<double>{2, 3, 4}));
}

TEST(Replay, SamplingIsDeterministicForAFixedEngine) {
  ReplayBuffer buf(100);
  for (int i = 0; i < 50; ++i) {
    Transition t;
    t.reward = i;
    buf.push(t);
  }
  Rng a = make_rng(9), b = make_rng(9);
  EXPECT_EQ(buf.sample(32, a), buf.sample(32, b));
  EXPECT_THROW(ReplayBuffer(0), ContractError);
  EXPECT_THROW(ReplayBuffer(4).sample(1, a), ContractError);
}

TEST(Replay, BatchStacksFieldsAndZeroFillsMissingFeatures) {
  Rng rng = make_rng(1);
  const EacConfig cfg = small_config(ActorMode::deterministic);
  auto items = random_transitions(cfg, 5, rng);
  items[2].mode = 1;
  items[2].next_mode = 1;
  const Batch b = batch_of(items, 3);
  EXPECT_EQ(b.size(), 5u);
  EXPECT_EQ(b.obs(3, 1), items[3].obs[1]);
  EXPECT_EQ(b.action(4, 0), items[4].action[0]);
  EXPECT_EQ(b.done(1, 0), items[1].done ? 1.0 : 0.0);
  EXPECT_EQ(b.mode[2], 1);
  EXPECT_EQ(b.feature.cols(), 3u);
  for (double x : b.feature.data()) EXPECT_EQ(x, 0.0);
}

// ---------------------------------------------------------------- targets

TEST(Targets, HandExampleTakesTheSmallerTargetCritic) {
  EacConfig cfg = small_config(ActorMode::deterministic, false);
  cfg.obs_dim = 1;
  cfg.velocity_bounds = {1.0};
  cfg.actor_hidden = {};
  cfg.critic_hidden = {};
  cfg.gamma = 0.99;
  Rng rng = make_rng(2);
  Agent agent(cfg, rng);
  set_linear(agent.mutable_target(qp1), std::vector<double>{0.0, 0.0}, 2.0);
  set_linear(agent.mutable_target(qp2), std::vector<double>{0.0, 0.0}, 3.0);

  Transition t;
  t.obs = {0.3};
  t.next_obs = {-0.4};
  t.action = {0.1};
  t.reward = 1.0;
  std::vector<Transition> items{t, t};
  items[1].done = true;
  const Targets y = agent.compute_targets(batch_of(items, 0), Tensor::matrix(2, 1));
  EXPECT_DOUBLE_EQ(y.primary(0, 0), 2.98);
  EXPECT_EQ(y.primary(1, 0), 1.0);
}

class TargetsBruteForce : public ::testing::TestWithParam<ActorMode> {};

TEST_P(TargetsBruteForce, MatchesRowByRowRecomputation) {
  const ActorMode mode = GetParam();
  const EacConfig cfg = small_config(mode, true, 2);
  Rng rng = make_rng(3);
  Agent agent(cfg, rng);
  // Distinct targets so that the min actually switches between critics.
  for (std::size_t i = 0; i < kCriticCount; ++i) {
    for (double& p : agent.mutable_target(i).mutable_parameters()) p += uniform(rng, -0.1, 0.1);
  }
  const auto items = random_transitions(cfg, 64, rng);
  const Batch batch = batch_of(items, cfg.feature_dim);
  const Tensor noise = agent.target_noise(64, rng);
  const Targets y = agent.compute_targets(batch, noise);

  const std::size_t v = cfg.velocity_dim();
  int differ = 0;
  for (std::size_t r = 0; r < 64; ++r) {
    const Transition& t = items[r];
    // Next action for this row alone.
    const auto out = agent.actor().forward(Tensor::row_vector(t.next_obs));
    std::vector<double> a;
    double log_prob = 0.0;
    if (mode == ActorMode::maxent) {
      for (std::size_t j = 0; j < v; ++j) {
        const double b = cfg.velocity_bounds[j];
        const double u = out[0](0, j) + std::exp(out[0](0, v + j)) * noise(r, j);
        a.push_back(b * std::tanh(u));
        const double z = noise(r, j);
        log_prob += -0.5 * z * z - out[0](0, v + j) - 0.5 * std::log(2.0 * M_PI) - std::log(b) -
                    nn::log_one_minus_tanh_sq(u);
      }
      a.insert(a.end(), out[1].row(0).begin(), out[1].row(0).end());
    } else {
      for (std::size_t j = 0; j < v; ++j) {
        const double b = cfg.velocity_bounds[j];
        a.push_back(std::clamp(out[0](0, j) + noise(r, j), -b, b));
      }
    }
    std::vector<double> x = t.next_obs;
    x.insert(x.end(), a.begin(), a.end());
    x.insert(x.end(), t.next_feature.begin(), t.next_feature.end());
    const Tensor in = Tensor::row_vector(x);
    const auto q = [&](std::size_t c) { return agent.target(c).forward(in)[0](0, 0); };
    const double entropy = mode == ActorMode::maxent ? cfg.temperature * log_prob : 0.0;
    const double cont = t.done ? 0.0 : 1.0;
    const double yp = t.reward + cfg.gamma * cont * (std::min(q(qp1), q(qp2)) - entropy);
    const double ys = t.secondary + cfg.gamma * cont * (std::min(q(qs1), q(qs2)) - entropy);
    if (mode == ActorMode::deterministic) {
      EXPECT_EQ(y.primary(r, 0), yp) << "row " << r;
      EXPECT_EQ(y.secondary(r, 0), ys) << "row " << r;
    } else {
      // the log-density is summed in a different order here
      EXPECT_NEAR(y.primary(r, 0), yp, 1e-12 * (1.0 + std::abs(yp))) << "row " << r;
      EXPECT_NEAR(y.secondary(r, 0), ys, 1e-12 * (1.0 + std::abs(ys))) << "row " << r;
    }
    if (!t.done) {
      // clipped double-Q: never above either target critic
      EXPECT_LE(yp, t.reward + cfg.gamma * (q(qp1) - entropy) + 1e-12);
      EXPECT_LE(yp, t.reward + cfg.gamma * (q(qp2) - entropy) + 1e-12);
      differ += q(qp1) != q(qp2) ? 1 : 0;
    }
  }
  EXPECT_GT(differ, 0);
}

INSTANTIATE_TEST_SUITE_P(BothModes, TargetsBruteForce,
                         ::testing::Values(ActorMode::maxent, ActorMode::deterministic));

TEST(Targets, DeterministicSmoothingNoiseIsClipped) {
  const EacConfig cfg = small_config(ActorMode::deterministic);
  Rng rng = make_rng(4);
  Agent agent(cfg, rng);
  const Tensor noise = agent.target_noise(2000, rng);
  double biggest = 0.0;
  for (std::size_t r = 0; r < noise.rows(); ++r) {
    for (std::size_t j = 0; j < 2; ++j) {
      const double b = cfg.velocity_bounds[j];
      EXPECT_LE(std::abs(noise(r, j)), cfg.target_noise_clip * b);
      biggest = std::max(biggest, std::abs(noise(r, j)) / b);
    }
  }
  EXPECT_DOUBLE_EQ(biggest, cfg.target_noise_clip);
}

TEST(Targets, ModeSplitCutsBootstrapAtTheHandover) {
  EacConfig cfg = small_config(ActorMode::deterministic);
  cfg.mode_split = true;
  Rng rng = make_rng(5);
  Agent agent(cfg, rng);
  auto items = random_transitions(cfg, 3, rng);
  for (auto& t : items) t.done = false;
  items[0].mode = 0, items[0].next_mode = 0;
  items[1].mode = 0, items[1].next_mode = 1;
  items[2].mode = 1, items[2].next_mode = 1;
  const Batch b = batch_of(items, 0);
  const Targets y = agent.compute_targets(b, Tensor::matrix(3, 2));
  EXPECT_EQ(y.primary(1, 0), items[1].reward);
  EXPECT_NE(y.primary(0, 0), items[0].reward);
  EXPECT_EQ(agent.row_weights(qp1, b), (std::vector<double>{1, 1, 0}));
  EXPECT_EQ(agent.row_weights(qs2, b), (std::vector<double>{0, 0, 1}));
}

// ---------------------------------------------------------------- critics

TEST(Critic, PerfectFitHasZeroLossAndGradient) {
  const EacConfig cfg = small_config(ActorMode::deterministic);
  Rng rng = make_rng(6);
  Agent agent(cfg, rng);
  const auto items = random_transitions(cfg, 8, rng);
  const Batch b = batch_of(items, 0);
  const Tensor q = agent.critic(qp1).forward(Agent::critic_input(b.obs, b.action, b.feature))[0];
  const CriticLoss cl = agent.critic_loss(qp1, b, q);
  EXPECT_EQ(cl.loss, 0.0);
  for (double g : cl.grad.params) EXPECT_EQ(g, 0.0);
  // An Adam step on a zero gradient leaves the parameters where they are.
  const std::vector<double> before(agent.critic(qp1).parameters().begin(), agent.critic(qp1).parameters().end());
  nn::AdamState adam(before.size(), 1e-3);
  nn::adam_step(agent.mutable_critic(qp1).mutable_parameters(), cl.grad.params, adam);
  EXPECT_TRUE(std::equal(before.begin(), before.end(), agent.critic(qp1).parameters().begin()));
}

TEST(Critic, ConstantOutputLossByHand) {
  EacConfig cfg = small_config(ActorMode::deterministic, false);
  cfg.critic_hidden = {};
  Rng rng = make_rng(7);
  Agent agent(cfg, rng);
  const std::size_t in = cfg.critic_input_dim();
  set_linear(agent.mutable_critic(qp1), std::vector<double>(in, 0.0), 0.5);
  const auto items = random_transitions(cfg, 2, rng);
  const Batch b = batch_of(items, 0);
  const Tensor y = Tensor::matrix(2, 1, {1.5, -0.5});
  const CriticLoss cl = agent.critic_loss(qp1, b, y);
  // ((0.5 - 1.5)^2 + (0.5 + 0.5)^2) / 2
  EXPECT_DOUBLE_EQ(cl.loss, 1.0);
  // d/dc = (2 * (-1) + 2 * 1) / 2
  EXPECT_DOUBLE_EQ(cl.grad.params[in], 0.0);
  const Tensor y2 = Tensor::matrix(2, 1, {1.5, 1.5});
  EXPECT_DOUBLE_EQ(agent.critic_loss(qp1, b, y2).loss, 1.0);
  EXPECT_DOUBLE_EQ(agent.critic_loss(qp1, b, y2).grad.params[in], -2.0);
}

TEST(Critic, GradientMatchesFiniteDifferences) {
  const EacConfig cfg = small_config(ActorMode::maxent, true, 2);
  Rng rng = make_rng(8);
  Agent agent(cfg, rng);
  const auto items = random_transitions(cfg, 8, rng);
  const Batch b = batch_of(items, cfg.feature_dim);
  const Tensor y = agent.compute_targets(b, normal_noise(8, 2, rng)).primary;
  for (std::size_t c : {std::size_t{qp1}, std::size_t{qs2}}) {
    const CriticLoss cl = agent.critic_loss(c, b, y);
    auto params = agent.mutable_critic(c).mutable_parameters();
    const auto idx = check::sample_indices(params.size(), 64, rng);
    const double err =
        check::max_fd_error(params, cl.grad.params, [&] { return agent.critic_loss(c, b, y).loss; }, idx, 1e-6);
    EXPECT_LT(err, 1e-4) << critic_name(c);
  }
}

TEST(Critic, OverfitsAFrozenBatch) {
  EacConfig cfg = small_config(ActorMode::deterministic);
  cfg.gamma = 0.0;  // targets are the rewards, so the batch is a fixed regression problem
  cfg.critic_hidden = {64, 64};
  Rng rng = make_rng(10);
  Agent agent(cfg, rng);
  const auto items = random_transitions(cfg, 8, rng);
  const Batch b = batch_of(items, 0);
  std::vector<double> curve;
  for (int step = 0; step < 500; ++step) curve.push_back(agent.update(b, rng).critic_loss[qp1]);
  EXPECT_LT(curve[100], curve[0]);
  const Tensor y = agent.compute_targets(b, Tensor::matrix(8, 2)).primary;
  EXPECT_LT(agent.critic_loss(qp1, b, y).loss, 1e-6);
  EXPECT_LT(agent.critic_loss(qs1, b, agent.compute_targets(b, Tensor::matrix(8, 2)).secondary).loss, 1e-6);
}

TEST(Critic, NonFiniteRewardAbortsBeforeAnyStep) {
  const EacConfig cfg = small_config(ActorMode::deterministic);
  Rng rng = make_rng(11);
  Agent agent(cfg, rng);
  auto items = random_transitions(cfg, 4, rng);
  items[1].reward = std::nan("");
  const nn::Checkpoint before = agent.to_checkpoint();
  EXPECT_THROW(agent.update(batch_of(items, 0), rng), NumericError);
  EXPECT_EQ(agent.to_checkpoint(), before);
}

// ---------------------------------------------------------------- actor

class ActorGradient : public ::testing::TestWithParam<ActorMode> {};

TEST_P(ActorGradient, ObjectiveMatchesFiniteDifferences) {
  EacConfig cfg = small_config(GetParam(), true, 2);
  cfg.feature_in_actor = true;
  Rng rng = make_rng(12);
  Agent agent(cfg, rng);
  const auto items = random_transitions(cfg, 8, rng);
  Batch b = batch_of(items, cfg.feature_dim);
  const Tensor noise = cfg.mode == ActorMode::maxent ? normal_noise(8, 2, rng) : Tensor::matrix(8, 2);
  const ActorObjective obj = agent.actor_objective(b, noise);

  auto params = agent.mutable_actor().mutable_parameters();
  const auto idx = check::sample_indices(params.size(), 64, rng);
  const auto value = [&] { return agent.actor_objective(b, noise).value; };
  EXPECT_LT(check::max_fd_error(params, obj.grad_params, value, idx, 1e-6), 1e-3);

  // The feature gradient covers both the critic input and the actor input.
  const std::vector<std::size_t> all_f{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  EXPECT_LT(check::max_fd_error(b.feature.data(), obj.grad_feature.data(), value, all_f, 1e-6), 1e-3);
}

INSTANTIATE_TEST_SUITE_P(BothModes, ActorGradient, ::testing::Values(ActorMode::maxent, ActorMode::deterministic));

TEST(Actor, ZeroCriticsMakeTheUpdateEntropySeeking) {
  EacConfig cfg = small_config(ActorMode::maxent);
  cfg.entropy_in_target = false;  // with zero rewards the critics then stay at zero
  Rng rng = make_rng(13);
  Agent agent(cfg, rng);
  for (std::size_t i = 0; i < kCriticCount; ++i) {
    for (double& p : agent.mutable_critic(i).mutable_parameters()) p = 0.0;
    agent.soft_update(1.0);
  }
  // Start narrow so that more entropy means a wider Gaussian.
  auto p = agent.mutable_actor().mutable_parameters();
  const std::size_t bias0 = p.size() - agent.actor().raw_output_dim();
  for (std::size_t j = 0; j < 2; ++j) p[bias0 + 2 + j] = -2.0;

  auto items = random_transitions(cfg, 8, rng);
  for (auto& t : items) t.reward = t.secondary = 0.0;
  const Batch b = batch_of(items, 0);
  const auto mean_log_std = [&] {
    const Tensor head = agent.actor().forward(b.obs)[0];
    double s = 0.0;
    for (std::size_t r = 0; r < 8; ++r) s += head(r, 2) + head(r, 3);
    return s / 16.0;
  };
  double last = mean_log_std();
  for (int step = 0; step < 50; ++step) {
    agent.update(b, rng);
    const double now = mean_log_std();
    EXPECT_GT(now, last) << "step " << step;
    last = now;
  }
  for (double q : agent.critic(qp1).parameters()) EXPECT_EQ(q, 0.0);
}

TEST(Actor, ZeroTemperatureLeavesOnlyTheCritics) {
  EacConfig cfg = small_config(ActorMode::maxent);
  cfg.temperature = 0.0;
  Rng rng = make_rng(14);
  Agent agent(cfg, rng);
  const auto items = random_transitions(cfg, 8, rng);
  const Batch b = batch_of(items, 0);
  const Tensor noise = normal_noise(8, 2, rng);
  const PolicyOutput pol = agent.policy(b.obs, b.feature, noise);
  const Tensor in = Agent::critic_input(b.obs, pol.action, b.feature);
  const Tensor q1 = agent.critic(qp1).forward(in)[0];
  const Tensor q2 = agent.critic(qs1).forward(in)[0];
  double expected = 0.0;
  for (std::size_t r = 0; r < 8; ++r) expected += (q1(r, 0) + q2(r, 0)) / 8.0;
  EXPECT_DOUBLE_EQ(agent.actor_objective(b, noise).value, expected);
}

TEST(Actor, LinearCriticGradientThroughTanhByHand) {
  EacConfig cfg = small_config(ActorMode::deterministic, false);
  cfg.obs_dim = 1;
  cfg.velocity_bounds = {3.0};
  cfg.actor_hidden = {};
  cfg.critic_hidden = {};
  Rng rng = make_rng(15);
  Agent agent(cfg, rng);
  const double w0 = 0.7, b0 = -0.2, w = 1.5;
  set_linear(agent.mutable_actor(), std::vector<double>{w0}, b0);
  set_linear(agent.mutable_critic(qp1), std::vector<double>{0.0, w}, 0.0);

  std::vector<Transition> items(2);
  items[0].obs = items[0].next_obs = {0.4};
  items[1].obs = items[1].next_obs = {-1.1};
  items[0].action = items[1].action = {0.0};
  const ActorObjective obj = agent.actor_objective(batch_of(items, 0), Tensor::matrix(2, 1));
  double gw = 0.0, gb = 0.0, value = 0.0;
  for (double o : {0.4, -1.1}) {
    const double t = std::tanh(w0 * o + b0);
    value += w * 3.0 * t / 2.0;
    gw += w * 3.0 * (1.0 - t * t) * o / 2.0;
    gb += w * 3.0 * (1.0 - t * t) / 2.0;
  }
  EXPECT_NEAR(obj.value, value, 1e-14);
  EXPECT_NEAR(obj.grad_params[0], gw, 1e-14);
  EXPECT_NEAR(obj.grad_params[1], gb, 1e-14);
}

TEST(Actor, SymmetricCriticsGiveZeroGradientAtTheOrigin) {
  EacConfig cfg = small_config(ActorMode::deterministic);
  cfg.obs_dim = 2;
  cfg.velocity_bounds = {1.0};
  cfg.critic_hidden = {2};
  Rng rng = make_rng(16);
  Agent agent(cfg, rng);
  // pi(s) = 0 for every s.
  auto pa = agent.mutable_actor().mutable_parameters();
  const std::size_t last = pa.size() - (agent.actor().spec().hidden.back() + 1);
  std::fill(pa.begin() + static_cast<std::ptrdiff_t>(last), pa.end(), 0.0);
  // Q(s, a) = -(relu(a) + relu(-a)) = -|a| for both critics used by the actor.
  for (std::size_t c : {std::size_t{qp1}, std::size_t{qs1}}) {
    auto q = agent.mutable_critic(c).mutable_parameters();
    std::fill(q.begin(), q.end(), 0.0);
    // layer0 weight [3, 2]: rows obs0, obs1, a
    q[2 * 2 + 0] = 1.0;
    q[2 * 2 + 1] = -1.0;
    // layer1 weight [2, 1] after layer0 bias (2)
    q[3 * 2 + 2 + 0] = -1.0;
    q[3 * 2 + 2 + 1] = -1.0;
  }
  const auto items = random_transitions(cfg, 8, rng);
  const ActorObjective obj = agent.actor_objective(batch_of(items, 0), Tensor::matrix(8, 1));
  EXPECT_EQ(obj.value, 0.0);
  for (double g : obj.grad_params) EXPECT_EQ(g, 0.0);
}

TEST(Actor, DelayedUpdatesInDeterministicMode) {
  for (ActorMode mode : {ActorMode::deterministic, ActorMode::maxent}) {
    const EacConfig cfg = small_config(mode);
    Rng rng = make_rng(17);
    Agent agent(cfg, rng);
    const auto items = random_transitions(cfg, 8, rng);
    const Batch b = batch_of(items, 0);
    int flagged = 0;
    for (int n = 0; n < 7; ++n) flagged += agent.update(b, rng).actor_updated ? 1 : 0;
    EXPECT_EQ(agent.critic_updates(), 7u);
    const std::size_t expected = mode == ActorMode::deterministic ? 3u : 7u;
    EXPECT_EQ(agent.actor_updates(), expected);
    EXPECT_EQ(static_cast<std::size_t>(flagged), expected);
  }
}

TEST(Actor, ActionsRespectTheBounds) {
  for (ActorMode mode : {ActorMode::deterministic, ActorMode::maxent}) {
    const EacConfig cfg = small_config(mode);
    Rng rng = make_rng(18);
    Agent agent(cfg, rng);
    for (double& p : agent.mutable_actor().mutable_parameters()) p *= 20.0;
    for (int k = 0; k < 200; ++k) {
      const auto obs = random_vector(cfg.obs_dim, rng, -5, 5);
      for (const auto& a : {agent.act(obs, {}), agent.act_explore(obs, {}, rng)}) {
        ASSERT_EQ(a.size(), cfg.action_dim());
        EXPECT_LE(std::abs(a[0]), 2.0);
        EXPECT_LE(std::abs(a[1]), 1.0);
        if (mode == ActorMode::maxent) {
          double sum = 0.0;
          for (std::size_t j = 2; j < a.size(); ++j) {
            EXPECT_GE(a[j], 0.0);
            sum += a[j];
          }
          EXPECT_NEAR(sum, 0.8, 1e-12);
        }
      }
    }
  }
}

// ---------------------------------------------------------------- soft update

TEST(SoftUpdate, SingleStepAndClosedForm) {
  EacConfig cfg = small_config(ActorMode::deterministic);
  Rng rng = make_rng(19);
  Agent agent(cfg, rng);
  for (std::size_t i = 0; i < kCriticCount; ++i) {
    for (double& p : agent.mutable_critic(i).mutable_parameters()) p = 1.0;
    for (double& p : agent.mutable_target(i).mutable_parameters()) p = 0.0;
  }
  agent.soft_update();
  for (double p : agent.target(qs2).parameters()) EXPECT_DOUBLE_EQ(p, 0.01);
  for (int n = 2; n <= 300; ++n) {
    agent.soft_update();
    const double expected = 1.0 - std::pow(0.99, n);
    for (std::size_t i = 0; i < kCriticCount; ++i) {
      for (double p : agent.target(i).parameters()) ASSERT_NEAR(p, expected, 1e-12) << "n=" << n;
    }
  }
}

TEST(SoftUpdate, DistanceShrinksGeometrically) {
  const EacConfig cfg = small_config(ActorMode::maxent);
  Rng rng = make_rng(20);
  Agent agent(cfg, rng);
  for (double& p : agent.mutable_critic(qp2).mutable_parameters()) p += uniform(rng, -1, 1);
  const auto gap = [&] {
    double s = 0.0;
    const auto a = agent.critic(qp2).parameters();
    const auto b = agent.target(qp2).parameters();
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
  };
  double last = gap();
  for (int n = 0; n < 20; ++n) {
    agent.soft_update(0.05);
    EXPECT_NEAR(gap() / last, 0.95, 1e-9);
    last = gap();
  }
}

TEST(SoftUpdate, UnitRateIsAHardCopy) {
  const EacConfig cfg = small_config(ActorMode::maxent);
  Rng rng = make_rng(21);
  Agent agent(cfg, rng);
  for (std::size_t i = 0; i < kCriticCount; ++i) {
    for (double& p : agent.mutable_target(i).mutable_parameters()) p = uniform(rng, -9, 9);
  }
  agent.soft_update(1.0);
  for (std::size_t i = 0; i < kCriticCount; ++i) {
    const auto a = agent.critic(i).parameters();
    const auto b = agent.target(i).parameters();
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  }
}

TEST(SoftUpdate, TargetsStartAsExactCopies) {
  const EacConfig cfg = small_config(ActorMode::maxent, true, 3);
  Rng rng = make_rng(22);
  Agent agent(cfg, rng);
  for (std::size_t i = 0; i < kCriticCount; ++i) {
    const auto a = agent.critic(i).parameters();
    const auto b = agent.target(i).parameters();
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  }
}

// ---------------------------------------------------------------- degenerate configurations

TEST(Degenerate, TwinCriticTraceByHand) {
  // Secondary critics off and deterministic actor: one update is exactly the twin-critic
  // step computed here from scratch for linear networks.
  EacConfig cfg;
  cfg.mode = ActorMode::deterministic;
  cfg.secondary_critics = false;
  cfg.obs_dim = 1;
  cfg.velocity_bounds = {2.0};
  cfg.actor_hidden = {};
  cfg.critic_hidden = {};
  cfg.gamma = 0.9;
  cfg.lr_critic_p = 0.01;
  cfg.xi = 0.1;
  cfg.target_noise = 0.0;
  Rng rng = make_rng(23);
  Agent agent(cfg, rng);
  set_linear(agent.mutable_actor(), std::vector<double>{0.5}, 0.1);
  const double w1[2] = {0.3, -0.2}, c1 = 0.05;
  const double w2[2] = {-0.1, 0.4}, c2 = -0.3;
  set_linear(agent.mutable_critic(qp1), w1, c1);
  set_linear(agent.mutable_critic(qp2), w2, c2);
  agent.soft_update(1.0);
  const std::vector<double> qs_before(agent.critic(qs1).parameters().begin(), agent.critic(qs1).parameters().end());
  const std::vector<double> actor_before(agent.actor().parameters().begin(), agent.actor().parameters().end());

  std::vector<Transition> items(2);
  items[0] = {{0.2}, {1.0}, 1.0, 0.0, {0.6}, false};
  items[1] = {{-0.5}, {-0.4}, -2.0, 0.0, {1.5}, true};
  const UpdateStats stats = agent.update(batch_of(items, 0), rng);

  // targets from the (identical) target critics at a' = 2 tanh(0.5 o' + 0.1)
  double y[2], x_o[2], x_a[2];
  for (int r = 0; r < 2; ++r) {
    const double o2 = items[r].next_obs[0];
    const double a2 = 2.0 * std::tanh(0.5 * o2 + 0.1);
    const double q1 = w1[0] * o2 + w1[1] * a2 + c1;
    const double q2 = w2[0] * o2 + w2[1] * a2 + c2;
    y[r] = items[r].reward + 0.9 * (items[r].done ? 0.0 : 1.0) * std::min(q1, q2);
    x_o[r] = items[r].obs[0];
    x_a[r] = items[r].action[0];
  }
  const auto expect_critic = [&](std::size_t c, const double* w, double b) {
    double loss = 0.0, g[3] = {0.0, 0.0, 0.0};
    for (int r = 0; r < 2; ++r) {
      const double e = w[0] * x_o[r] + w[1] * x_a[r] + b - y[r];
      loss += e * e / 2.0;
      g[0] += e * x_o[r];
      g[1] += e * x_a[r];
      g[2] += e;
    }
    EXPECT_NEAR(stats.critic_loss[c], loss, 1e-14);
    const double old[3] = {w[0], w[1], b};
    for (int k = 0; k < 3; ++k) {
      // First Adam step: m_hat = g, v_hat = g^2.
      const double updated = old[k] - 0.01 * g[k] / (std::abs(g[k]) + 1e-8);
      EXPECT_NEAR(agent.critic(c).parameters()[k], updated, 1e-14);
      EXPECT_NEAR(agent.target(c).parameters()[k], 0.1 * updated + 0.9 * old[k], 1e-14);
    }
  };
  expect_critic(qp1, w1, c1);
  expect_critic(qp2, w2, c2);
  EXPECT_FALSE(stats.actor_updated);
  EXPECT_EQ(stats.critic_loss[qs1], 0.0);
  EXPECT_TRUE(std::equal(qs_before.begin(), qs_before.end(), agent.critic(qs1).parameters().begin()));
  EXPECT_TRUE(std::equal(actor_before.begin(), actor_before.end(), agent.actor().parameters().begin()));
}

TEST(Degenerate, NoFeatureModelShrinksTheCriticInput) {
  const EacConfig with = small_config(ActorMode::maxent, true, 6);
  const EacConfig without = small_config(ActorMode::maxent, true, 0);
  EXPECT_EQ(with.critic_input_dim() - without.critic_input_dim(), 6u);
  Rng rng = make_rng(24);
  Agent agent(without, rng);
  EXPECT_EQ(agent.critic(qp1).input_dim(), without.obs_dim + without.action_dim());
  const auto items = random_transitions(without, 8, rng);
  for (int n = 0; n < 5; ++n) EXPECT_NO_THROW(agent.update(batch_of(items, 0), rng));
}

// ---------------------------------------------------------------- checkpoint

TEST(AgentCheckpoint, RoundTripIsBitExact) {
  const EacConfig cfg = small_config(ActorMode::maxent, true, 2);
  Rng rng = make_rng(25);
  Agent agent(cfg, rng);
  const auto items = random_transitions(cfg, 8, rng);
  for (int n = 0; n < 3; ++n) agent.update(batch_of(items, 2), rng);

  const nn::Checkpoint ck = nn::Checkpoint::parse(agent.to_checkpoint().serialize());
  Rng other = make_rng(99);
  Agent restored(cfg, other);
  restored.load_checkpoint(ck);
  EXPECT_EQ(restored.to_checkpoint(), agent.to_checkpoint());
  EXPECT_EQ(restored.actor_updates(), 3u);
  const std::vector<double> f{0.1, -0.2};
  EXPECT_EQ(restored.act(items[0].obs, f), agent.act(items[0].obs, f));
}
