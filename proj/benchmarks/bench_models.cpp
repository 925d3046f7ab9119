#include <benchmark/benchmark.h>

#include "fmeac/agri/agri_map.hpp"
#include "fmeac/eac/agent.hpp"
#include "fmeac/eac/trainer.hpp"
#include "fmeac/features/gnn.hpp"
#include "fmeac/features/pan.hpp"
#include "fmeac/harness/adapters.hpp"
#include "fmeac/harness/config.hpp"

using namespace fmeac;

namespace {

features::GraphSnapshot random_scene(std::size_t n, std::size_t node_dim, Rng& rng) {
  features::GraphSnapshot s;
  s.node_features = nn::Tensor::matrix(n, node_dim);
  for (double& x : s.node_features.data()) x = uniform(rng, 0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    s.positions.push_back({uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0)});
  }
  s.radius = 0.3;
  return s;
}

void BM_GnnForward(benchmark::State& state) {
  Rng rng = make_rng(1);
  features::GnnConfig cfg;
  cfg.node_dim = 6;
  const features::GnnModel gnn(cfg, rng);
  const auto scene = random_scene(static_cast<std::size_t>(state.range(0)), cfg.node_dim, rng);
  for (auto _ : state) benchmark::DoNotOptimize(gnn.forward(scene.expand()));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GnnForward)->RangeMultiplier(2)->Range(8, 512)->Complexity();

void BM_PanFeature(benchmark::State& state) {
  Rng rng = make_rng(2);
  features::PanConfig cfg;
  features::PanModel pan(cfg, rng);
  pan.freeze();
  nn::Tensor points = nn::Tensor::matrix(static_cast<std::size_t>(state.range(0)), cfg.point_dim);
  for (double& x : points.data()) x = uniform(rng, 0.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(pan.feature(points));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_PanFeature)->RangeMultiplier(2)->Range(8, 512)->Complexity();

// One sampled update of the four critics, the actor and the targets at the toy-agri sizes.
void BM_AgentUpdate(benchmark::State& state) {
  const harness::ExperimentConfig cfg = harness::preset("toy-agri");
  harness::AgriAdapter env(cfg.agri, {agri::generate_map(0, cfg.agri)});
  eac::FeatureModel none;
  Rng rng = make_rng(3);
  eac::Agent agent(eac::agent_config_for(env, none, cfg.eac), rng);
  eac::ReplayBuffer buffer(4096);
  eac::TrainConfig tc;
  tc.episodes = 4;
  tc.updates_per_step = 0;
  eac::train(agent, env, none, buffer, tc, rng);
  for (auto _ : state) benchmark::DoNotOptimize(eac::train_step(agent, none, buffer, rng));
}
BENCHMARK(BM_AgentUpdate)->Unit(benchmark::kMicrosecond);

void BM_AgriStep(benchmark::State& state) {
  const harness::ExperimentConfig cfg = harness::preset("toy-agri");
  harness::AgriAdapter env(cfg.agri, {agri::generate_map(0, cfg.agri)});
  Rng rng = make_rng(4);
  std::size_t episode = 0;
  for (auto _ : state) {
    if (env.episode_done()) env.reset(++episode);
    benchmark::DoNotOptimize(env.step({env.random_action(rng)}, rng));
  }
}
BENCHMARK(BM_AgriStep);

}  // namespace

BENCHMARK_MAIN();
