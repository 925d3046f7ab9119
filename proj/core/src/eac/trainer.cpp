#include "fmeac/eac/trainer.hpp"

#include <chrono>
#include <memory>
#include <sstream>

#include "fmeac/common/errors.hpp"
#include "fmeac/common/text_io.hpp"

namespace fmeac::eac {

std::vector<double> EnvAdapter::random_action(Rng& rng) const {
  std::vector<double> a;
  for (double b : velocity_bounds()) a.push_back(uniform(rng, -b, b));
  const std::size_t m = alloc_dim();
  if (m > 0) {
    std::vector<double> raw(m);
    double sum = 0.0;
    for (double& x : raw) sum += (x = uniform(rng, 1e-6, 1.0));
    for (double x : raw) a.push_back(alloc_scale() * x / sum);
  }
  return a;
}

EacConfig agent_config_for(const EnvAdapter& env, const FeatureModel& features, EacConfig base) {
  base.obs_dim = env.obs_dim();
  base.velocity_bounds = env.velocity_bounds();
  base.alloc_dim = base.mode == ActorMode::maxent ? env.alloc_dim() : 0;
  base.alloc_scale = env.alloc_scale();
  base.feature_dim = features.dim();
  base.feature_in_actor = env.feature_in_actor();
  return base;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::shared_ptr<const features::GraphSnapshot> snapshot_if(bool wanted, const EnvAdapter& env) {
  if (!wanted) return nullptr;
  return std::make_shared<const features::GraphSnapshot>(env.graph());
}

void copy_row(nn::Tensor& dst, std::size_t row, const nn::Tensor& src) {
  std::copy(src.data().begin(), src.data().end(), dst.row(row).begin());
}

}  // namespace

UpdateStats train_step(Agent& agent, FeatureModel& features, const ReplayBuffer& buffer, Rng& rng) {
  const auto items = buffer.sample(agent.config().batch_size, rng);
  Batch batch = make_batch(items, features.dim());
  std::vector<features::GnnModel::Pass> passes;
  if (features.adaptive()) {
    const features::GnnModel& gnn = features.gnn_model();
    passes.reserve(items.size());
    for (std::size_t b = 0; b < items.size(); ++b) {
      const Transition& t = *items[b];
      if (!t.graph || !t.next_graph) throw ContractError("train_step: adaptive features need stored graphs");
      passes.push_back(gnn.forward_cached(t.graph->expand()));
      copy_row(batch.feature, b, passes.back().feature);
      copy_row(batch.next_feature, b, gnn.forward(t.next_graph->expand()));
    }
  }
  UpdateStats stats = agent.update(batch, rng);
  if (features.adaptive()) {
    // The feature model descends the critic losses plus the actor loss (the negated objective).
    nn::Tensor grad = stats.grad_feature_critic;
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] -= stats.grad_feature_actor[k];
    features::gnn_apply_feature_gradient(features.mutable_gnn_model(), passes, grad, features.gnn_adam());
  }
  return stats;
}

TrainResult train(Agent& agent, EnvAdapter& env, FeatureModel& features, ReplayBuffer& buffer,
                  const TrainConfig& cfg, Rng& rng) {
  const std::size_t n = env.agent_count();
  const std::size_t action_dim = agent.config().action_dim();
  if (agent.config().feature_dim != features.dim()) {
    throw DimensionError("train: agent feature_dim does not match the feature model");
  }
  TrainResult result;
  for (std::size_t e = 0; e < cfg.episodes; ++e) {
    const auto t0 = Clock::now();
    env.reset(e);
    EpisodeLog row;
    row.episode = e;
    std::vector<double> pri(n, 0.0), sec(n, 0.0);
    std::size_t updates = 0, actor_updates = 0;

    std::vector<double> f = features.compute(env);
    auto g = snapshot_if(features.adaptive(), env);
    std::vector<std::vector<double>> obs(n);
    for (std::size_t i = 0; i < n; ++i) obs[i] = env.observe(i);

    while (!env.episode_done() && row.steps < cfg.max_steps) {
      std::vector<bool> active(n);
      std::vector<std::vector<double>> actions(n, std::vector<double>(action_dim, 0.0));
      for (std::size_t i = 0; i < n; ++i) {
        active[i] = env.agent_active(i);
        if (!active[i]) continue;
        actions[i] = result.env_steps < cfg.warmup_steps ? env.random_action(rng) : agent.act_explore(obs[i], f, rng);
      }
      const std::vector<AgentStep> out = env.step(actions, rng);
      std::vector<double> f2 = features.compute(env);
      auto g2 = snapshot_if(features.adaptive(), env);
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> next = env.observe(i);
        if (active[i]) {
          pri[i] += out[i].log_primary;
          sec[i] += out[i].log_secondary;
          Transition t;
          t.obs = obs[i];
          t.action = actions[i];
          t.reward = out[i].reward;
          t.secondary = out[i].secondary;
          t.next_obs = next;
          t.done = out[i].done;
          t.mode = out[i].mode;
          t.next_mode = out[i].next_mode;
          if (features.adaptive()) {
            t.graph = g;
            t.next_graph = g2;
          } else {
            t.feature = f;
            t.next_feature = f2;
          }
          buffer.push(std::move(t));
        }
        obs[i] = std::move(next);
      }
      f = std::move(f2);
      g = std::move(g2);
      ++row.steps;
      ++result.env_steps;

      if (result.env_steps < cfg.warmup_steps || buffer.size() < agent.config().batch_size) continue;
      for (std::size_t u = 0; u < cfg.updates_per_step; ++u) {
        UpdateStats stats;
        try {
          stats = train_step(agent, features, buffer, rng);
        } catch (const NumericError& err) {
          std::string msg = std::string(err.what()) + " in episode " + std::to_string(e);
          if (!cfg.abort_checkpoint.empty()) {
            agent.to_checkpoint().save(cfg.abort_checkpoint);
            msg += "; last-good agent saved to " + cfg.abort_checkpoint.string();
          }
          throw NumericError(msg);
        }
        for (std::size_t c = 0; c < kCriticCount; ++c) row.critic_loss[c] += stats.critic_loss[c];
        if (stats.actor_updated) {
          row.loss_actor -= stats.actor_objective;
          ++actor_updates;
        }
        ++updates;
        ++result.updates;
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      row.reward_pri += pri[i] / static_cast<double>(n);
      row.reward_sec += sec[i] / static_cast<double>(n);
    }
    if (updates > 0) {
      for (double& l : row.critic_loss) l /= static_cast<double>(updates);
    }
    if (actor_updates > 0) row.loss_actor /= static_cast<double>(actor_updates);
    const EpisodeSummary s = env.summary();
    row.qos_or_aoi = s.qos_or_aoi;
    row.completion_time_s = s.completion_time_s;
    row.wall_ms = cfg.record_timing ? ms_since(t0) : 0.0;
    result.log.push_back(row);
  }
  return result;
}

EvalResult evaluate(const Agent& agent, EnvAdapter& env, const FeatureModel& features, std::size_t first_episode,
                    std::size_t episodes, Rng& rng) {
  const std::size_t n = env.agent_count();
  const std::size_t action_dim = agent.config().action_dim();
  EvalResult result;
  double inference_ms = 0.0;
  for (std::size_t e = first_episode; e < first_episode + episodes; ++e) {
    env.reset(e);
    EpisodeLog row;
    row.episode = e;
    Trajectory traj;
    traj.episode = e;
    std::vector<double> pri(n, 0.0), sec(n, 0.0);
    while (!env.episode_done() && row.steps < 100000) {
      std::vector<std::vector<double>> actions(n, std::vector<double>(action_dim, 0.0));
      const auto t0 = Clock::now();
      const std::vector<double> f = features.compute(env);
      std::size_t acted = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!env.agent_active(i)) continue;
        actions[i] = agent.act(env.observe(i), f);
        ++acted;
      }
      inference_ms += ms_since(t0);
      result.actions += acted;
      const std::vector<AgentStep> out = env.step(actions, rng);
      for (std::size_t i = 0; i < n; ++i) {
        pri[i] += out[i].log_primary;
        sec[i] += out[i].log_secondary;
      }
      traj.positions.push_back(env.positions());
      ++row.steps;
    }
    for (std::size_t i = 0; i < n; ++i) {
      row.reward_pri += pri[i] / static_cast<double>(n);
      row.reward_sec += sec[i] / static_cast<double>(n);
    }
    const EpisodeSummary s = env.summary();
    row.qos_or_aoi = s.qos_or_aoi;
    row.completion_time_s = s.completion_time_s;
    result.log.push_back(row);
    result.trajectories.push_back(std::move(traj));
  }
  result.online_ms_per_action = result.actions > 0 ? inference_ms / static_cast<double>(result.actions) : 0.0;
  return result;
}

std::string metrics_csv_header() {
  return "episode,steps,reward_pri,reward_sec,loss_qp1,loss_qp2,loss_qs1,loss_qs2,loss_actor,qos_or_aoi,"
         "completion_time_s,wall_ms";
}

std::string metrics_csv(const std::vector<EpisodeLog>& log) {
  std::ostringstream os;
  os << metrics_csv_header() << '\n';
  for (const EpisodeLog& r : log) {
    os << r.episode << ',' << r.steps << ',' << format_double(r.reward_pri) << ',' << format_double(r.reward_sec);
    for (double l : r.critic_loss) os << ',' << format_double(l);
    os << ',' << format_double(r.loss_actor) << ',' << format_double(r.qos_or_aoi) << ','
       << format_double(r.completion_time_s) << ',' << format_double(r.wall_ms) << '\n';
  }
  return os.str();
}

std::vector<EpisodeLog> parse_metrics_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != metrics_csv_header()) {
    throw StageError("metrics log: unexpected header");
  }
  std::vector<EpisodeLog> log;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 12) throw StageError("metrics log: expected 12 columns, got " + std::to_string(cells.size()));
    EpisodeLog r;
    r.episode = static_cast<std::size_t>(parse_int(cells[0]));
    r.steps = static_cast<std::size_t>(parse_int(cells[1]));
    r.reward_pri = parse_double(cells[2]);
    r.reward_sec = parse_double(cells[3]);
    for (std::size_t c = 0; c < kCriticCount; ++c) r.critic_loss[c] = parse_double(cells[4 + c]);
    r.loss_actor = parse_double(cells[8]);
    r.qos_or_aoi = parse_double(cells[9]);
    r.completion_time_s = parse_double(cells[10]);
    r.wall_ms = parse_double(cells[11]);
    log.push_back(r);
  }
  return log;
}

std::string trajectory_csv(const Trajectory& trajectory) {
  std::ostringstream os;
  os << "step";
  const std::size_t n = trajectory.positions.empty() ? 0 : trajectory.positions.front().size();
  for (std::size_t i = 0; i < n; ++i) os << ",uav" << i << "_x,uav" << i << "_y,uav" << i << "_z";
  os << '\n';
  for (std::size_t k = 0; k < trajectory.positions.size(); ++k) {
    os << k;
    for (const Vec3& p : trajectory.positions[k]) {
      os << ',' << format_double(p.x) << ',' << format_double(p.y) << ',' << format_double(p.z);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace fmeac::eac
