#include "fmeac/eac/agent.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fmeac/common/errors.hpp"

namespace fmeac::eac {

using nn::Tensor;

const char* critic_name(std::size_t i) {
  static constexpr const char* names[kCriticCount] = {"qp1", "qp2", "qs1", "qs2"};
  if (i >= kCriticCount) throw ContractError("critic index out of range");
  return names[i];
}

namespace {

void validate(const EacConfig& cfg) {
  if (cfg.obs_dim == 0) throw ContractError("EacConfig: obs_dim must be positive");
  if (cfg.velocity_bounds.empty()) throw ContractError("EacConfig: at least one velocity dimension is required");
  for (double b : cfg.velocity_bounds) {
    if (!(b > 0.0)) throw ContractError("EacConfig: velocity bounds must be positive");
  }
  if (cfg.policy_delay < 1) throw ContractError("EacConfig: policy_delay must be at least 1");
  if (!(cfg.xi >= 0.0 && cfg.xi <= 1.0)) throw ContractError("EacConfig: xi must lie in [0, 1]");
  if (cfg.batch_size == 0) throw ContractError("EacConfig: batch_size must be positive");
}

nn::DenseNetSpec actor_spec(const EacConfig& cfg) {
  nn::DenseNetSpec spec;
  spec.input_dim = cfg.actor_input_dim();
  spec.hidden = cfg.actor_hidden;
  if (cfg.mode == ActorMode::maxent) {
    spec.heads.push_back(nn::HeadSpec::gaussian(cfg.velocity_bounds));
    if (cfg.alloc_dim > 0) spec.heads.push_back(nn::HeadSpec::softmax(cfg.alloc_dim, cfg.alloc_scale));
  } else {
    spec.heads.push_back(nn::HeadSpec::tanh_scaled(cfg.velocity_bounds));
  }
  return spec;
}

nn::DenseNetSpec critic_spec(const EacConfig& cfg) {
  nn::DenseNetSpec spec;
  spec.input_dim = cfg.critic_input_dim();
  spec.hidden = cfg.critic_hidden;
  spec.heads.push_back(nn::HeadSpec::linear(1));
  return spec;
}

Tensor row_of(std::span<const double> v) { return Tensor::row_vector(v); }

}  // namespace

Agent::Agent(EacConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
  validate(cfg_);
  actor_ = nn::DenseNet(actor_spec(cfg_), rng);
  for (std::size_t i = 0; i < kCriticCount; ++i) {
    critics_[i] = nn::DenseNet(critic_spec(cfg_), rng);
    targets_[i] = critics_[i];
    critic_adam_[i] = nn::AdamState(critics_[i].parameter_count(), i < 2 ? cfg_.lr_critic_p : cfg_.lr_critic_s);
  }
  actor_adam_ = nn::AdamState(actor_.parameter_count(), cfg_.lr_actor);
}

Tensor Agent::actor_input(const Tensor& obs, const Tensor& feature) const {
  if (obs.cols() != cfg_.obs_dim) throw DimensionError("actor input: observation width does not match obs_dim");
  if (!cfg_.feature_in_actor || cfg_.feature_dim == 0) return obs;
  if (feature.cols() != cfg_.feature_dim) throw DimensionError("actor input: feature width does not match feature_dim");
  return nn::concat_cols({&obs, &feature});
}

Tensor Agent::critic_input(const Tensor& obs, const Tensor& action, const Tensor& feature) {
  return nn::concat_cols({&obs, &action, &feature});
}

PolicyOutput Agent::policy(const Tensor& obs, const Tensor& feature, const Tensor& noise) const {
  const std::size_t batch = obs.rows();
  const std::size_t v = cfg_.velocity_dim();
  if (noise.rows() != batch || noise.cols() != v) throw DimensionError("policy: noise must be [batch, velocity_dim]");
  PolicyOutput out;
  out.pass = actor_.forward_cached(actor_input(obs, feature));
  if (cfg_.mode == ActorMode::maxent) {
    const Tensor& head = out.pass.outputs[0];
    out.gaussian = nn::gaussian_sample_with_noise(nn::slice_cols(head, 0, v), nn::slice_cols(head, v, v),
                                                  cfg_.velocity_bounds, noise);
    out.log_prob = out.gaussian.log_prob;
    out.action = cfg_.alloc_dim > 0 ? nn::concat_cols({&out.gaussian.action, &out.pass.outputs[1]})
                                    : out.gaussian.action;
  } else {
    out.action = out.pass.outputs[0];
    for (std::size_t r = 0; r < batch; ++r) {
      for (std::size_t j = 0; j < v; ++j) {
        const double b = cfg_.velocity_bounds[j];
        out.action(r, j) = std::clamp(out.action(r, j) + noise(r, j), -b, b);
      }
    }
    out.log_prob = Tensor::matrix(batch, 1);
  }
  return out;
}

Tensor Agent::target_noise(std::size_t batch, Rng& rng) const {
  const std::size_t v = cfg_.velocity_dim();
  Tensor noise = Tensor::matrix(batch, v);
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t j = 0; j < v; ++j) {
      const double z = standard_normal(rng);
      if (cfg_.mode == ActorMode::maxent) {
        noise(r, j) = z;
      } else {
        const double b = cfg_.velocity_bounds[j];
        const double clip = cfg_.target_noise_clip * b;
        noise(r, j) = std::clamp(z * cfg_.target_noise * b, -clip, clip);
      }
    }
  }
  return noise;
}

std::vector<double> Agent::act(std::span<const double> obs, std::span<const double> feature) const {
  const auto outputs = actor_.forward(actor_input(row_of(obs), row_of(feature)));
  const std::size_t v = cfg_.velocity_dim();
  std::vector<double> a;
  if (cfg_.mode == ActorMode::maxent) {
    for (std::size_t j = 0; j < v; ++j) a.push_back(cfg_.velocity_bounds[j] * std::tanh(outputs[0](0, j)));
    if (cfg_.alloc_dim > 0) a.insert(a.end(), outputs[1].row(0).begin(), outputs[1].row(0).end());
  } else {
    a.assign(outputs[0].row(0).begin(), outputs[0].row(0).end());
  }
  return a;
}

std::vector<double> Agent::act_explore(std::span<const double> obs, std::span<const double> feature, Rng& rng) const {
  const std::size_t v = cfg_.velocity_dim();
  Tensor noise = Tensor::matrix(1, v);
  for (std::size_t j = 0; j < v; ++j) {
    const double z = standard_normal(rng);
    noise(0, j) = cfg_.mode == ActorMode::maxent ? z : z * cfg_.exploration_noise * cfg_.velocity_bounds[j];
  }
  const PolicyOutput p = policy(row_of(obs), row_of(feature), noise);
  return {p.action.row(0).begin(), p.action.row(0).end()};
}

Targets Agent::compute_targets(const Batch& batch, const Tensor& next_noise) const {
  const std::size_t n = batch.size();
  const PolicyOutput next = policy(batch.next_obs, batch.next_feature, next_noise);
  const Tensor input = critic_input(batch.next_obs, next.action, batch.next_feature);
  const bool entropy = cfg_.mode == ActorMode::maxent && cfg_.entropy_in_target;

  std::vector<double> cont(n);
  for (std::size_t r = 0; r < n; ++r) {
    cont[r] = 1.0 - batch.done(r, 0);
    if (cfg_.mode_split && cfg_.secondary_critics && batch.mode[r] != batch.next_mode[r]) cont[r] = 0.0;
  }

  const auto stream = [&](std::size_t first, const Tensor& reward, double scale) {
    const Tensor q1 = targets_[first].forward(input)[0];
    const Tensor q2 = targets_[first + 1].forward(input)[0];
    Tensor y = Tensor::matrix(n, 1);
    for (std::size_t r = 0; r < n; ++r) {
      double soft = std::min(q1(r, 0), q2(r, 0));
      if (entropy) soft -= cfg_.temperature * next.log_prob(r, 0);
      y(r, 0) = scale * reward(r, 0) + cfg_.gamma * cont[r] * soft;
    }
    return y;
  };

  Targets t;
  t.primary = stream(qp1, batch.reward, 1.0);
  t.secondary = cfg_.secondary_critics ? stream(qs1, batch.secondary, cfg_.secondary_scale) : Tensor::matrix(n, 1);
  return t;
}

std::vector<double> Agent::row_weights(std::size_t critic, const Batch& batch) const {
  std::vector<double> w(batch.size(), 1.0);
  if (!(cfg_.mode_split && cfg_.secondary_critics)) return w;
  const bool secondary = critic >= qs1;
  for (std::size_t r = 0; r < w.size(); ++r) w[r] = (batch.mode[r] == 1) == secondary ? 1.0 : 0.0;
  return w;
}

CriticLoss Agent::critic_loss(std::size_t i, const Batch& batch, const Tensor& y) const {
  const nn::DenseNet& net = critics_.at(i);
  const Tensor input = critic_input(batch.obs, batch.action, batch.feature);
  const nn::ForwardPass pass = net.forward_cached(input);
  const Tensor& q = pass.outputs[0];
  const std::vector<double> w = row_weights(i, batch);
  double total = 0.0;
  for (double x : w) total += x;

  CriticLoss out;
  Tensor g = Tensor::matrix(batch.size(), 1);
  if (total > 0.0) {
    for (std::size_t r = 0; r < batch.size(); ++r) {
      const double e = q(r, 0) - y(r, 0);
      out.loss += w[r] * e * e / total;
      g(r, 0) = 2.0 * w[r] * e / total;
    }
  }
  const Tensor heads[] = {g};
  out.grad = net.backward(pass, heads);
  return out;
}

ActorObjective Agent::actor_objective(const Batch& batch, const Tensor& noise) const {
  const std::size_t n = batch.size();
  const std::size_t v = cfg_.velocity_dim();
  const std::size_t a_dim = cfg_.action_dim();
  const std::size_t f_dim = cfg_.feature_dim;
  const PolicyOutput pol = policy(batch.obs, batch.feature, noise);
  const Tensor input = critic_input(batch.obs, pol.action, batch.feature);

  ActorObjective out;
  Tensor grad_input = Tensor::matrix(n, input.cols());
  const Tensor dq = Tensor::matrix(n, 1, 1.0 / static_cast<double>(n));
  const Tensor dq_heads[] = {dq};
  std::vector<std::size_t> used{qp1};
  if (cfg_.secondary_critics) used.push_back(qs1);
  for (std::size_t c : used) {
    const nn::ForwardPass pass = critics_[c].forward_cached(input);
    for (std::size_t r = 0; r < n; ++r) out.value += pass.outputs[0](r, 0) / static_cast<double>(n);
    const nn::Gradients g = critics_[c].backward(pass, dq_heads);
    for (std::size_t k = 0; k < grad_input.size(); ++k) grad_input[k] += g.input[k];
  }

  const Tensor grad_action = nn::slice_cols(grad_input, cfg_.obs_dim, a_dim);
  out.grad_feature = nn::slice_cols(grad_input, cfg_.obs_dim + a_dim, f_dim);

  std::vector<Tensor> heads;
  if (cfg_.mode == ActorMode::maxent) {
    const double alpha = cfg_.temperature;
    for (std::size_t r = 0; r < n; ++r) out.value -= alpha * pol.log_prob(r, 0) / static_cast<double>(n);
    const Tensor grad_log_prob = Tensor::matrix(n, 1, -alpha / static_cast<double>(n));
    const Tensor log_std = nn::slice_cols(pol.pass.outputs[0], v, v);
    const nn::GaussianGrad gg = nn::gaussian_backward(pol.gaussian, log_std, cfg_.velocity_bounds,
                                                      nn::slice_cols(grad_action, 0, v), grad_log_prob);
    heads.push_back(nn::concat_cols({&gg.mu, &gg.log_std}));
    if (cfg_.alloc_dim > 0) heads.push_back(nn::slice_cols(grad_action, v, cfg_.alloc_dim));
  } else {
    Tensor g = grad_action;
    // The clamp after the added noise passes no gradient where it is active.
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < v; ++j) {
        if (std::abs(pol.action(r, j)) >= cfg_.velocity_bounds[j]) g(r, j) = 0.0;
      }
    }
    heads.push_back(std::move(g));
  }
  nn::Gradients ag = actor_.backward(pol.pass, heads);
  out.grad_params = std::move(ag.params);
  if (cfg_.feature_in_actor && f_dim > 0) {
    const Tensor via_actor = nn::slice_cols(ag.input, cfg_.obs_dim, f_dim);
    for (std::size_t k = 0; k < via_actor.size(); ++k) out.grad_feature[k] += via_actor[k];
  }
  return out;
}

UpdateStats Agent::update(const Batch& batch, Rng& rng) {
  const std::size_t n = batch.size();
  const std::size_t f_dim = cfg_.feature_dim;
  const Tensor next_noise = target_noise(n, rng);
  const Targets y = compute_targets(batch, next_noise);

  UpdateStats stats;
  std::array<CriticLoss, kCriticCount> losses;
  for (std::size_t i = 0; i < active_critics(); ++i) {
    losses[i] = critic_loss(i, batch, i < qs1 ? y.primary : y.secondary);
    if (!std::isfinite(losses[i].loss)) {
      throw NumericError(std::string("critic ") + critic_name(i) + " loss is not finite");
    }
    stats.critic_loss[i] = losses[i].loss;
  }
  stats.grad_feature_critic = Tensor::matrix(n, f_dim);
  const std::size_t f_offset = cfg_.obs_dim + cfg_.action_dim();
  for (std::size_t i = 0; i < active_critics(); ++i) {
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t k = 0; k < f_dim; ++k) stats.grad_feature_critic(r, k) += losses[i].grad.input(r, f_offset + k);
    }
    nn::adam_step(critics_[i].mutable_parameters(), losses[i].grad.params, critic_adam_[i]);
  }
  ++critic_updates_;

  stats.grad_feature_actor = Tensor::matrix(n, f_dim);
  const bool actor_due =
      cfg_.mode == ActorMode::maxent || critic_updates_ % static_cast<std::size_t>(cfg_.policy_delay) == 0;
  if (actor_due) {
    Tensor noise = Tensor::matrix(n, cfg_.velocity_dim());
    if (cfg_.mode == ActorMode::maxent) {
      for (std::size_t k = 0; k < noise.size(); ++k) noise[k] = standard_normal(rng);
    }
    ActorObjective obj = actor_objective(batch, noise);
    if (!std::isfinite(obj.value)) throw NumericError("actor objective is not finite");
    for (double& g : obj.grad_params) g = -g;
    nn::adam_step(actor_.mutable_parameters(), obj.grad_params, actor_adam_);
    ++actor_updates_;
    stats.actor_objective = obj.value;
    stats.actor_updated = true;
    stats.grad_feature_actor = std::move(obj.grad_feature);
  }
  soft_update();
  return stats;
}

void Agent::soft_update() { soft_update(cfg_.xi); }

void Agent::soft_update(double xi) {
  for (std::size_t i = 0; i < kCriticCount; ++i) {
    const auto online = critics_[i].parameters();
    auto target = targets_[i].mutable_parameters();
    if (xi == 1.0) {
      std::copy(online.begin(), online.end(), target.begin());
      continue;
    }
    for (std::size_t k = 0; k < target.size(); ++k) target[k] = xi * online[k] + (1.0 - xi) * target[k];
  }
}

nn::Checkpoint Agent::to_checkpoint() const {
  nn::Checkpoint ck;
  ck.add_all(actor_.named_tensors("actor."));
  for (std::size_t i = 0; i < kCriticCount; ++i) {
    ck.add_all(critics_[i].named_tensors(std::string("critic.") + critic_name(i) + "."));
    ck.add_all(targets_[i].named_tensors(std::string("target.") + critic_name(i) + "."));
  }
  ck.add("agent.counters",
         Tensor({2}, {static_cast<double>(critic_updates_), static_cast<double>(actor_updates_)}));
  return ck;
}

void Agent::load_checkpoint(const nn::Checkpoint& ck) {
  actor_.load_named_tensors("actor.", ck.entries());
  for (std::size_t i = 0; i < kCriticCount; ++i) {
    critics_[i].load_named_tensors(std::string("critic.") + critic_name(i) + ".", ck.entries());
    targets_[i].load_named_tensors(std::string("target.") + critic_name(i) + ".", ck.entries());
  }
  const Tensor& counters = ck.get("agent.counters");
  if (counters.size() != 2) throw DimensionError("agent checkpoint: malformed counters");
  critic_updates_ = static_cast<std::size_t>(counters[0]);
  actor_updates_ = static_cast<std::size_t>(counters[1]);
}

}  // namespace fmeac::eac
