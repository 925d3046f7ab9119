#include "fmeac/features/bpn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fmeac/common/errors.hpp"

namespace fmeac::features {

BpnModel::BpnModel(BpnConfig cfg, Rng& rng, double label_scale)
    : cfg_(std::move(cfg)), label_scale_(label_scale) {
  if (!(label_scale_ > 0.0)) throw ContractError("BpnModel: label scale must be positive");
  net_ = nn::DenseNet({cfg_.input_dim, cfg_.hidden, nn::Activation::relu, {nn::HeadSpec::linear(1)}}, rng);
}

double BpnModel::predict(std::span<const double> state) const {
  return predict_batch(nn::Tensor::row_vector(state))[0];
}

nn::Tensor BpnModel::predict_batch(const nn::Tensor& states) const {
  nn::Tensor out = net_.forward(states)[0];
  for (double& v : out.data()) v *= label_scale_;
  return out;
}

BpnModel::LossGradient BpnModel::loss_and_gradient(const nn::Tensor& states,
                                                   std::span<const double> energy_j) const {
  if (states.rows() != energy_j.size()) throw DimensionError("BPN: one label per state required");
  LossGradient out;
  const nn::ForwardPass pass = net_.forward_cached(states);
  const nn::Tensor& pred = pass.outputs[0];
  const double n = static_cast<double>(energy_j.size());
  nn::Tensor grad = nn::Tensor::matrix(energy_j.size(), 1);
  for (std::size_t i = 0; i < energy_j.size(); ++i) {
    const double diff = pred[i] - energy_j[i] / label_scale_;
    out.loss += diff * diff / n;
    grad[i] = 2.0 * diff / n;
  }
  const std::vector<nn::Tensor> g{grad};
  out.params = net_.backward(pass, g).params;
  return out;
}

double BpnModel::train_step(const nn::Tensor& states, std::span<const double> energy_j, nn::AdamState& adam) {
  const LossGradient g = loss_and_gradient(states, energy_j);
  if (!std::isfinite(g.loss)) throw NumericError("BPN training: non-finite loss");
  nn::adam_step(mutable_net().mutable_parameters(), g.params, adam);
  return g.loss;
}

nn::DenseNet& BpnModel::mutable_net() {
  if (frozen_) throw ContractError("BpnModel: frozen model is immutable");
  return net_;
}

nn::Checkpoint BpnModel::to_checkpoint() const {
  nn::Checkpoint ck;
  ck.add("model_kind", nn::Tensor({1}, std::vector<double>{2.0}));
  std::vector<double> cfg{static_cast<double>(cfg_.input_dim), label_scale_, frozen_ ? 1.0 : 0.0};
  for (std::size_t h : cfg_.hidden) cfg.push_back(static_cast<double>(h));
  const std::size_t len = cfg.size();
  ck.add("bpn.config", nn::Tensor({len}, std::move(cfg)));
  ck.add_all(net_.named_tensors("bpn."));
  return ck;
}

BpnModel BpnModel::from_checkpoint(const nn::Checkpoint& ck) {
  if (ck.get("model_kind")[0] != 2.0) throw ContractError("checkpoint does not hold a bpn model");
  const nn::Tensor& c = ck.get("bpn.config");
  BpnConfig cfg;
  cfg.input_dim = static_cast<std::size_t>(c[0]);
  cfg.hidden.clear();
  for (std::size_t i = 3; i < c.size(); ++i) cfg.hidden.push_back(static_cast<std::size_t>(c[i]));
  Rng scratch = make_rng(0);
  BpnModel m(cfg, scratch, c[1]);
  m.net_.load_named_tensors("bpn.", ck.entries());
  m.frozen_ = c[2] != 0.0;
  return m;
}

namespace {

nn::Tensor stack_states(const std::vector<BpnSample>& s, std::span<const std::size_t> idx, std::size_t dim) {
  nn::Tensor t = nn::Tensor::matrix(idx.size(), dim);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (s[idx[r]].state.size() != dim) throw DimensionError("BPN sample has the wrong state width");
    std::copy(s[idx[r]].state.begin(), s[idx[r]].state.end(), t.row(r).begin());
  }
  return t;
}

std::vector<double> labels(const std::vector<BpnSample>& s, std::span<const std::size_t> idx) {
  std::vector<double> y;
  y.reserve(idx.size());
  for (std::size_t i : idx) y.push_back(s[i].energy_j);
  return y;
}

}  // namespace

BpnPretrainResult bpn_pretrain(std::vector<BpnSample> samples, const BpnConfig& cfg,
                               const BpnTrainConfig& train, Rng& rng) {
  if (samples.size() < 2) throw ContractError("bpn_pretrain: need at least two samples");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_val = static_cast<std::size_t>(std::floor(train.validation_fraction * samples.size()));
  n_val = std::min(n_val, samples.size() - 1);
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> tr(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

  double mean = 0.0;
  for (std::size_t i : tr) mean += samples[i].energy_j;
  mean /= static_cast<double>(tr.size());

  BpnPretrainResult result{BpnModel(cfg, rng, std::max(mean, 1e-9)), {}, 0.0, mean, tr.size(), val.size()};
  BpnModel& model = result.model;
  nn::AdamState adam(model.net().parameter_count(), train.learning_rate);

  const nn::Tensor all_x = stack_states(samples, tr, cfg.input_dim);
  const std::vector<double> all_y = labels(samples, tr);
  result.loss_curve.push_back(model.loss_and_gradient(all_x, all_y).loss);

  const std::size_t batch = std::max<std::size_t>(1, std::min(train.batch_size, tr.size()));
  for (std::size_t epoch = 0; epoch < train.epochs; ++epoch) {
    std::shuffle(tr.begin(), tr.end(), rng);
    for (std::size_t start = 0; start < tr.size(); start += batch) {
      const std::span<const std::size_t> mb(tr.data() + start, std::min(batch, tr.size() - start));
      model.train_step(stack_states(samples, mb, cfg.input_dim), labels(samples, mb), adam);
    }
    result.loss_curve.push_back(model.loss_and_gradient(all_x, all_y).loss);
  }
  model.freeze();

  if (!val.empty()) {
    const nn::Tensor vx = stack_states(samples, val, cfg.input_dim);
    const nn::Tensor pred = model.predict_batch(vx);
    double se = 0.0;
    for (std::size_t i = 0; i < val.size(); ++i) {
      const double d = pred[i] - samples[val[i]].energy_j;
      se += d * d;
    }
    result.validation_rmse_j = std::sqrt(se / static_cast<double>(val.size()));
  }
  return result;
}

}  // namespace fmeac::features
