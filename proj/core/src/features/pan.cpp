#include "fmeac/features/pan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fmeac/common/errors.hpp"

namespace fmeac::features {

namespace {

constexpr std::size_t kPositionDim = 3;

nn::Tensor rows_prefix(const nn::Tensor& t, std::size_t n) {
  std::vector<double> data(t.data().begin(), t.data().begin() + static_cast<std::ptrdiff_t>(n * t.cols()));
  return nn::Tensor({n, t.cols()}, std::move(data));
}

}  // namespace

PanModel::PanModel(PanConfig cfg, Rng& rng) : cfg_(cfg) {
  if (cfg_.point_dim != kPositionDim + cfg_.payload_dim) {
    throw DimensionError("PanConfig: point_dim must be 3 + payload_dim");
  }
  encoder_ = nn::DenseNet({cfg_.point_dim, {cfg_.hidden, cfg_.hidden}, nn::Activation::relu,
                           {nn::HeadSpec::linear(cfg_.feature_dim)}},
                          rng);
  head_ = nn::DenseNet({cfg_.feature_dim + kPositionDim, {cfg_.head_hidden}, nn::Activation::relu,
                        {nn::HeadSpec::linear(cfg_.payload_dim)}},
                       rng);
}

nn::Tensor PanModel::truncated(const nn::Tensor& points) const {
  if (points.empty()) return nn::Tensor::matrix(1, cfg_.point_dim);
  if (points.cols() != cfg_.point_dim) {
    throw DimensionError("PanModel: point width " + std::to_string(points.cols()) + " != " +
                         std::to_string(cfg_.point_dim));
  }
  if (points.rows() > cfg_.max_points) return rows_prefix(points, cfg_.max_points);
  return points;
}

nn::Tensor PanModel::pooled(const nn::Tensor& points) const {
  const nn::Tensor codes = encoder_.forward(truncated(points))[0];
  nn::Tensor out = nn::Tensor::matrix(1, cfg_.feature_dim);
  for (std::size_t r = 0; r < codes.rows(); ++r) {
    for (std::size_t j = 0; j < cfg_.feature_dim; ++j) out(0, j) += codes(r, j);
  }
  for (double& v : out.data()) v /= static_cast<double>(codes.rows());
  return out;
}

nn::Tensor PanModel::feature(const nn::Tensor& points) const {
  nn::Tensor f = pooled(points);
  for (double& v : f.data()) v *= cfg_.beta;
  return f;
}

PanModel::LossGradient PanModel::loss_and_gradient(std::span<const nn::Tensor* const> arrays) const {
  if (frozen_) throw ContractError("PanModel: the reconstruction head was removed by freeze()");
  LossGradient out;
  out.encoder.assign(encoder_.parameter_count(), 0.0);
  out.head.assign(head_.parameter_count(), 0.0);
  if (arrays.empty()) return out;
  const double per_array = 1.0 / static_cast<double>(arrays.size());
  const std::size_t f = cfg_.feature_dim;

  for (const nn::Tensor* arr : arrays) {
    const nn::Tensor pts = truncated(*arr);
    const std::size_t n = pts.rows();
    const nn::ForwardPass enc = encoder_.forward_cached(pts);
    const nn::Tensor& codes = enc.outputs[0];
    std::vector<double> pool(f, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < f; ++j) pool[j] += codes(r, j) / static_cast<double>(n);
    }
    // head input per point: [pooled code, position]
    nn::Tensor head_in = nn::Tensor::matrix(n, f + kPositionDim);
    for (std::size_t r = 0; r < n; ++r) {
      std::copy(pool.begin(), pool.end(), head_in.row(r).begin());
      for (std::size_t c = 0; c < kPositionDim; ++c) head_in(r, f + c) = pts(r, c);
    }
    const nn::ForwardPass hp = head_.forward_cached(head_in);
    const nn::Tensor& pred = hp.outputs[0];
    const double denom = static_cast<double>(n * cfg_.payload_dim);
    nn::Tensor grad_pred = nn::Tensor::matrix(n, cfg_.payload_dim);
    double loss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < cfg_.payload_dim; ++c) {
        const double diff = pred(r, c) - pts(r, kPositionDim + c);
        loss += diff * diff / denom;
        grad_pred(r, c) = 2.0 * diff / denom * per_array;
      }
    }
    out.loss += loss * per_array;

    const std::vector<nn::Tensor> hg{grad_pred};
    const nn::Gradients hgrad = head_.backward(hp, hg);
    for (std::size_t i = 0; i < out.head.size(); ++i) out.head[i] += hgrad.params[i];
    // every point's code contributes 1/n to the pooled vector
    nn::Tensor grad_codes = nn::Tensor::matrix(n, f);
    std::vector<double> gpool(f, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < f; ++j) gpool[j] += hgrad.input(r, j);
    }
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < f; ++j) grad_codes(r, j) = gpool[j] / static_cast<double>(n);
    }
    const std::vector<nn::Tensor> eg{grad_codes};
    const nn::Gradients egrad = encoder_.backward(enc, eg);
    for (std::size_t i = 0; i < out.encoder.size(); ++i) out.encoder[i] += egrad.params[i];
  }
  return out;
}

double PanModel::reconstruction_loss(std::span<const nn::Tensor* const> arrays) const {
  return loss_and_gradient(arrays).loss;
}

double PanModel::train_step(std::span<const nn::Tensor* const> arrays, nn::AdamState& encoder_adam,
                            nn::AdamState& head_adam) {
  const LossGradient g = loss_and_gradient(arrays);
  if (!std::isfinite(g.loss)) throw NumericError("PAN pretraining: non-finite reconstruction loss");
  nn::adam_step(encoder_.mutable_parameters(), g.encoder, encoder_adam);
  nn::adam_step(head_.mutable_parameters(), g.head, head_adam);
  return g.loss;
}

void PanModel::freeze() {
  frozen_ = true;
  head_ = nn::DenseNet();
}

nn::DenseNet& PanModel::mutable_encoder() {
  if (frozen_) throw ContractError("PanModel: frozen encoder is immutable");
  return encoder_;
}

nn::DenseNet& PanModel::mutable_head() {
  if (frozen_) throw ContractError("PanModel: the reconstruction head was removed by freeze()");
  return head_;
}

nn::Checkpoint PanModel::to_checkpoint() const {
  nn::Checkpoint ck;
  ck.add("model_kind", nn::Tensor({1}, std::vector<double>{1.0}));
  ck.add("pan.config",
         nn::Tensor({8}, std::vector<double>{
                             static_cast<double>(cfg_.point_dim), static_cast<double>(cfg_.payload_dim),
                             static_cast<double>(cfg_.hidden), static_cast<double>(cfg_.feature_dim),
                             static_cast<double>(cfg_.head_hidden), static_cast<double>(cfg_.max_points),
                             cfg_.beta, frozen_ ? 1.0 : 0.0}));
  ck.add_all(encoder_.named_tensors("pan.encoder."));
  if (!frozen_) ck.add_all(head_.named_tensors("pan.head."));
  return ck;
}

PanModel PanModel::from_checkpoint(const nn::Checkpoint& ck) {
  if (ck.get("model_kind")[0] != 1.0) throw ContractError("checkpoint does not hold a pan model");
  const nn::Tensor& c = ck.get("pan.config");
  PanConfig cfg;
  cfg.point_dim = static_cast<std::size_t>(c[0]);
  cfg.payload_dim = static_cast<std::size_t>(c[1]);
  cfg.hidden = static_cast<std::size_t>(c[2]);
  cfg.feature_dim = static_cast<std::size_t>(c[3]);
  cfg.head_hidden = static_cast<std::size_t>(c[4]);
  cfg.max_points = static_cast<std::size_t>(c[5]);
  cfg.beta = c[6];
  Rng scratch = make_rng(0);
  PanModel m(cfg, scratch);
  m.encoder_.load_named_tensors("pan.encoder.", ck.entries());
  if (c[7] != 0.0) {
    m.freeze();
  } else {
    m.head_.load_named_tensors("pan.head.", ck.entries());
  }
  return m;
}

PanPretrainResult pan_pretrain(const std::vector<nn::Tensor>& dataset, const PanConfig& cfg,
                               const PanTrainConfig& train, Rng& rng) {
  if (dataset.empty()) throw ContractError("pan_pretrain: empty dataset");
  PanPretrainResult result{PanModel(cfg, rng), {}};
  PanModel& model = result.model;
  nn::AdamState enc_adam(model.encoder().parameter_count(), train.learning_rate);
  nn::AdamState head_adam(model.head().parameter_count(), train.learning_rate);

  std::vector<const nn::Tensor*> all;
  for (const auto& t : dataset) all.push_back(&t);
  result.loss_curve.push_back(model.reconstruction_loss(all));

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = std::max<std::size_t>(1, std::min(train.batch_size, dataset.size()));
  for (std::size_t epoch = 0; epoch < train.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::vector<const nn::Tensor*> mb;
      for (std::size_t k = start; k < std::min(order.size(), start + batch); ++k) mb.push_back(&dataset[order[k]]);
      model.train_step(mb, enc_adam, head_adam);
    }
    result.loss_curve.push_back(model.reconstruction_loss(all));
  }
  model.freeze();
  return result;
}

}  // namespace fmeac::features
