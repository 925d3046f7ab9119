#include "fmeac/eac/replay.hpp"

#include "fmeac/common/errors.hpp"

namespace fmeac::eac {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ContractError("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  if (items_.empty()) throw ContractError("ReplayBuffer: cannot sample from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<const Transition*> out;
  out.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) out.push_back(&items_[pick(rng)]);
  return out;
}

namespace {

nn::Tensor stack(std::span<const Transition* const> items, std::size_t cols,
                 const std::vector<double>& (*field)(const Transition&)) {
  nn::Tensor t = nn::Tensor::matrix(items.size(), cols);
  for (std::size_t b = 0; b < items.size(); ++b) {
    const auto& v = field(*items[b]);
    if (v.size() != cols) throw DimensionError("make_batch: ragged transition field");
    std::copy(v.begin(), v.end(), t.row(b).begin());
  }
  return t;
}

}  // namespace

Batch make_batch(std::span<const Transition* const> items, std::size_t feature_dim) {
  if (items.empty()) throw ContractError("make_batch: empty batch");
  const Transition& first = *items.front();
  Batch b;
  b.obs = stack(items, first.obs.size(), [](const Transition& t) -> const std::vector<double>& { return t.obs; });
  b.action = stack(items, first.action.size(), [](const Transition& t) -> const std::vector<double>& { return t.action; });
  b.next_obs = stack(items, first.obs.size(), [](const Transition& t) -> const std::vector<double>& { return t.next_obs; });
  b.reward = nn::Tensor::matrix(items.size(), 1);
  b.secondary = nn::Tensor::matrix(items.size(), 1);
  b.done = nn::Tensor::matrix(items.size(), 1);
  for (std::size_t i = 0; i < items.size(); ++i) {
    b.reward(i, 0) = items[i]->reward;
    b.secondary(i, 0) = items[i]->secondary;
    b.done(i, 0) = items[i]->done ? 1.0 : 0.0;
    b.mode.push_back(items[i]->mode);
    b.next_mode.push_back(items[i]->next_mode);
  }
  if (feature_dim > 0 && !first.feature.empty()) {
    b.feature = stack(items, feature_dim, [](const Transition& t) -> const std::vector<double>& { return t.feature; });
    b.next_feature =
        stack(items, feature_dim, [](const Transition& t) -> const std::vector<double>& { return t.next_feature; });
  } else {
    b.feature = nn::Tensor::matrix(items.size(), feature_dim);
    b.next_feature = nn::Tensor::matrix(items.size(), feature_dim);
  }
  return b;
}

}  // namespace fmeac::eac
