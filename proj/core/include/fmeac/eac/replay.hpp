#pragma once

#include <memory>
#include <span>
#include <vector>

#include "fmeac/common/rng.hpp"
#include "fmeac/features/graph.hpp"
#include "fmeac/nn/tensor.hpp"

namespace fmeac::eac {

struct Transition {
  std::vector<double> obs;
  std::vector<double> action;
  double reward = 0.0;
  double secondary = 0.0;  // r-hat
  std::vector<double> next_obs;
  bool done = false;
  int mode = -1;       // task mode of the acting UAV (0 COL, 1 RTH), -1 when not applicable
  int next_mode = -1;  // task mode after the step

  // Environment features at obs / next_obs. For an adaptively trained feature model the
  // graphs are kept instead and the features are recomputed at update time.
  std::vector<double> feature;
  std::vector<double> next_feature;
  std::shared_ptr<const features::GraphSnapshot> graph;
  std::shared_ptr<const features::GraphSnapshot> next_graph;
};

// Fixed-capacity ring buffer; the oldest transition is overwritten first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return items_.at(i); }

  // Uniform draw with replacement.
  std::vector<const Transition*> sample(std::size_t batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

// Column-stacked view of a sampled batch.
struct Batch {
  nn::Tensor obs;          // [B, obs_dim]
  nn::Tensor action;       // [B, action_dim]
  nn::Tensor reward;       // [B, 1]
  nn::Tensor secondary;    // [B, 1]
  nn::Tensor next_obs;     // [B, obs_dim]
  nn::Tensor done;         // [B, 1], 1 for terminal
  nn::Tensor feature;      // [B, F] (F may be 0)
  nn::Tensor next_feature; // [B, F]
  std::vector<int> mode;
  std::vector<int> next_mode;

  std::size_t size() const { return obs.rows(); }
};

// Stacks the transitions; features come from the stored vectors and are [B, 0] when
// feature_dim is 0.
Batch make_batch(std::span<const Transition* const> items, std::size_t feature_dim);

}  // namespace fmeac::eac
