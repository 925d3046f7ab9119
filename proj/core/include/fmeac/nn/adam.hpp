#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fmeac::nn {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(std::size_t n, double learning_rate) : m(n, 0.0), v(n, 0.0), lr(learning_rate) {}
};

// One bias-corrected Adam descent step in place. Throws NumericError naming the first
// non-finite gradient index; `params` is untouched in that case.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

}  // namespace fmeac::nn
