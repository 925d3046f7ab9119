#pragma once

#include <span>

#include "fmeac/common/rng.hpp"
#include "fmeac/nn/tensor.hpp"

namespace fmeac::nn {

// Reparameterized draw from a tanh-squashed diagonal Gaussian:
//   u = mu + exp(log_std) * noise,  a = bound * tanh(u)
// log_prob is the density of `a` (one column), including the change of variables
//   log|da/du| = log(bound) + log(1 - tanh(u)^2).
struct GaussianSample {
  Tensor noise;     // [batch, dim]
  Tensor pretanh;   // u
  Tensor action;    // a
  Tensor log_prob;  // [batch, 1]
};

GaussianSample gaussian_sample(const Tensor& mu, const Tensor& log_std, std::span<const double> bounds,
                               Rng& rng);
GaussianSample gaussian_sample_with_noise(const Tensor& mu, const Tensor& log_std,
                                          std::span<const double> bounds, const Tensor& noise);

struct GaussianGrad {
  Tensor mu;
  Tensor log_std;
};

// Pulls gradients w.r.t. the sampled action and its log_prob back to mu and log_std with the
// noise held fixed. Either upstream tensor may be empty (treated as zero).
GaussianGrad gaussian_backward(const GaussianSample& sample, const Tensor& log_std,
                               std::span<const double> bounds, const Tensor& grad_action,
                               const Tensor& grad_log_prob);

// log(1 - tanh(u)^2) without cancellation for large |u|.
double log_one_minus_tanh_sq(double u);

}  // namespace fmeac::nn
