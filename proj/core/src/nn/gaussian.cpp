#include "fmeac/nn/gaussian.hpp"

#include <cmath>
#include <numbers>

#include "fmeac/common/errors.hpp"

namespace fmeac::nn {

double log_one_minus_tanh_sq(double u) {
  // 1 - tanh^2 = sech^2 = 4 / (e^u + e^-u)^2
  const double a = std::abs(u);
  return 2.0 * (std::numbers::ln2 - a - std::log1p(std::exp(-2.0 * a)));
}

GaussianSample gaussian_sample(const Tensor& mu, const Tensor& log_std, std::span<const double> bounds,
                               Rng& rng) {
  Tensor noise = Tensor::matrix(mu.rows(), mu.cols());
  for (double& e : noise.data()) e = standard_normal(rng);
  return gaussian_sample_with_noise(mu, log_std, bounds, noise);
}

GaussianSample gaussian_sample_with_noise(const Tensor& mu, const Tensor& log_std,
                                          std::span<const double> bounds, const Tensor& noise) {
  if (mu.shape() != log_std.shape() || mu.shape() != noise.shape() || bounds.size() != mu.cols()) {
    throw DimensionError("gaussian_sample: mu, log_std, noise and bounds must agree");
  }
  const std::size_t batch = mu.rows();
  const std::size_t dim = mu.cols();
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  GaussianSample s;
  s.noise = noise;
  s.pretanh = Tensor::matrix(batch, dim);
  s.action = Tensor::matrix(batch, dim);
  s.log_prob = Tensor::matrix(batch, 1);
  for (std::size_t r = 0; r < batch; ++r) {
    double lp = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double eps = noise(r, i);
      const double u = mu(r, i) + std::exp(log_std(r, i)) * eps;
      s.pretanh(r, i) = u;
      s.action(r, i) = bounds[i] * std::tanh(u);
      lp += -0.5 * eps * eps - log_std(r, i) - half_log_2pi;
      lp -= std::log(bounds[i]) + log_one_minus_tanh_sq(u);
    }
    s.log_prob(r, 0) = lp;
  }
  return s;
}

GaussianGrad gaussian_backward(const GaussianSample& sample, const Tensor& log_std,
                               std::span<const double> bounds, const Tensor& grad_action,
                               const Tensor& grad_log_prob) {
  const std::size_t batch = sample.pretanh.rows();
  const std::size_t dim = sample.pretanh.cols();
  GaussianGrad g{Tensor::matrix(batch, dim), Tensor::matrix(batch, dim)};
  for (std::size_t r = 0; r < batch; ++r) {
    const double glp = grad_log_prob.empty() ? 0.0 : grad_log_prob(r, 0);
    for (std::size_t i = 0; i < dim; ++i) {
      const double t = std::tanh(sample.pretanh(r, i));
      const double ga = grad_action.empty() ? 0.0 : grad_action(r, i);
      // d log_prob / du = 2 tanh(u) through the squashing correction.
      const double gu = ga * bounds[i] * (1.0 - t * t) + glp * 2.0 * t;
      g.mu(r, i) = gu;
      g.log_std(r, i) = gu * std::exp(log_std(r, i)) * sample.noise(r, i) - glp;
    }
  }
  return g;
}

}  // namespace fmeac::nn
