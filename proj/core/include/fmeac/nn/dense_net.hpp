#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fmeac/common/rng.hpp"
#include "fmeac/nn/tensor.hpp"

namespace fmeac::nn {

enum class Activation { relu, tanh };

enum class HeadKind { linear, tanh_scaled, softmax, gaussian };

// One output head reading a contiguous slice of the final linear layer.
//
//  linear       y = z
//  tanh_scaled  y_i = bound_i * tanh(z_i)
//  softmax      y = scale * softmax(z)
//  gaussian     y = [mu, clamp(log_std)]; raw width is 2*dim. `bounds` holds the squashing
//               bound per action dimension, consumed by gaussian_sample().
struct HeadSpec {
  HeadKind kind = HeadKind::linear;
  std::size_t dim = 0;
  std::vector<double> bounds;
  double scale = 1.0;
  double log_std_min = -20.0;
  double log_std_max = 2.0;

  std::size_t raw_dim() const { return kind == HeadKind::gaussian ? 2 * dim : dim; }

  static HeadSpec linear(std::size_t dim);
  static HeadSpec tanh_scaled(std::vector<double> bounds);
  static HeadSpec softmax(std::size_t dim, double scale = 1.0);
  static HeadSpec gaussian(std::vector<double> bounds, double log_std_min = -20.0,
                           double log_std_max = 2.0);
};

struct DenseNetSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  Activation activation = Activation::relu;
  std::vector<HeadSpec> heads;
};

class DenseNet;

// Activations recorded by forward_cached(); consumed by backward().
struct ForwardPass {
  std::vector<Tensor> outputs;  // one per head

 private:
  friend class DenseNet;
  const DenseNet* net = nullptr;
  std::uint64_t version = 0;
  Tensor input;
  std::vector<Tensor> activations;  // post-activation of each hidden layer
  Tensor raw;                       // final linear output
};

struct Gradients {
  std::vector<double> params;  // same layout as DenseNet::parameters()
  Tensor input;                // d loss / d input, [batch, input_dim]
};

// Multi-layer perceptron with a hidden activation and a set of typed output heads. All
// parameters live in one flat buffer: per layer the [in, out] weight matrix followed by
// the bias vector.
class DenseNet {
 public:
  DenseNet() = default;
  // Weights and biases drawn uniform in +-1/sqrt(fan_in).
  DenseNet(DenseNetSpec spec, Rng& rng);

  const DenseNetSpec& spec() const { return spec_; }
  std::size_t input_dim() const { return spec_.input_dim; }
  std::size_t raw_output_dim() const;
  std::size_t layer_count() const { return layers_.size(); }

  // Pure evaluation; input is [batch, input_dim].
  std::vector<Tensor> forward(const Tensor& input) const;
  ForwardPass forward_cached(const Tensor& input) const;

  // Gradients of sum(head_grads[h] * outputs[h]). An empty tensor in head_grads means a
  // zero upstream gradient for that head. Throws ContractError if `pass` came from a
  // different network or parameters changed since it was recorded.
  Gradients backward(const ForwardPass& pass, std::span<const Tensor> head_grads) const;

  std::span<const double> parameters() const { return params_; }
  // Any write access invalidates outstanding ForwardPass objects.
  std::span<double> mutable_parameters() {
    ++version_;
    return params_;
  }
  std::size_t parameter_count() const { return params_.size(); }
  std::uint64_t version() const { return version_; }

  // Tensors named "layer<k>.weight" / "layer<k>.bias" for checkpointing.
  std::vector<std::pair<std::string, Tensor>> named_tensors(const std::string& prefix) const;
  // Inverse of named_tensors(); shapes must match.
  void load_named_tensors(const std::string& prefix,
                          const std::vector<std::pair<std::string, Tensor>>& tensors);

 private:
  struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;
  };

  Tensor linear(const Layer& layer, const Tensor& x) const;
  std::vector<Tensor> apply_heads(const Tensor& raw) const;
  Tensor forward_trunk(const Tensor& input, std::vector<Tensor>* activations) const;

  DenseNetSpec spec_;
  std::vector<Layer> layers_;
  std::vector<double> params_;
  std::uint64_t version_ = 0;
};

}  // namespace fmeac::nn
