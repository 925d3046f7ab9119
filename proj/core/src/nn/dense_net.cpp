#include "fmeac/nn/dense_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fmeac/common/errors.hpp"

namespace fmeac::nn {

HeadSpec HeadSpec::linear(std::size_t dim) {
  HeadSpec h;
  h.kind = HeadKind::linear;
  h.dim = dim;
  return h;
}

HeadSpec HeadSpec::tanh_scaled(std::vector<double> bounds) {
  HeadSpec h;
  h.kind = HeadKind::tanh_scaled;
  h.dim = bounds.size();
  h.bounds = std::move(bounds);
  return h;
}

HeadSpec HeadSpec::softmax(std::size_t dim, double scale) {
  HeadSpec h;
  h.kind = HeadKind::softmax;
  h.dim = dim;
  h.scale = scale;
  return h;
}

HeadSpec HeadSpec::gaussian(std::vector<double> bounds, double log_std_min, double log_std_max) {
  HeadSpec h;
  h.kind = HeadKind::gaussian;
  h.dim = bounds.size();
  h.bounds = std::move(bounds);
  h.log_std_min = log_std_min;
  h.log_std_max = log_std_max;
  return h;
}

DenseNet::DenseNet(DenseNetSpec spec, Rng& rng) : spec_(std::move(spec)) {
  if (spec_.input_dim == 0) throw DimensionError("DenseNet: input_dim must be positive");
  if (spec_.heads.empty()) throw DimensionError("DenseNet: at least one head required");
  std::vector<std::size_t> sizes{spec_.input_dim};
  sizes.insert(sizes.end(), spec_.hidden.begin(), spec_.hidden.end());
  sizes.push_back(raw_output_dim());

  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    Layer layer{sizes[l], sizes[l + 1], offset, offset + sizes[l] * sizes[l + 1]};
    offset = layer.bias_offset + layer.out;
    layers_.push_back(layer);
  }
  params_.resize(offset);
  for (const Layer& layer : layers_) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(layer.in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t i = 0; i < layer.in * layer.out + layer.out; ++i) {
      params_[layer.weight_offset + i] = dist(rng);
    }
  }
}

std::size_t DenseNet::raw_output_dim() const {
  std::size_t n = 0;
  for (const HeadSpec& h : spec_.heads) n += h.raw_dim();
  return n;
}

Tensor DenseNet::linear(const Layer& layer, const Tensor& x) const {
  const std::size_t batch = x.rows();
  Tensor y = Tensor::matrix(batch, layer.out);
  const double* w = params_.data() + layer.weight_offset;
  const double* b = params_.data() + layer.bias_offset;
  for (std::size_t r = 0; r < batch; ++r) {
    double* out = y.row(r).data();
    std::copy_n(b, layer.out, out);
    const double* in = x.row(r).data();
    for (std::size_t k = 0; k < layer.in; ++k) {
      const double a = in[k];
      if (a == 0.0) continue;
      const double* wk = w + k * layer.out;
      for (std::size_t j = 0; j < layer.out; ++j) out[j] += a * wk[j];
    }
  }
  return y;
}

Tensor DenseNet::forward_trunk(const Tensor& input, std::vector<Tensor>* activations) const {
  if (input.rank() != 2 || input.cols() != spec_.input_dim) {
    throw DimensionError("DenseNet: expected input [batch, " + std::to_string(spec_.input_dim) +
                         "], got last dimension " + std::to_string(input.cols()));
  }
  Tensor x = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Tensor z = linear(layers_[l], x);
    if (l + 1 == layers_.size()) return z;
    for (double& v : z.data()) {
      v = spec_.activation == Activation::relu ? std::max(v, 0.0) : std::tanh(v);
    }
    if (activations != nullptr) activations->push_back(z);
    x = std::move(z);
  }
  return x;
}

std::vector<Tensor> DenseNet::apply_heads(const Tensor& raw) const {
  std::vector<Tensor> outputs;
  const std::size_t batch = raw.rows();
  std::size_t offset = 0;
  for (const HeadSpec& head : spec_.heads) {
    Tensor y = Tensor::matrix(batch, head.raw_dim());
    for (std::size_t r = 0; r < batch; ++r) {
      const double* z = raw.row(r).data() + offset;
      double* out = y.row(r).data();
      switch (head.kind) {
        case HeadKind::linear:
          std::copy_n(z, head.dim, out);
          break;
        case HeadKind::tanh_scaled:
          for (std::size_t i = 0; i < head.dim; ++i) out[i] = head.bounds[i] * std::tanh(z[i]);
          break;
        case HeadKind::softmax: {
          const double zmax = *std::max_element(z, z + head.dim);
          double sum = 0.0;
          for (std::size_t i = 0; i < head.dim; ++i) sum += (out[i] = std::exp(z[i] - zmax));
          for (std::size_t i = 0; i < head.dim; ++i) out[i] = head.scale * out[i] / sum;
          break;
        }
        case HeadKind::gaussian:
          std::copy_n(z, head.dim, out);
          for (std::size_t i = 0; i < head.dim; ++i) {
            out[head.dim + i] = std::clamp(z[head.dim + i], head.log_std_min, head.log_std_max);
          }
          break;
      }
    }
    offset += head.raw_dim();
    outputs.push_back(std::move(y));
  }
  return outputs;
}

std::vector<Tensor> DenseNet::forward(const Tensor& input) const {
  return apply_heads(forward_trunk(input, nullptr));
}

ForwardPass DenseNet::forward_cached(const Tensor& input) const {
  ForwardPass pass;
  pass.net = this;
  pass.version = version_;
  pass.input = input;
  pass.raw = forward_trunk(input, &pass.activations);
  pass.outputs = apply_heads(pass.raw);
  return pass;
}

Gradients DenseNet::backward(const ForwardPass& pass, std::span<const Tensor> head_grads) const {
  if (pass.net != this || pass.version != version_) {
    throw ContractError("DenseNet::backward: forward cache is stale or from another network");
  }
  if (head_grads.size() != spec_.heads.size()) {
    throw DimensionError("DenseNet::backward: one upstream gradient per head required");
  }
  const std::size_t batch = pass.raw.rows();

  // Head Jacobians.
  Tensor delta = Tensor::matrix(batch, raw_output_dim());
  std::size_t offset = 0;
  for (std::size_t h = 0; h < spec_.heads.size(); ++h) {
    const HeadSpec& head = spec_.heads[h];
    const Tensor& g = head_grads[h];
    if (!g.empty()) {
      if (g.rows() != batch || g.cols() != head.raw_dim()) {
        throw DimensionError("DenseNet::backward: upstream gradient shape mismatch for head " +
                             std::to_string(h));
      }
      for (std::size_t r = 0; r < batch; ++r) {
        const double* z = pass.raw.row(r).data() + offset;
        const double* y = pass.outputs[h].row(r).data();
        const double* gy = g.row(r).data();
        double* dz = delta.row(r).data() + offset;
        switch (head.kind) {
          case HeadKind::linear:
            std::copy_n(gy, head.dim, dz);
            break;
          case HeadKind::tanh_scaled:
            for (std::size_t i = 0; i < head.dim; ++i) {
              const double t = std::tanh(z[i]);
              dz[i] = gy[i] * head.bounds[i] * (1.0 - t * t);
            }
            break;
          case HeadKind::softmax: {
            // y = s * p ;  dz_i = p_i * (s * gy_i - sum_j gy_j * y_j)
            double dot = 0.0;
            for (std::size_t i = 0; i < head.dim; ++i) dot += gy[i] * y[i];
            for (std::size_t i = 0; i < head.dim; ++i) {
              const double p = y[i] / head.scale;
              dz[i] = p * (head.scale * gy[i] - dot);
            }
            break;
          }
          case HeadKind::gaussian:
            std::copy_n(gy, head.dim, dz);
            for (std::size_t i = 0; i < head.dim; ++i) {
              const double zs = z[head.dim + i];
              const bool inside = zs >= head.log_std_min && zs <= head.log_std_max;
              dz[head.dim + i] = inside ? gy[head.dim + i] : 0.0;
            }
            break;
        }
      }
    }
    offset += head.raw_dim();
  }

  Gradients grads;
  grads.params.assign(params_.size(), 0.0);
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Layer& layer = layers_[l];
    const Tensor& x = l == 0 ? pass.input : pass.activations[l - 1];
    double* dw = grads.params.data() + layer.weight_offset;
    double* db = grads.params.data() + layer.bias_offset;
    const double* w = params_.data() + layer.weight_offset;
    for (std::size_t r = 0; r < batch; ++r) {
      const double* d = delta.row(r).data();
      const double* in = x.row(r).data();
      for (std::size_t j = 0; j < layer.out; ++j) db[j] += d[j];
      for (std::size_t k = 0; k < layer.in; ++k) {
        const double a = in[k];
        if (a == 0.0) continue;
        double* dwk = dw + k * layer.out;
        for (std::size_t j = 0; j < layer.out; ++j) dwk[j] += a * d[j];
      }
    }
    Tensor prev = Tensor::matrix(batch, layer.in);
    for (std::size_t r = 0; r < batch; ++r) {
      const double* d = delta.row(r).data();
      double* p = prev.row(r).data();
      for (std::size_t k = 0; k < layer.in; ++k) {
        const double* wk = w + k * layer.out;
        double s = 0.0;
        for (std::size_t j = 0; j < layer.out; ++j) s += wk[j] * d[j];
        p[k] = s;
      }
    }
    if (l > 0) {
      // Through the hidden activation that produced x.
      for (std::size_t i = 0; i < prev.size(); ++i) {
        const double a = x[i];
        prev[i] *= spec_.activation == Activation::relu ? (a > 0.0 ? 1.0 : 0.0) : (1.0 - a * a);
      }
    }
    delta = std::move(prev);
  }
  grads.input = std::move(delta);
  return grads;
}

std::vector<std::pair<std::string, Tensor>> DenseNet::named_tensors(const std::string& prefix) const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    const auto w_begin = params_.begin() + static_cast<std::ptrdiff_t>(layer.weight_offset);
    const auto b_begin = params_.begin() + static_cast<std::ptrdiff_t>(layer.bias_offset);
    out.emplace_back(prefix + "layer" + std::to_string(l) + ".weight",
                     Tensor({layer.in, layer.out},
                            std::vector<double>(w_begin, w_begin + static_cast<std::ptrdiff_t>(layer.in * layer.out))));
    out.emplace_back(prefix + "layer" + std::to_string(l) + ".bias",
                     Tensor({layer.out}, std::vector<double>(b_begin, b_begin + static_cast<std::ptrdiff_t>(layer.out))));
  }
  return out;
}

void DenseNet::load_named_tensors(const std::string& prefix,
                                  const std::vector<std::pair<std::string, Tensor>>& tensors) {
  auto find = [&](const std::string& name) -> const Tensor& {
    for (const auto& [n, t] : tensors) {
      if (n == name) return t;
    }
    throw ContractError("checkpoint is missing tensor '" + name + "'");
  };
  std::span<double> params = mutable_parameters();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    const Tensor& w = find(prefix + "layer" + std::to_string(l) + ".weight");
    const Tensor& b = find(prefix + "layer" + std::to_string(l) + ".bias");
    if (w.size() != layer.in * layer.out || b.size() != layer.out) {
      throw DimensionError("checkpoint tensor shape mismatch at layer " + std::to_string(l));
    }
    std::copy(w.data().begin(), w.data().end(), params.begin() + static_cast<std::ptrdiff_t>(layer.weight_offset));
    std::copy(b.data().begin(), b.data().end(), params.begin() + static_cast<std::ptrdiff_t>(layer.bias_offset));
  }
}

}  // namespace fmeac::nn
