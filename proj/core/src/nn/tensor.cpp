#include "fmeac/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "fmeac/common/errors.hpp"

namespace fmeac::nn {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size()) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape product " + std::to_string(element_count(shape_)));
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::row_vector(std::span<const double> values) {
  return Tensor({1, values.size()}, std::vector<double>(values.begin(), values.end()));
}

std::size_t Tensor::rows() const {
  if (shape_.size() < 2) return 1;
  return shape_.front();
}

std::size_t Tensor::cols() const { return shape_.empty() ? 1 : shape_.back(); }

void Tensor::check_finite(std::string_view where) const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw NumericError(std::string(where) + ": non-finite value at index " + std::to_string(i));
    }
  }
}

Tensor concat_cols(std::initializer_list<const Tensor*> parts) {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool first = true;
  for (const Tensor* p : parts) {
    if (p->empty() && p->rank() != 2) continue;
    if (first) {
      rows = p->rows();
      first = false;
    } else if (p->rows() != rows) {
      throw DimensionError("concat_cols: row count mismatch");
    }
    cols += p->cols();
  }
  Tensor out = Tensor::matrix(rows, cols);
  std::size_t offset = 0;
  for (const Tensor* p : parts) {
    if (p->empty() && p->rank() != 2) continue;
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(p->row(r).begin(), p->cols(), out.row(r).begin() + static_cast<std::ptrdiff_t>(offset));
    }
    offset += p->cols();
  }
  return out;
}

Tensor slice_cols(const Tensor& t, std::size_t begin, std::size_t count) {
  if (begin + count > t.cols()) throw DimensionError("slice_cols: range exceeds column count");
  Tensor out = Tensor::matrix(t.rows(), count);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    std::copy_n(t.row(r).begin() + static_cast<std::ptrdiff_t>(begin), count, out.row(r).begin());
  }
  return out;
}

}  // namespace fmeac::nn
