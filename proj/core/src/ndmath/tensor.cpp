#include "kebio/ndmath/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace kebio::inline KEBIO_PRECISION_NS {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

namespace {
void check_shape(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have rank >= 1");
  for (std::size_t e : shape) {
    if (e == 0) {
      throw DimensionError("tensor extents must be positive, got " +
                           shape_string(shape));
    }
  }
}
}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), real{0}, requires_grad);
}

Tensor Tensor::full(Shape shape, real value, bool requires_grad) {
  check_shape(shape);
  auto node = std::make_shared<detail::Node>();
  node->data.assign(shape_size(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from_data(Shape shape, std::vector<real> data,
                         bool requires_grad) {
  check_shape(shape);
  if (shape_size(shape) != data.size()) {
    throw DimensionError("data length " + std::to_string(data.size()) +
                         " does not match shape " + kebio::shape_string(shape));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(real value) { return from_data({1}, {value}); }

std::size_t Tensor::rows() const {
  if (rank() == 1) return 1;
  if (rank() == 2) return dim(0);
  throw DimensionError("expected rank <= 2, got " + shape_string());
}

std::size_t Tensor::cols() const {
  if (rank() == 1) return dim(0);
  if (rank() == 2) return dim(1);
  throw DimensionError("expected rank <= 2, got " + shape_string());
}

real Tensor::item() const {
  if (size() != 1) {
    throw DimensionError("item() needs a single-element tensor, got " +
                         shape_string());
  }
  return node_->data[0];
}

real Tensor::at(std::size_t row, std::size_t col) const {
  if (row >= rows() || col >= cols()) {
    throw IndexError("index (" + std::to_string(row) + ", " +
                     std::to_string(col) + ") out of range for " +
                     shape_string());
  }
  return node_->data[row * cols() + col];
}

std::span<real> Tensor::mutable_grad() {
  if (node_->grad.empty()) node_->grad.assign(node_->data.size(), real{0});
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), real{0});
}

Tensor Tensor::detach() const { return from_data(shape(), node_->data, false); }

Tensor Tensor::clone() const {
  return from_data(shape(), node_->data, node_->requires_grad);
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
