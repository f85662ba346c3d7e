#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kebio/base.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

namespace detail {
struct TapeState;

struct Node {
  Shape shape;
  std::vector<real> data;
  std::vector<real> grad;  // empty until first written
  bool requires_grad = false;
  // Set when the node is the output of a recorded op.
  std::weak_ptr<TapeState> tape;
  std::size_t tape_index = 0;
};
}  // namespace detail

/// Handle to a dense row-major array. Copies share storage; use clone() for a
/// deep copy. Rank-1 tensors of extent n behave as 1 x n rows in 2-D ops.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, real value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<real> data,
                          bool requires_grad = false);
  static Tensor scalar(real value);

  bool defined() const { return node_ != nullptr; }

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->data.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  // 2-D view: rank-1 is one row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const real> data() const { return node_->data; }
  std::span<real> mutable_data() { return node_->data; }
  real item() const;
  real at(std::size_t row, std::size_t col) const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const real> grad() const { return node_->grad; }
  /// Grad buffer, allocated as zeros on first access.
  std::span<real> mutable_grad();
  void zero_grad();

  /// New leaf holding a copy of the data; never requires grad.
  Tensor detach() const;
  /// Deep copy of data and the requires_grad flag; no grad, no history.
  Tensor clone() const;

  bool same_storage(const Tensor& other) const { return node_ == other.node_; }
  std::string shape_string() const { return kebio::shape_string(shape()); }

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

}  // namespace kebio::inline KEBIO_PRECISION_NS
