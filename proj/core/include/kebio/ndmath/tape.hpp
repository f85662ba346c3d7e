#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "kebio/ndmath/tensor.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

/// Gives an op's adjoint access to its inputs' values and gradient buffers.
class AdjointContext {
 public:
  explicit AdjointContext(std::span<const std::shared_ptr<detail::Node>> inputs)
      : inputs_(inputs) {}

  bool needs(std::size_t i) const { return inputs_[i]->requires_grad; }
  std::span<const real> value(std::size_t i) const { return inputs_[i]->data; }
  /// Gradient accumulator of input i, zero-initialised on first use.
  std::span<real> grad(std::size_t i);

 private:
  std::span<const std::shared_ptr<detail::Node>> inputs_;
};

using Adjoint =
    std::function<void(std::span<const real> out_grad, AdjointContext& ctx)>;

/// Ordered record of the ops evaluated while the tape is active on this
/// thread. Constructing a Tape activates it; destruction restores whatever
/// tape was active before. With no active tape, ops record nothing and their
/// outputs never require grad.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();

  /// Replays adjoints from `loss` back to the first record. Leaf gradients
  /// accumulate. A tape can be replayed once; reset() makes it reusable.
  void backward(const Tensor& loss);
  void reset();

  std::size_t size() const;
  bool consumed() const;

  /// Called by ops. No-op unless some input requires grad.
  void record(Tensor& out, std::vector<Tensor> inputs, Adjoint adjoint);

 private:
  std::shared_ptr<detail::TapeState> state_;
  Tape* previous_;
};

/// Runs the backward pass of whichever tape recorded `loss`.
void backward(const Tensor& loss);

/// Builds an op result and records it on the active tape when any input
/// requires grad.
Tensor make_result(Shape shape, std::vector<real> data,
                   std::vector<Tensor> inputs, Adjoint adjoint);

}  // namespace kebio::inline KEBIO_PRECISION_NS
