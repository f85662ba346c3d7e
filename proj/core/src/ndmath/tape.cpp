#include "kebio/ndmath/tape.hpp"

#include <algorithm>

namespace kebio::inline KEBIO_PRECISION_NS {

namespace detail {

struct Record {
  std::shared_ptr<Node> out;
  std::vector<std::shared_ptr<Node>> inputs;
  Adjoint adjoint;
};

struct TapeState {
  std::vector<Record> records;
  bool consumed = false;

  void backward(const std::shared_ptr<Node>& loss) {
    if (consumed) {
      throw UsageError(
          "backward: tape already replayed; call reset() before reusing it");
    }
    if (loss->tape_index >= records.size() ||
        records[loss->tape_index].out != loss) {
      throw UsageError("backward: loss was not recorded on this tape");
    }
    const std::size_t last = loss->tape_index;
    // Every leaf reachable from the loss ends up with a full gradient buffer.
    for (std::size_t r = 0; r <= last; ++r) {
      for (const auto& in : records[r].inputs) {
        if (in->requires_grad && in->grad.empty() &&
            in->tape.lock().get() != this) {
          in->grad.assign(in->data.size(), real{0});
        }
      }
    }
    loss->grad.assign(loss->data.size(), real{1});
    for (std::size_t r = last + 1; r-- > 0;) {
      Record& rec = records[r];
      if (rec.out->grad.empty()) continue;
      AdjointContext ctx(rec.inputs);
      rec.adjoint(rec.out->grad, ctx);
    }
    consumed = true;
    records.clear();
    records.shrink_to_fit();
  }
};

}  // namespace detail

namespace {
thread_local Tape* g_active_tape = nullptr;
}

std::span<real> AdjointContext::grad(std::size_t i) {
  auto& node = *inputs_[i];
  if (node.grad.empty()) node.grad.assign(node.data.size(), real{0});
  return node.grad;
}

Tape::Tape()
    : state_(std::make_shared<detail::TapeState>()), previous_(g_active_tape) {
  g_active_tape = this;
}

Tape::~Tape() { g_active_tape = previous_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::backward(const Tensor& loss) {
  if (!loss.defined()) throw UsageError("backward: undefined loss tensor");
  if (loss.size() != 1) {
    throw UsageError("backward: loss must be a scalar, got " +
                     loss.shape_string());
  }
  if (!loss.requires_grad()) {
    throw UsageError("backward: loss does not depend on any trainable tensor");
  }
  state_->backward(loss.node());
}

void Tape::reset() {
  state_->records.clear();
  state_->consumed = false;
}

std::size_t Tape::size() const { return state_->records.size(); }

bool Tape::consumed() const { return state_->consumed; }

void Tape::record(Tensor& out, std::vector<Tensor> inputs, Adjoint adjoint) {
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const Tensor& t) { return t.requires_grad(); });
  if (!any) return;
  if (state_->consumed) {
    throw UsageError("tape already replayed; call reset() before recording");
  }
  detail::Record rec;
  rec.out = out.node();
  rec.inputs.reserve(inputs.size());
  for (auto& t : inputs) rec.inputs.push_back(t.node());
  rec.adjoint = std::move(adjoint);
  out.set_requires_grad(true);
  out.node()->tape = state_;
  out.node()->tape_index = state_->records.size();
  state_->records.push_back(std::move(rec));
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw UsageError("backward: undefined loss tensor");
  if (loss.size() != 1) {
    throw UsageError("backward: loss must be a scalar, got " +
                     loss.shape_string());
  }
  auto state = loss.node()->tape.lock();
  if (!loss.requires_grad() || !state) {
    throw UsageError("backward: loss was not produced on a live tape");
  }
  state->backward(loss.node());
}

Tensor make_result(Shape shape, std::vector<real> data,
                   std::vector<Tensor> inputs, Adjoint adjoint) {
  Tensor out = Tensor::from_data(std::move(shape), std::move(data));
  if (Tape* tape = Tape::active()) {
    tape->record(out, std::move(inputs), std::move(adjoint));
  }
  return out;
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
