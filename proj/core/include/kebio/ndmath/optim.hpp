#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kebio/ndmath/tensor.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct OptimParam {
  std::string name;
  Tensor tensor;
  bool decay = true;
};

/// Adam with decoupled weight decay. With weight_decay = 0 this is plain Adam.
/// Parameters whose requires_grad flag is off are skipped entirely.
class AdamW {
 public:
  AdamW(std::vector<OptimParam> params, AdamWOptions options);

  void step(double lr);
  void zero_grad();

  std::int64_t steps() const { return steps_; }
  const std::vector<OptimParam>& params() const { return params_; }

  /// Moment buffers as named tensors ("adam.m.<name>", "adam.v.<name>").
  std::vector<NamedTensor> state() const;
  void load_state(const std::vector<NamedTensor>& state, std::int64_t steps);

 private:
  std::vector<OptimParam> params_;
  AdamWOptions options_;
  std::vector<std::vector<real>> m_;
  std::vector<std::vector<real>> v_;
  std::int64_t steps_ = 0;
};

/// Linear warmup to the peak rate, then linear decay to zero at total_steps.
class LinearSchedule {
 public:
  LinearSchedule(double peak, std::int64_t warmup_steps, std::int64_t total_steps)
      : peak_(peak), warmup_(warmup_steps), total_(total_steps) {}

  double at(std::int64_t step) const;

 private:
  double peak_;
  std::int64_t warmup_;
  std::int64_t total_;
};

/// Scales all gradients so their global L2 norm is at most max_norm. Returns
/// the norm before clipping. max_norm <= 0 disables clipping.
double clip_grad_norm(const std::vector<OptimParam>& params, double max_norm);

}  // namespace kebio::inline KEBIO_PRECISION_NS
