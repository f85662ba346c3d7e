#include "kebio/ndmath/optim.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace kebio::inline KEBIO_PRECISION_NS {

AdamW::AdamW(std::vector<OptimParam> params, AdamWOptions options)
    : params_(std::move(params)), options_(options) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.size(), real{0});
    v_.emplace_back(p.tensor.size(), real{0});
  }
}

void AdamW::step(double lr) {
  ++steps_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& t = params_[k].tensor;
    if (!t.requires_grad() || !t.has_grad()) continue;
    const double wd = params_[k].decay ? options_.weight_decay : 0.0;
    auto w = t.mutable_data();
    const auto g = t.grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      const double mi = b1 * m[i] + (1.0 - b1) * gi;
      const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
      m[i] = static_cast<real>(mi);
      v[i] = static_cast<real>(vi);
      const double update = (mi / c1) / (std::sqrt(vi / c2) + options_.eps);
      w[i] = static_cast<real>(w[i] - lr * (update + wd * w[i]));
    }
  }
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

std::vector<NamedTensor> AdamW::state() const {
  std::vector<NamedTensor> out;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const Shape& shape = params_[k].tensor.shape();
    out.push_back({"adam.m." + params_[k].name, Tensor::from_data(shape, m_[k])});
    out.push_back({"adam.v." + params_[k].name, Tensor::from_data(shape, v_[k])});
  }
  return out;
}

void AdamW::load_state(const std::vector<NamedTensor>& state,
                       std::int64_t steps) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& s : state) by_name[s.name] = &s.tensor;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    for (auto [prefix, buf] : {std::pair{"adam.m.", &m_[k]}, std::pair{"adam.v.", &v_[k]}}) {
      const std::string key = prefix + params_[k].name;
      auto it = by_name.find(key);
      if (it == by_name.end()) throw DataError("optimizer state missing '" + key + "'");
      if (it->second->size() != buf->size()) {
        throw DataError("optimizer state '" + key + "' has wrong size");
      }
      const auto d = it->second->data();
      buf->assign(d.begin(), d.end());
    }
  }
  steps_ = steps;
}

double LinearSchedule::at(std::int64_t step) const {
  if (warmup_ > 0 && step < warmup_) {
    return peak_ * static_cast<double>(step + 1) / static_cast<double>(warmup_);
  }
  if (total_ <= warmup_) return peak_;
  const double remaining = static_cast<double>(total_ - step) /
                           static_cast<double>(total_ - warmup_);
  return peak_ * std::clamp(remaining, 0.0, 1.0);
}

double clip_grad_norm(const std::vector<OptimParam>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.tensor.requires_grad() || !p.tensor.has_grad()) continue;
    for (real g : p.tensor.grad()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double factor = max_norm / (norm + 1e-12);
    for (const auto& p : params) {
      if (!p.tensor.requires_grad() || !p.tensor.has_grad()) continue;
      Tensor t = p.tensor;
      for (real& g : t.mutable_grad()) g = static_cast<real>(g * factor);
    }
  }
  return norm;
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
