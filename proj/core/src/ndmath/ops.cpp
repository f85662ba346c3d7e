#include "kebio/ndmath/ops.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace kebio::inline KEBIO_PRECISION_NS::nd {

namespace {

std::string pair_shapes(const Tensor& a, const Tensor& b) {
  return a.shape_string() + " and " + b.shape_string();
}

void require_2d(const Tensor& t, const char* op) {
  if (t.rank() > 2) {
    throw DimensionError(std::string(op) + ": expected rank <= 2, got " +
                         t.shape_string());
  }
}

enum class Broadcast { kSame, kScalar, kRow };

// Decides how `small` stretches over `big`; throws if it cannot.
Broadcast classify(const Tensor& big, const Tensor& small, const char* op) {
  if (big.shape() == small.shape()) return Broadcast::kSame;
  if (small.size() == 1) return Broadcast::kScalar;
  if (big.rank() <= 2 && small.rank() <= 2 && small.rows() == 1 &&
      small.cols() == big.cols()) {
    return Broadcast::kRow;
  }
  throw DimensionError(std::string(op) + ": cannot broadcast " +
                       pair_shapes(big, small));
}

bool is_bigger(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) return a.size() > b.size();
  return a.rank() >= b.rank();
}

std::size_t small_index(Broadcast mode, std::size_t i, std::size_t cols) {
  switch (mode) {
    case Broadcast::kSame:
      return i;
    case Broadcast::kScalar:
      return 0;
    case Broadcast::kRow:
      return i % cols;
  }
  return 0;
}

std::size_t normalize_axis(int axis, std::size_t rank, const char* op) {
  const int r = static_cast<int>(rank);
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for rank " + std::to_string(rank));
  }
  return static_cast<std::size_t>(a);
}

Shape shape2(std::size_t rows, std::size_t cols) { return {rows, cols}; }

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner extents differ for " +
                         pair_shapes(a, b));
  }
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<real> out(m * n);
  std::vector<double> acc(n);
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const real* brow = bv.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) acc[j] += aip * brow[j];
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = static_cast<real>(acc[j]);
  }
  return make_result(
      shape2(m, n), std::move(out), {a, b},
      [m, k, n](std::span<const real> g, AdjointContext& ctx) {
        const auto av = ctx.value(0);
        const auto bv = ctx.value(1);
        if (ctx.needs(0)) {
          auto ga = ctx.grad(0);
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              double s = 0.0;
              for (std::size_t j = 0; j < n; ++j) {
                s += static_cast<double>(g[i * n + j]) * bv[p * n + j];
              }
              ga[i * k + p] += static_cast<real>(s);
            }
          }
        }
        if (ctx.needs(1)) {
          auto gb = ctx.grad(1);
          std::vector<double> acc(n);
          for (std::size_t p = 0; p < k; ++p) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t i = 0; i < m; ++i) {
              const double aip = av[i * k + p];
              if (aip == 0.0) continue;
              for (std::size_t j = 0; j < n; ++j) acc[j] += aip * g[i * n + j];
            }
            for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += static_cast<real>(acc[j]);
          }
        }
      });
}

Tensor transpose(const Tensor& a) {
  require_2d(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  const auto av = a.data();
  std::vector<real> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  return make_result(shape2(n, m), std::move(out), {a},
                     [m, n](std::span<const real> g, AdjointContext& ctx) {
                       auto ga = ctx.grad(0);
                       for (std::size_t i = 0; i < m; ++i)
                         for (std::size_t j = 0; j < n; ++j)
                           ga[i * n + j] += g[j * m + i];
                     });
}

namespace {

// Reduces g (times `weights`, when given) onto the broadcast operand.
void reduce_into(Broadcast mode, std::span<const real> g,
                 std::span<const real> weights, std::size_t cols,
                 std::span<real> dst) {
  auto term = [&](std::size_t i) -> double {
    return weights.empty() ? static_cast<double>(g[i])
                           : static_cast<double>(g[i]) * weights[i];
  };
  switch (mode) {
    case Broadcast::kSame:
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += static_cast<real>(term(i));
      break;
    case Broadcast::kScalar: {
      double s = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) s += term(i);
      dst[0] += static_cast<real>(s);
      break;
    }
    case Broadcast::kRow: {
      std::vector<double> acc(cols, 0.0);
      for (std::size_t i = 0; i < g.size(); ++i) acc[i % cols] += term(i);
      for (std::size_t j = 0; j < cols; ++j) dst[j] += static_cast<real>(acc[j]);
      break;
    }
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  const bool a_big = is_bigger(a, b);
  const Tensor& big = a_big ? a : b;
  const Tensor& small = a_big ? b : a;
  const Broadcast mode = classify(big, small, "add");
  const std::size_t cols = big.rank() <= 2 ? big.cols() : 0;
  const auto bv = big.data();
  const auto sv = small.data();
  std::vector<real> out(bv.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = bv[i] + sv[small_index(mode, i, cols)];
  }
  const std::size_t big_slot = a_big ? 0 : 1;
  return make_result(
      big.shape(), std::move(out), {a, b},
      [mode, cols, big_slot](std::span<const real> g, AdjointContext& ctx) {
        const std::size_t small_slot = 1 - big_slot;
        if (ctx.needs(big_slot)) {
          auto gb = ctx.grad(big_slot);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        }
        if (ctx.needs(small_slot)) {
          reduce_into(mode, g, {}, cols, ctx.grad(small_slot));
        }
      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const bool a_big = is_bigger(a, b);
  const Tensor& big = a_big ? a : b;
  const Tensor& small = a_big ? b : a;
  const Broadcast mode = classify(big, small, "mul");
  const std::size_t cols = big.rank() <= 2 ? big.cols() : 0;
  const auto bv = big.data();
  const auto sv = small.data();
  std::vector<real> out(bv.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = bv[i] * sv[small_index(mode, i, cols)];
  }
  const std::size_t big_slot = a_big ? 0 : 1;
  return make_result(
      big.shape(), std::move(out), {a, b},
      [mode, cols, big_slot](std::span<const real> g, AdjointContext& ctx) {
        const std::size_t small_slot = 1 - big_slot;
        const auto bigv = ctx.value(big_slot);
        const auto smallv = ctx.value(small_slot);
        if (ctx.needs(big_slot)) {
          auto gb = ctx.grad(big_slot);
          for (std::size_t i = 0; i < g.size(); ++i) {
            gb[i] += g[i] * smallv[small_index(mode, i, cols)];
          }
        }
        if (ctx.needs(small_slot)) {
          reduce_into(mode, g, bigv, cols, ctx.grad(small_slot));
        }
      });
}

Tensor softmax(const Tensor& x, int axis) {
  const std::size_t ax = normalize_axis(axis, x.rank(), "softmax");
  const Shape& shape = x.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < ax; ++d) outer *= shape[d];
  for (std::size_t d = ax + 1; d < shape.size(); ++d) inner *= shape[d];
  const std::size_t n = shape[ax];
  const auto xv = x.data();
  for (real v : xv) {
    if (!std::isfinite(v)) throw NumericError("softmax: non-finite input");
  }
  std::vector<real> out(xv.size());
  std::vector<double> e(n);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      auto idx = [&](std::size_t j) { return (o * n + j) * inner + in; };
      double mx = xv[idx(0)];
      for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, static_cast<double>(xv[idx(j)]));
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        e[j] = std::exp(static_cast<double>(xv[idx(j)]) - mx);
        s += e[j];
      }
      for (std::size_t j = 0; j < n; ++j) out[idx(j)] = static_cast<real>(e[j] / s);
    }
  }
  std::vector<real> y = out;
  return make_result(
      shape, std::move(out), {x},
      [y = std::move(y), outer, inner, n](std::span<const real> g,
                                          AdjointContext& ctx) {
        auto gx = ctx.grad(0);
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t in = 0; in < inner; ++in) {
            auto idx = [&](std::size_t j) { return (o * n + j) * inner + in; };
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += static_cast<double>(g[idx(j)]) * y[idx(j)];
            for (std::size_t j = 0; j < n; ++j) {
              gx[idx(j)] += static_cast<real>(y[idx(j)] * (g[idx(j)] - dot));
            }
          }
        }
      });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  real eps) {
  if (!(eps > 0)) throw UsageError("layer_norm: eps must be positive");
  const std::size_t n = x.shape().back();
  if (gain.size() != n || bias.size() != n) {
    throw DimensionError("layer_norm: gain/bias " + pair_shapes(gain, bias) +
                         " do not match trailing extent of " + x.shape_string());
  }
  const std::size_t rows = x.size() / n;
  const auto xv = x.data();
  const auto gv = gain.data();
  const auto bv = bias.data();
  std::vector<real> out(xv.size());
  std::vector<double> xhat(xv.size());
  std::vector<double> rstd(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const real* row = xv.data() + r * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = row[j] - mu;
      var += d * d;
    }
    var /= static_cast<double>(n);
    rstd[r] = 1.0 / std::sqrt(var + static_cast<double>(eps));
    for (std::size_t j = 0; j < n; ++j) {
      const double xh = (row[j] - mu) * rstd[r];
      xhat[r * n + j] = xh;
      out[r * n + j] = static_cast<real>(xh * gv[j] + bv[j]);
    }
  }
  return make_result(
      x.shape(), std::move(out), {x, gain, bias},
      [xhat = std::move(xhat), rstd = std::move(rstd), rows, n](
          std::span<const real> g, AdjointContext& ctx) {
        const auto gv = ctx.value(1);
        if (ctx.needs(0)) {
          auto gx = ctx.grad(0);
          std::vector<double> dxh(n);
          for (std::size_t r = 0; r < rows; ++r) {
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              dxh[j] = static_cast<double>(g[r * n + j]) * gv[j];
              m1 += dxh[j];
              m2 += dxh[j] * xhat[r * n + j];
            }
            m1 /= static_cast<double>(n);
            m2 /= static_cast<double>(n);
            for (std::size_t j = 0; j < n; ++j) {
              gx[r * n + j] += static_cast<real>(
                  rstd[r] * (dxh[j] - m1 - xhat[r * n + j] * m2));
            }
          }
        }
        if (ctx.needs(1) || ctx.needs(2)) {
          std::vector<double> dg(n, 0.0), db(n, 0.0);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < n; ++j) {
              dg[j] += static_cast<double>(g[r * n + j]) * xhat[r * n + j];
              db[j] += g[r * n + j];
            }
          }
          if (ctx.needs(1)) {
            auto gg = ctx.grad(1);
            for (std::size_t j = 0; j < n; ++j) gg[j] += static_cast<real>(dg[j]);
          }
          if (ctx.needs(2)) {
            auto gb = ctx.grad(2);
            for (std::size_t j = 0; j < n; ++j) gb[j] += static_cast<real>(db[j]);
          }
        }
      });
}

Tensor gelu(const Tensor& x, bool tanh_approximation) {
  const auto xv = x.data();
  std::vector<real> out(xv.size());
  std::vector<real> dydx(xv.size());
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  constexpr double kSqrt2OverPi = 0.79788456080286535588;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double v = xv[i];
    if (tanh_approximation) {
      const double u = kSqrt2OverPi * (v + 0.044715 * v * v * v);
      const double t = std::tanh(u);
      out[i] = static_cast<real>(0.5 * v * (1.0 + t));
      dydx[i] = static_cast<real>(
          0.5 * (1.0 + t) +
          0.5 * v * (1.0 - t * t) * kSqrt2OverPi * (1.0 + 3.0 * 0.044715 * v * v));
    } else {
      const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      out[i] = static_cast<real>(v * cdf);
      dydx[i] = static_cast<real>(cdf + v * pdf);
    }
  }
  return make_result(x.shape(), std::move(out), {x},
                     [dydx = std::move(dydx)](std::span<const real> g,
                                              AdjointContext& ctx) {
                       auto gx = ctx.grad(0);
                       for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * dydx[i];
                     });
}

Tensor gather_rows(const Tensor& table, std::span<const int> ids) {
  require_2d(table, "gather_rows");
  if (ids.empty()) throw DimensionError("gather_rows: empty index list");
  const std::size_t v = table.rows(), d = table.cols();
  const auto tv = table.data();
  std::vector<real> out(ids.size() * d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= v) {
      throw IndexError("gather_rows: id " + std::to_string(ids[i]) +
                       " out of range for table " + table.shape_string());
    }
    std::copy_n(tv.data() + static_cast<std::size_t>(ids[i]) * d, d,
                out.data() + i * d);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return make_result(shape2(ids.size(), d), std::move(out), {table},
                     [idx = std::move(idx), d](std::span<const real> g,
                                               AdjointContext& ctx) {
                       auto gt = ctx.grad(0);
                       for (std::size_t i = 0; i < idx.size(); ++i) {
                         real* dst = gt.data() + static_cast<std::size_t>(idx[i]) * d;
                         for (std::size_t j = 0; j < d; ++j) dst[j] += g[i * d + j];
                       }
                     });
}

Tensor concat(std::span<const Tensor> parts, int axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  if (axis != 0 && axis != 1) throw DimensionError("concat: axis must be 0 or 1");
  for (const auto& p : parts) require_2d(p, "concat");
  std::vector<std::size_t> extents;
  std::size_t rows = 0, cols = 0;
  if (axis == 0) {
    cols = parts[0].cols();
    for (const auto& p : parts) {
      if (p.cols() != cols) {
        throw DimensionError("concat(axis 0): column mismatch " +
                             pair_shapes(parts[0], p));
      }
      extents.push_back(p.rows());
      rows += p.rows();
    }
  } else {
    rows = parts[0].rows();
    for (const auto& p : parts) {
      if (p.rows() != rows) {
        throw DimensionError("concat(axis 1): row mismatch " +
                             pair_shapes(parts[0], p));
      }
      extents.push_back(p.cols());
      cols += p.cols();
    }
  }
  std::vector<real> out(rows * cols);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto pv = parts[k].data();
    if (axis == 0) {
      std::copy(pv.begin(), pv.end(), out.begin() + static_cast<std::ptrdiff_t>(offset * cols));
    } else {
      const std::size_t pc = extents[k];
      for (std::size_t r = 0; r < rows; ++r)
        std::copy_n(pv.data() + r * pc, pc, out.data() + r * cols + offset);
    }
    offset += extents[k];
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return make_result(
      shape2(rows, cols), std::move(out), std::move(inputs),
      [extents, rows, cols, axis](std::span<const real> g, AdjointContext& ctx) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < extents.size(); ++k) {
          if (ctx.needs(k)) {
            auto gp = ctx.grad(k);
            if (axis == 0) {
              for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offset * cols + i];
            } else {
              const std::size_t pc = extents[k];
              for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t j = 0; j < pc; ++j)
                  gp[r * pc + j] += g[r * cols + offset + j];
            }
          }
          offset += extents[k];
        }
      });
}

Tensor slice(const Tensor& x, int axis, std::size_t begin, std::size_t end) {
  require_2d(x, "slice");
  if (axis != 0 && axis != 1) throw DimensionError("slice: axis must be 0 or 1");
  const std::size_t rows = x.rows(), cols = x.cols();
  const std::size_t extent = axis == 0 ? rows : cols;
  if (begin >= end || end > extent) {
    throw IndexError("slice: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") invalid for " + x.shape_string());
  }
  const auto xv = x.data();
  const std::size_t out_rows = axis == 0 ? end - begin : rows;
  const std::size_t out_cols = axis == 0 ? cols : end - begin;
  std::vector<real> out(out_rows * out_cols);
  for (std::size_t r = 0; r < out_rows; ++r) {
    const std::size_t src_r = axis == 0 ? r + begin : r;
    const std::size_t src_c = axis == 0 ? 0 : begin;
    std::copy_n(xv.data() + src_r * cols + src_c, out_cols, out.data() + r * out_cols);
  }
  return make_result(
      shape2(out_rows, out_cols), std::move(out), {x},
      [axis, begin, cols, out_rows, out_cols](std::span<const real> g,
                                              AdjointContext& ctx) {
        auto gx = ctx.grad(0);
        for (std::size_t r = 0; r < out_rows; ++r) {
          const std::size_t dst_r = axis == 0 ? r + begin : r;
          const std::size_t dst_c = axis == 0 ? 0 : begin;
          for (std::size_t j = 0; j < out_cols; ++j)
            gx[dst_r * cols + dst_c + j] += g[r * out_cols + j];
        }
      });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (real v : x.data()) s += v;
  return make_result({1}, {static_cast<real>(s)}, {x},
                     [](std::span<const real> g, AdjointContext& ctx) {
                       auto gx = ctx.grad(0);
                       for (real& v : gx) v += g[0];
                     });
}

Tensor mean(const Tensor& x) {
  double s = 0.0;
  for (real v : x.data()) s += v;
  const double n = static_cast<double>(x.size());
  return make_result({1}, {static_cast<real>(s / n)}, {x},
                     [n](std::span<const real> g, AdjointContext& ctx) {
                       auto gx = ctx.grad(0);
                       const real share = static_cast<real>(g[0] / n);
                       for (real& v : gx) v += share;
                     });
}

Tensor cross_entropy_logits(const Tensor& logits, std::span<const int> targets,
                            int ignore_index) {
  require_2d(logits, "cross_entropy_logits");
  const std::size_t n = logits.rows(), c = logits.cols();
  if (targets.size() != n) {
    throw DimensionError("cross_entropy_logits: " + std::to_string(targets.size()) +
                         " targets for logits " + logits.shape_string());
  }
  const auto lv = logits.data();
  std::vector<double> probs(n * c, 0.0);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int t = targets[i];
    if (t == ignore_index) continue;
    if (t < 0 || static_cast<std::size_t>(t) >= c) {
      throw IndexError("cross_entropy_logits: target " + std::to_string(t) +
                       " outside [0, " + std::to_string(c) + ")");
    }
    const real* row = lv.data() + i * c;
    double mx = row[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, static_cast<double>(row[j]));
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      probs[i * c + j] = std::exp(static_cast<double>(row[j]) - mx);
      s += probs[i * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] /= s;
    total += (mx + std::log(s)) - row[t];
    ++count;
  }
  const double value = count ? total / static_cast<double>(count) : 0.0;
  std::vector<int> tg(targets.begin(), targets.end());
  return make_result(
      {1}, {static_cast<real>(value)}, {logits},
      [probs = std::move(probs), tg = std::move(tg), n, c, count, ignore_index](
          std::span<const real> g, AdjointContext& ctx) {
        auto gl = ctx.grad(0);
        if (count == 0) return;
        const double share = g[0] / static_cast<double>(count);
        for (std::size_t i = 0; i < n; ++i) {
          if (tg[i] == ignore_index) continue;
          for (std::size_t j = 0; j < c; ++j) {
            const double onehot = static_cast<int>(j) == tg[i] ? 1.0 : 0.0;
            gl[i * c + j] += static_cast<real>(share * (probs[i * c + j] - onehot));
          }
        }
      });
}

}  // namespace kebio::inline KEBIO_PRECISION_NS::nd
