// src/ops.cpp
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "aac/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace aac::ops {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

template <typename T>
bool should_record(std::initializer_list<const Tensor<T>*> inputs) {
  if (active_tape<T>() == nullptr) return false;
  for (const Tensor<T>* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

template <typename T>
void record(const Tensor<T>& out, std::function<void()> fn) {
  active_tape<T>()->record(out, std::move(fn));
}

template <typename T>
void check_finite(const Tensor<T>& t, const char* op) {
  for (T v : t.data())
    if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite value in output");
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

// Splits a shape around `axis` into (outer, axis extent, inner) strides.
struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  require(axis < shape.size(), "axis " + std::to_string(axis) + " out of range for " +
                                   shape_str(shape));
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

template <typename T, typename F, typename DF>
Tensor<T> unary(const Tensor<T>& x, const char* name, F f, DF df_from_y_x) {
  std::vector<T> y(x.size());
  auto xd = x.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(xd[i]);
  auto out = Tensor<T>::from(x.shape(), std::move(y));
  check_finite(out, name);
  if (should_record<T>({&x})) {
    record(out, [x, out, df_from_y_x]() mutable {
      auto g = out.grad();
      auto yd = out.data();
      auto xv = x.data();
      auto gx = x.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * df_from_y_x(yd[i], xv[i]);
    });
  }
  return out;
}

struct ConvGeom {
  std::size_t n, c, h, w, o, kh, kw, stride, pad, oh, ow;
};

template <typename T>
void im2col(const T* x, const ConvGeom& g, T* cols) {
  const std::size_t plane = g.oh * g.ow;
  for (std::size_t c = 0; c < g.c; ++c)
    for (std::size_t ki = 0; ki < g.kh; ++ki)
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        T* row = cols + ((c * g.kh + ki) * g.kw + kj) * plane;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ki) - static_cast<long>(g.pad);
          T* dst = row + oy * g.ow;
          if (iy < 0 || iy >= static_cast<long>(g.h)) {
            std::fill(dst, dst + g.ow, T(0));
            continue;
          }
          const T* src = x + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kj) - static_cast<long>(g.pad);
            dst[ox] = (ix < 0 || ix >= static_cast<long>(g.w)) ? T(0) : src[ix];
          }
        }
      }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeom& g, T* dx) {
  const std::size_t plane = g.oh * g.ow;
  for (std::size_t c = 0; c < g.c; ++c)
    for (std::size_t ki = 0; ki < g.kh; ++ki)
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const T* row = cols + ((c * g.kh + ki) * g.kw + kj) * plane;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ki) - static_cast<long>(g.pad);
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          T* dst = dx + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          const T* src = row + oy * g.ow;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kj) - static_cast<long>(g.pad);
            if (ix >= 0 && ix < static_cast<long>(g.w)) dst[ix] += src[ox];
          }
        }
      }
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.rank() == 2 && b.rank() == 2,
          "matmul needs 2-D operands, got " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  require(b.dim(0) == k, "matmul inner dimensions differ: " + shape_str(a.shape()) + " x " +
                             shape_str(b.shape()));
  auto out = Tensor<T>::zeros({m, n});
  MapMat<T>(out.data().data(), m, n).noalias() =
      ConstMapMat<T>(a.data().data(), m, k) * ConstMapMat<T>(b.data().data(), k, n);
  check_finite(out, "matmul");
  if (should_record<T>({&a, &b})) {
    record(out, [a, b, out, m, k, n]() mutable {
      ConstMapMat<T> g(out.grad().data(), m, n);
      if (a.requires_grad())
        MapMat<T>(a.grad().data(), m, k).noalias() +=
            g * ConstMapMat<T>(b.data().data(), k, n).transpose();
      if (b.requires_grad())
        MapMat<T>(b.grad().data(), k, n).noalias() +=
            ConstMapMat<T>(a.data().data(), m, k).transpose() * g;
    });
  }
  return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(),
          "add shape mismatch: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<T> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] + b.data()[i];
  auto out = Tensor<T>::from(a.shape(), std::move(y));
  check_finite(out, "add");
  if (should_record<T>({&a, &b})) {
    record(out, [a, b, out]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(),
          "sub shape mismatch: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<T> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] - b.data()[i];
  auto out = Tensor<T>::from(a.shape(), std::move(y));
  check_finite(out, "sub");
  if (should_record<T>({&a, &b})) {
    record(out, [a, b, out]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(),
          "mul shape mismatch: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<T> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] * b.data()[i];
  auto out = Tensor<T>::from(a.shape(), std::move(y));
  check_finite(out, "mul");
  if (should_record<T>({&a, &b})) {
    record(out, [a, b, out]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad();
        auto bd = b.data();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bd[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        auto ad = a.data();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * ad[i];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> y(a.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] * factor;
  auto out = Tensor<T>::from(a.shape(), std::move(y));
  check_finite(out, "scale");
  if (should_record<T>({&a})) {
    record(out, [a, out, factor]() mutable {
      auto g = out.grad();
      auto ga = a.grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
    });
  }
  return out;
}

template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias) {
  require(bias.rank() == 1 && x.rank() >= 1 && x.shape().back() == bias.dim(0),
          "add_bias: bias " + shape_str(bias.shape()) + " does not match last axis of " +
              shape_str(x.shape()));
  const std::size_t n = bias.size(), rows = x.size() / n;
  std::vector<T> y(x.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < n; ++j) y[r * n + j] = x.data()[r * n + j] + bias.data()[j];
  auto out = Tensor<T>::from(x.shape(), std::move(y));
  check_finite(out, "add_bias");
  if (should_record<T>({&x, &bias})) {
    record(out, [x, bias, out, rows, n]() mutable {
      auto g = out.grad();
      if (x.requires_grad()) {
        auto gx = x.grad();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
      if (bias.requires_grad()) {
        auto gb = bias.grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < n; ++j) gb[j] += g[r * n + j];
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return unary(
      x, "relu", [](T v) { return v > T(0) ? v : T(0); },
      [](T, T xv) { return xv > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary(
      x, "sigmoid",
      [](T v) {
        if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](T y, T) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  return unary(
      x, "tanh", [](T v) { return std::tanh(v); }, [](T y, T) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  const AxisSplit s = split_axis(x.shape(), axis);
  std::vector<T> y(x.size());
  auto xd = x.data();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.extent * s.inner + in;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t k = 0; k < s.extent; ++k) mx = std::max(mx, xd[base + k * s.inner]);
      double total = 0.0;
      for (std::size_t k = 0; k < s.extent; ++k) {
        const T e = std::exp(xd[base + k * s.inner] - mx);
        y[base + k * s.inner] = e;
        total += e;
      }
      for (std::size_t k = 0; k < s.extent; ++k)
        y[base + k * s.inner] = static_cast<T>(y[base + k * s.inner] / total);
    }
  auto out = Tensor<T>::from(x.shape(), std::move(y));
  check_finite(out, "softmax");
  if (should_record<T>({&x})) {
    record(out, [x, out, s]() mutable {
      auto g = out.grad();
      auto yd = out.data();
      auto gx = x.grad();
      for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t in = 0; in < s.inner; ++in) {
          const std::size_t base = o * s.extent * s.inner + in;
          double dot = 0.0;
          for (std::size_t k = 0; k < s.extent; ++k)
            dot += g[base + k * s.inner] * yd[base + k * s.inner];
          for (std::size_t k = 0; k < s.extent; ++k) {
            const std::size_t i = base + k * s.inner;
            gx[i] += static_cast<T>(yd[i] * (g[i] - dot));
          }
        }
    });
  }
  return out;
}

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& x, std::size_t axis) {
  const AxisSplit s = split_axis(x.shape(), axis);
  std::vector<T> y(x.size());
  auto xd = x.data();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.extent * s.inner + in;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t k = 0; k < s.extent; ++k) mx = std::max(mx, xd[base + k * s.inner]);
      double total = 0.0;
      for (std::size_t k = 0; k < s.extent; ++k) total += std::exp(double(xd[base + k * s.inner] - mx));
      const T lse = mx + static_cast<T>(std::log(total));
      for (std::size_t k = 0; k < s.extent; ++k)
        y[base + k * s.inner] = xd[base + k * s.inner] - lse;
    }
  auto out = Tensor<T>::from(x.shape(), std::move(y));
  check_finite(out, "log_softmax");
  if (should_record<T>({&x})) {
    record(out, [x, out, s]() mutable {
      auto g = out.grad();
      auto yd = out.data();
      auto gx = x.grad();
      for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t in = 0; in < s.inner; ++in) {
          const std::size_t base = o * s.extent * s.inner + in;
          double gsum = 0.0;
          for (std::size_t k = 0; k < s.extent; ++k) gsum += g[base + k * s.inner];
          for (std::size_t k = 0; k < s.extent; ++k) {
            const std::size_t i = base + k * s.inner;
            gx[i] += static_cast<T>(g[i] - std::exp(double(yd[i])) * gsum);
          }
        }
    });
  }
  return out;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  double total = 0.0;
  for (T v : x.data()) total += v;
  auto out = Tensor<T>::scalar(static_cast<T>(total));
  check_finite(out, "sum");
  if (should_record<T>({&x})) {
    record(out, [x, out]() mutable {
      const T g = out.grad()[0];
      for (T& v : x.grad()) v += g;
    });
  }
  return out;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  double total = 0.0;
  for (T v : x.data()) total += v;
  const std::size_t n = x.size();
  auto out = Tensor<T>::scalar(static_cast<T>(total / static_cast<double>(n)));
  check_finite(out, "mean");
  if (should_record<T>({&x})) {
    record(out, [x, out, n]() mutable {
      const T g = out.grad()[0] / static_cast<T>(n);
      for (T& v : x.grad()) v += g;
    });
  }
  return out;
}

template <typename T>
Tensor<T> mean_axis(const Tensor<T>& x, std::size_t axis) {
  const AxisSplit s = split_axis(x.shape(), axis);
  Shape shape = x.shape();
  shape.erase(shape.begin() + static_cast<long>(axis));
  if (shape.empty()) shape = {1};
  std::vector<T> y(s.outer * s.inner);
  auto xd = x.data();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t in = 0; in < s.inner; ++in) {
      double total = 0.0;
      for (std::size_t k = 0; k < s.extent; ++k) total += xd[(o * s.extent + k) * s.inner + in];
      y[o * s.inner + in] = static_cast<T>(total / static_cast<double>(s.extent));
    }
  auto out = Tensor<T>::from(std::move(shape), std::move(y));
  check_finite(out, "mean_axis");
  if (should_record<T>({&x})) {
    record(out, [x, out, s]() mutable {
      auto g = out.grad();
      auto gx = x.grad();
      const T inv = T(1) / static_cast<T>(s.extent);
      for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t k = 0; k < s.extent; ++k)
          for (std::size_t in = 0; in < s.inner; ++in)
            gx[(o * s.extent + k) * s.inner + in] += g[o * s.inner + in] * inv;
    });
  }
  return out;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernels, std::size_t stride,
                 std::size_t padding) {
  require(input.rank() == 3 || input.rank() == 4,
          "conv2d input must be [C,H,W] or [N,C,H,W], got " + shape_str(input.shape()));
  require(kernels.rank() == 4, "conv2d kernels must be [Cout,Cin,kh,kw]");
  require(stride >= 1, "conv2d stride must be >= 1");
  const bool batched = input.rank() == 4;
  ConvGeom g{};
  g.n = batched ? input.dim(0) : 1;
  g.c = input.dim(batched ? 1 : 0);
  g.h = input.dim(batched ? 2 : 1);
  g.w = input.dim(batched ? 3 : 2);
  g.o = kernels.dim(0);
  g.kh = kernels.dim(2);
  g.kw = kernels.dim(3);
  g.stride = stride;
  g.pad = padding;
  require(kernels.dim(1) == g.c, "conv2d channel mismatch: input " + shape_str(input.shape()) +
                                     ", kernels " + shape_str(kernels.shape()));
  require(g.kh <= g.h + 2 * padding && g.kw <= g.w + 2 * padding,
          "conv2d kernel larger than padded input");
  g.oh = (g.h + 2 * padding - g.kh) / stride + 1;
  g.ow = (g.w + 2 * padding - g.kw) / stride + 1;

  const std::size_t ckk = g.c * g.kh * g.kw, plane = g.oh * g.ow;
  const bool direct = g.kh == 1 && g.kw == 1 && stride == 1 && padding == 0;
  Shape oshape = batched ? Shape{g.n, g.o, g.oh, g.ow} : Shape{g.o, g.oh, g.ow};
  auto out = Tensor<T>::zeros(oshape);
  std::vector<T> cols(direct ? 0 : ckk * plane);
  ConstMapMat<T> kmat(kernels.data().data(), g.o, ckk);
  for (std::size_t n = 0; n < g.n; ++n) {
    const T* xn = input.data().data() + n * g.c * g.h * g.w;
    if (!direct) im2col(xn, g, cols.data());
    const T* cp = direct ? xn : cols.data();
    MapMat<T>(out.data().data() + n * g.o * plane, g.o, plane).noalias() =
        kmat * ConstMapMat<T>(cp, ckk, plane);
  }
  check_finite(out, "conv2d");
  if (should_record<T>({&input, &kernels})) {
    record(out, [input, kernels, out, g, ckk, plane, direct]() mutable {
      std::vector<T> cols(direct ? 0 : ckk * plane);
      std::vector<T> dcols(ckk * plane);
      ConstMapMat<T> kmat(kernels.data().data(), g.o, ckk);
      for (std::size_t n = 0; n < g.n; ++n) {
        ConstMapMat<T> gout(out.grad().data() + n * g.o * plane, g.o, plane);
        const T* xn = input.data().data() + n * g.c * g.h * g.w;
        if (kernels.requires_grad()) {
          if (!direct) im2col(xn, g, cols.data());
          const T* cp = direct ? xn : cols.data();
          MapMat<T>(kernels.grad().data(), g.o, ckk).noalias() +=
              gout * ConstMapMat<T>(cp, ckk, plane).transpose();
        }
        if (input.requires_grad()) {
          T* gx = input.grad().data() + n * g.c * g.h * g.w;
          if (direct) {
            MapMat<T>(gx, ckk, plane).noalias() += kmat.transpose() * gout;
          } else {
            MapMat<T>(dcols.data(), ckk, plane).noalias() = kmat.transpose() * gout;
            col2im_add(dcols.data(), g, gx);
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& input, std::size_t kernel, std::size_t stride) {
  require(input.rank() == 3 || input.rank() == 4, "max_pool2d input must be [C,H,W] or [N,C,H,W]");
  require(kernel >= 1 && stride >= 1, "max_pool2d kernel and stride must be >= 1");
  const bool batched = input.rank() == 4;
  const std::size_t n = batched ? input.dim(0) : 1, c = input.dim(batched ? 1 : 0);
  const std::size_t h = input.dim(batched ? 2 : 1), w = input.dim(batched ? 3 : 2);
  require(kernel <= h && kernel <= w, "max_pool2d kernel larger than input");
  const std::size_t oh = (h - kernel) / stride + 1, ow = (w - kernel) / stride + 1;
  Shape oshape = batched ? Shape{n, c, oh, ow} : Shape{c, oh, ow};
  std::vector<T> y(n * c * oh * ow);
  std::vector<std::size_t> argmax(y.size());
  auto xd = input.data();
  for (std::size_t p = 0; p < n * c; ++p)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = p * h * w + oy * stride * w + ox * stride;
        for (std::size_t ky = 0; ky < kernel; ++ky)
          for (std::size_t kx = 0; kx < kernel; ++kx) {
            const std::size_t idx = p * h * w + (oy * stride + ky) * w + ox * stride + kx;
            if (xd[idx] > xd[best]) best = idx;
          }
        const std::size_t o = (p * oh + oy) * ow + ox;
        y[o] = xd[best];
        argmax[o] = best;
      }
  auto out = Tensor<T>::from(std::move(oshape), std::move(y));
  check_finite(out, "max_pool2d");
  if (should_record<T>({&input})) {
    record(out, [input, out, argmax = std::move(argmax)]() mutable {
      auto g = out.grad();
      auto gx = input.grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[argmax[i]] += g[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input) {
  require(input.rank() == 3 || input.rank() == 4,
          "global_avg_pool input must be [C,H,W] or [N,C,H,W]");
  const std::size_t r = input.rank();
  const std::size_t hw = input.dim(r - 1) * input.dim(r - 2);
  Shape shape(input.shape().begin(), input.shape().end() - 2);
  auto flat = reshape(input, Shape{shape_numel(shape), hw});
  auto pooled = mean_axis(flat, 1);
  return reshape(pooled, shape);
}

template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                      Tensor<T>& running_mean, Tensor<T>& running_var, bool training, T momentum,
                      T eps) {
  require(input.rank() == 3 || input.rank() == 4, "batchnorm2d input must be [C,H,W] or [N,C,H,W]");
  const bool batched = input.rank() == 4;
  const std::size_t n = batched ? input.dim(0) : 1, c = input.dim(batched ? 1 : 0);
  const std::size_t hw = input.dim(input.rank() - 1) * input.dim(input.rank() - 2);
  require(gamma.size() == c && beta.size() == c && running_mean.size() == c &&
              running_var.size() == c,
          "batchnorm2d parameter size does not match channel count " + std::to_string(c));
  const std::size_t m = n * hw;
  auto xd = input.data();
  std::vector<T> mu(c), invstd(c);
  if (training) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      double s = 0.0;
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t i = 0; i < hw; ++i) s += xd[(b * c + ch) * hw + i];
      const double mean = s / static_cast<double>(m);
      double ss = 0.0;
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t i = 0; i < hw; ++i) {
          const double d = xd[(b * c + ch) * hw + i] - mean;
          ss += d * d;
        }
      const double var = ss / static_cast<double>(m);
      mu[ch] = static_cast<T>(mean);
      invstd[ch] = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
      const double unbiased = m > 1 ? ss / static_cast<double>(m - 1) : var;
      auto rm = running_mean.data();
      auto rv = running_var.data();
      rm[ch] = static_cast<T>((1.0 - momentum) * rm[ch] + momentum * mean);
      rv[ch] = static_cast<T>((1.0 - momentum) * rv[ch] + momentum * unbiased);
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      mu[ch] = running_mean.data()[ch];
      invstd[ch] = static_cast<T>(1.0 / std::sqrt(double(running_var.data()[ch]) + double(eps)));
    }
  }
  std::vector<T> xhat(input.size()), y(input.size());
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < hw; ++i) {
        const std::size_t k = (b * c + ch) * hw + i;
        xhat[k] = (xd[k] - mu[ch]) * invstd[ch];
        y[k] = gamma.data()[ch] * xhat[k] + beta.data()[ch];
      }
  auto out = Tensor<T>::from(input.shape(), std::move(y));
  check_finite(out, "batchnorm2d");
  if (should_record<T>({&input, &gamma, &beta})) {
    record(out, [input, gamma, beta, out, xhat = std::move(xhat), invstd = std::move(invstd),
                 n, c, hw, m, training]() mutable {
      auto g = out.grad();
      std::vector<double> sum_dy(c, 0.0), sum_dy_xhat(c, 0.0);
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
          for (std::size_t i = 0; i < hw; ++i) {
            const std::size_t k = (b * c + ch) * hw + i;
            sum_dy[ch] += g[k];
            sum_dy_xhat[ch] += g[k] * xhat[k];
          }
      if (gamma.requires_grad()) {
        auto gg = gamma.grad();
        for (std::size_t ch = 0; ch < c; ++ch) gg[ch] += static_cast<T>(sum_dy_xhat[ch]);
      }
      if (beta.requires_grad()) {
        auto gb = beta.grad();
        for (std::size_t ch = 0; ch < c; ++ch) gb[ch] += static_cast<T>(sum_dy[ch]);
      }
      if (input.requires_grad()) {
        auto gx = input.grad();
        const double inv_m = 1.0 / static_cast<double>(m);
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t ch = 0; ch < c; ++ch) {
            const double gm = gamma.data()[ch] * double(invstd[ch]);
            for (std::size_t i = 0; i < hw; ++i) {
              const std::size_t k = (b * c + ch) * hw + i;
              if (training) {
                gx[k] += static_cast<T>(gm * (g[k] - inv_m * sum_dy[ch] -
                                              xhat[k] * inv_m * sum_dy_xhat[ch]));
              } else {
                gx[k] += static_cast<T>(gm * g[k]);
              }
            }
          }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  require(!parts.empty(), "concat of zero tensors");
  const Shape& first = parts.front().shape();
  require(axis < first.size(), "concat axis out of range");
  Shape shape = first;
  shape[axis] = 0;
  for (const auto& p : parts) {
    require(p.rank() == first.size(), "concat rank mismatch");
    for (std::size_t d = 0; d < first.size(); ++d)
      if (d != axis) require(p.dim(d) == first[d], "concat shape mismatch off the concat axis");
    shape[axis] += p.dim(axis);
  }
  const AxisSplit s = split_axis(shape, axis);
  std::vector<T> y(shape_numel(shape));
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t ext = p.dim(axis);
    for (std::size_t o = 0; o < s.outer; ++o)
      std::copy_n(p.data().data() + o * ext * s.inner, ext * s.inner,
                  y.data() + (o * s.extent + offset) * s.inner);
    offset += ext;
  }
  auto out = Tensor<T>::from(std::move(shape), std::move(y));
  bool any = false;
  for (const auto& p : parts) any = any || should_record<T>({&p});
  if (any) {
    record(out, [parts, out, s]() mutable {
      auto g = out.grad();
      std::size_t offset = 0;
      for (auto& p : parts) {
        const std::size_t ext = p.size() / (s.outer * s.inner);
        if (p.requires_grad()) {
          auto gp = p.grad();
          for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t i = 0; i < ext * s.inner; ++i)
              gp[o * ext * s.inner + i] += g[(o * s.extent + offset) * s.inner + i];
        }
        offset += ext;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  require(shape_numel(shape) == x.size(),
          "reshape " + shape_str(x.shape()) + " -> " + shape_str(shape) + " changes size");
  auto out = Tensor<T>::from(std::move(shape), x.values());
  if (should_record<T>({&x})) {
    record(out, [x, out]() mutable {
      auto g = out.grad();
      auto gx = x.grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  require(x.rank() == 2, "transpose needs a 2-D tensor, got " + shape_str(x.shape()));
  const std::size_t r = x.dim(0), c = x.dim(1);
  auto out = Tensor<T>::zeros({c, r});
  MapMat<T>(out.data().data(), c, r) = ConstMapMat<T>(x.data().data(), r, c).transpose();
  if (should_record<T>({&x})) {
    record(out, [x, out, r, c]() mutable {
      MapMat<T>(x.grad().data(), r, c) += ConstMapMat<T>(out.grad().data(), c, r).transpose();
    });
  }
  return out;
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t begin, std::size_t end) {
  const AxisSplit s = split_axis(x.shape(), axis);
  require(begin < end && end <= s.extent,
          "slice [" + std::to_string(begin) + "," + std::to_string(end) + ") out of range for " +
              shape_str(x.shape()));
  Shape shape = x.shape();
  shape[axis] = end - begin;
  const std::size_t ext = end - begin;
  std::vector<T> y(s.outer * ext * s.inner);
  for (std::size_t o = 0; o < s.outer; ++o)
    std::copy_n(x.data().data() + (o * s.extent + begin) * s.inner, ext * s.inner,
                y.data() + o * ext * s.inner);
  auto out = Tensor<T>::from(std::move(shape), std::move(y));
  if (should_record<T>({&x})) {
    record(out, [x, out, s, begin, ext]() mutable {
      auto g = out.grad();
      auto gx = x.grad();
      for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t i = 0; i < ext * s.inner; ++i)
          gx[(o * s.extent + begin) * s.inner + i] += g[o * ext * s.inner + i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, std::span<const std::int32_t> indices) {
  require(table.rank() == 2, "embedding table must be 2-D");
  require(!indices.empty(), "embedding_lookup with no indices");
  const std::size_t vocab = table.dim(0), e = table.dim(1);
  std::vector<std::int32_t> idx(indices.begin(), indices.end());
  std::vector<T> y(idx.size() * e);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= vocab)
      throw InputError("embedding index " + std::to_string(idx[i]) + " out of range [0," +
                       std::to_string(vocab) + ")");
    std::copy_n(table.data().data() + static_cast<std::size_t>(idx[i]) * e, e, y.data() + i * e);
  }
  auto out = Tensor<T>::from({idx.size(), e}, std::move(y));
  if (should_record<T>({&table})) {
    record(out, [table, out, idx = std::move(idx), e]() mutable {
      auto g = out.grad();
      auto gt = table.grad();
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < e; ++j)
          gt[static_cast<std::size_t>(idx[i]) * e + j] += g[i * e + j];
    });
  }
  return out;
}

template <typename T>
Tensor<T> gather(const Tensor<T>& x, std::span<const std::size_t> flat_indices) {
  require(!flat_indices.empty(), "gather with no indices");
  std::vector<std::size_t> idx(flat_indices.begin(), flat_indices.end());
  std::vector<T> y(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    require(idx[i] < x.size(), "gather index out of range");
    y[i] = x.data()[idx[i]];
  }
  auto out = Tensor<T>::from({idx.size()}, std::move(y));
  if (should_record<T>({&x})) {
    record(out, [x, out, idx = std::move(idx)]() mutable {
      auto g = out.grad();
      auto gx = x.grad();
      for (std::size_t i = 0; i < idx.size(); ++i) gx[idx[i]] += g[i];
    });
  }
  return out;
}

#define AAC_INSTANTIATE_OPS(T)                                                                 \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                               \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> scale(const Tensor<T>&, T);                                               \
  template Tensor<T> add_bias(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> relu(const Tensor<T>&);                                                   \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                \
  template Tensor<T> tanh(const Tensor<T>&);                                                   \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                                   \
  template Tensor<T> log_softmax(const Tensor<T>&, std::size_t);                               \
  template Tensor<T> sum(const Tensor<T>&);                                                    \
  template Tensor<T> mean(const Tensor<T>&);                                                   \
  template Tensor<T> mean_axis(const Tensor<T>&, std::size_t);                                 \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, std::size_t, std::size_t);     \
  template Tensor<T> max_pool2d(const Tensor<T>&, std::size_t, std::size_t);                   \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                                        \
  template Tensor<T> batchnorm2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,         \
                                 Tensor<T>&, Tensor<T>&, bool, T, T);                          \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, std::size_t);                       \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                         \
  template Tensor<T> transpose(const Tensor<T>&);                                              \
  template Tensor<T> slice(const Tensor<T>&, std::size_t, std::size_t, std::size_t);           \
  template Tensor<T> embedding_lookup(const Tensor<T>&, std::span<const std::int32_t>);        \
  template Tensor<T> gather(const Tensor<T>&, std::span<const std::size_t>);

AAC_INSTANTIATE_OPS(float)
AAC_INSTANTIATE_OPS(double)

#undef AAC_INSTANTIATE_OPS

}  // namespace aac::ops
