// Copyright 2026 The ggpseg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "numerics/gemm.hpp"

namespace ggpseg::ops {
namespace {

template <typename Real>
void require_rank(const Var<Real>& x, std::size_t rank, const char* op) {
  if (x.value().rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " +
                         std::to_string(rank) + ", got shape " +
                         to_string(x.shape()));
  }
}

template <typename Real>
void require_same_shape(const Var<Real>& a, const Var<Real>& b,
                        const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

template <typename Real>
void accumulate(Node<Real>& input, const Real* g) {
  if (!input.requires_grad) return;
  Real* dst = input.grad_buffer().data();
  const std::size_t n = input.value.size();
  for (std::size_t i = 0; i < n; ++i) dst[i] += g[i];
}

struct ConvGeometry {
  std::size_t c_in, h, w, c_out, kh, kw, stride, padding, oh, ow;
  std::size_t patch() const { return c_in * kh * kw; }
  std::size_t pixels() const { return oh * ow; }
  bool pointwise() const {
    return kh == 1 && kw == 1 && stride == 1 && padding == 0;
  }
};

template <typename Real>
void im2col(const ConvGeometry& g, const Real* x, Real* cols) {
  for (std::size_t c = 0; c < g.c_in; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        Real* row = cols + ((c * g.kh + ki) * g.kw + kj) * g.pixels();
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) -
                          static_cast<std::ptrdiff_t>(g.padding);
          Real* out = row + oy * g.ow;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
            std::fill(out, out + g.ow, Real{0});
            continue;
          }
          const Real* src = x + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) -
                            static_cast<std::ptrdiff_t>(g.padding);
            out[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w))
                          ? Real{0}
                          : src[ix];
          }
        }
      }
    }
  }
}

template <typename Real>
void col2im(const ConvGeometry& g, const Real* cols, Real* dx) {
  for (std::size_t c = 0; c < g.c_in; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const Real* row = cols + ((c * g.kh + ki) * g.kw + kj) * g.pixels();
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) -
                          static_cast<std::ptrdiff_t>(g.padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          Real* dst = dx + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          const Real* in = row + oy * g.ow;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) -
                            static_cast<std::ptrdiff_t>(g.padding);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.w)) {
              dst[ix] += in[ox];
            }
          }
        }
      }
    }
  }
}

template <typename Real, typename Forward, typename Derivative>
Var<Real> unary(const Var<Real>& x, const char* name, Forward forward,
                Derivative derivative) {
  Tensor<Real> out(x.shape());
  const Real* in = x.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = forward(in[i]);
  return record<Real>(
      std::move(out), name, {x}, [derivative](Node<Real>& self) {
        Node<Real>& input = *self.inputs[0];
        if (!input.requires_grad) return;
        Real* dx = input.grad_buffer().data();
        const Real* dy = self.grad.data();
        const Real* xv = input.value.data();
        const Real* yv = self.value.data();
        for (std::size_t i = 0; i < self.value.size(); ++i) {
          dx[i] += dy[i] * derivative(xv[i], yv[i]);
        }
      });
}

}  // namespace

template <typename Real>
Var<Real> conv2d(const Var<Real>& x, const Var<Real>& kernel,
                 const Var<Real>& bias, std::size_t stride,
                 std::size_t padding) {
  require_rank(x, 3, "conv2d input");
  require_rank(kernel, 4, "conv2d kernel");
  if (stride == 0) throw DimensionError("conv2d: stride must be >= 1");
  ConvGeometry g{};
  g.c_in = x.shape()[0];
  g.h = x.shape()[1];
  g.w = x.shape()[2];
  g.c_out = kernel.shape()[0];
  g.kh = kernel.shape()[2];
  g.kw = kernel.shape()[3];
  g.stride = stride;
  g.padding = padding;
  if (kernel.shape()[1] != g.c_in) {
    throw DimensionError("conv2d: kernel expects " +
                         std::to_string(kernel.shape()[1]) +
                         " input channels, input has " +
                         std::to_string(g.c_in));
  }
  if (g.kh > g.h + 2 * padding || g.kw > g.w + 2 * padding) {
    throw DimensionError("conv2d: kernel larger than padded input");
  }
  if (bias.defined() &&
      (bias.value().rank() != 1 || bias.shape()[0] != g.c_out)) {
    throw DimensionError("conv2d: bias shape " + to_string(bias.shape()) +
                         " does not match " + std::to_string(g.c_out) +
                         " output channels");
  }
  g.oh = (g.h + 2 * padding - g.kh) / stride + 1;
  g.ow = (g.w + 2 * padding - g.kw) / stride + 1;

  std::shared_ptr<std::vector<Real>> cols;
  const Real* cols_data = x.value().data();
  if (!g.pointwise()) {
    cols = std::make_shared<std::vector<Real>>(g.patch() * g.pixels());
    im2col(g, x.value().data(), cols->data());
    cols_data = cols->data();
  }

  Tensor<Real> out(Shape{g.c_out, g.oh, g.ow});
  blas::gemm(false, false, g.c_out, g.pixels(), g.patch(), Real{1},
             kernel.value().data(), cols_data, Real{0}, out.data());
  if (bias.defined()) {
    for (std::size_t c = 0; c < g.c_out; ++c) {
      Real* row = out.data() + c * g.pixels();
      const Real b = bias.value()[c];
      for (std::size_t p = 0; p < g.pixels(); ++p) row[p] += b;
    }
  }

  std::vector<Var<Real>> inputs{x, kernel};
  if (bias.defined()) inputs.push_back(bias);
  return record<Real>(
      std::move(out), "conv2d", std::move(inputs),
      [g, cols](Node<Real>& self) {
        Node<Real>& xin = *self.inputs[0];
        Node<Real>& kin = *self.inputs[1];
        const Real* dy = self.grad.data();
        const Real* col = cols ? cols->data() : xin.value.data();
        if (kin.requires_grad) {
          blas::gemm(false, true, g.c_out, g.patch(), g.pixels(), Real{1}, dy,
                     col, Real{1}, kin.grad_buffer().data());
        }
        if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) {
          Real* db = self.inputs[2]->grad_buffer().data();
          for (std::size_t c = 0; c < g.c_out; ++c) {
            const Real* row = dy + c * g.pixels();
            Real acc = 0;
            for (std::size_t p = 0; p < g.pixels(); ++p) acc += row[p];
            db[c] += acc;
          }
        }
        if (xin.requires_grad) {
          if (g.pointwise()) {
            blas::gemm(true, false, g.patch(), g.pixels(), g.c_out, Real{1},
                       kin.value.data(), dy, Real{1},
                       xin.grad_buffer().data());
          } else {
            std::vector<Real> dcols(g.patch() * g.pixels());
            blas::gemm(true, false, g.patch(), g.pixels(), g.c_out, Real{1},
                       kin.value.data(), dy, Real{0}, dcols.data());
            col2im(g, dcols.data(), xin.grad_buffer().data());
          }
        }
      });
}

template <typename Real>
Var<Real> upsample2x(const Var<Real>& x) {
  require_rank(x, 3, "upsample2x");
  const std::size_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  Tensor<Real> out(Shape{c, 2 * h, 2 * w});
  const Tensor<Real>& in = x.value();
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t y = 0; y < 2 * h; ++y)
      for (std::size_t xx = 0; xx < 2 * w; ++xx)
        out.at(k, y, xx) = in.at(k, y / 2, xx / 2);
  return record<Real>(std::move(out), "upsample2x", {x},
                      [c, h, w](Node<Real>& self) {
                        Node<Real>& input = *self.inputs[0];
                        if (!input.requires_grad) return;
                        Tensor<Real>& dx = input.grad_buffer();
                        for (std::size_t k = 0; k < c; ++k)
                          for (std::size_t y = 0; y < 2 * h; ++y)
                            for (std::size_t xx = 0; xx < 2 * w; ++xx)
                              dx.at(k, y / 2, xx / 2) += self.grad.at(k, y, xx);
                      });
}

template <typename Real>
Var<Real> avg_pool2(const Var<Real>& x) {
  require_rank(x, 3, "avg_pool2");
  const std::size_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  if (h % 2 || w % 2) {
    throw DimensionError("avg_pool2: odd spatial extent in " +
                         to_string(x.shape()));
  }
  Tensor<Real> out(Shape{c, h / 2, w / 2});
  const Tensor<Real>& in = x.value();
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t y = 0; y < h / 2; ++y)
      for (std::size_t xx = 0; xx < w / 2; ++xx)
        out.at(k, y, xx) = (in.at(k, 2 * y, 2 * xx) + in.at(k, 2 * y, 2 * xx + 1) +
                            in.at(k, 2 * y + 1, 2 * xx) +
                            in.at(k, 2 * y + 1, 2 * xx + 1)) /
                           Real{4};
  return record<Real>(std::move(out), "avg_pool2", {x},
                      [c, h, w](Node<Real>& self) {
                        Node<Real>& input = *self.inputs[0];
                        if (!input.requires_grad) return;
                        Tensor<Real>& dx = input.grad_buffer();
                        for (std::size_t k = 0; k < c; ++k)
                          for (std::size_t y = 0; y < h; ++y)
                            for (std::size_t xx = 0; xx < w; ++xx)
                              dx.at(k, y, xx) +=
                                  self.grad.at(k, y / 2, xx / 2) / Real{4};
                      });
}

template <typename Real>
Var<Real> sigmoid(const Var<Real>& x) {
  return unary(
      x, "sigmoid",
      [](Real v) {
        // Split by sign so exp() never overflows.
        if (v >= 0) return Real{1} / (Real{1} + std::exp(-v));
        const Real e = std::exp(v);
        return e / (Real{1} + e);
      },
      [](Real, Real y) { return y * (Real{1} - y); });
}

template <typename Real>
Var<Real> tanh(const Var<Real>& x) {
  return unary(
      x, "tanh", [](Real v) { return std::tanh(v); },
      [](Real, Real y) { return Real{1} - y * y; });
}

template <typename Real>
Var<Real> relu(const Var<Real>& x) {
  return unary(
      x, "relu", [](Real v) { return v > 0 ? v : Real{0}; },
      [](Real v, Real) { return v > 0 ? Real{1} : Real{0}; });
}

template <typename Real>
Var<Real> softmax_channels(const Var<Real>& x) {
  require_rank(x, 3, "softmax_channels");
  const std::size_t c = x.shape()[0];
  const std::size_t pixels = x.shape()[1] * x.shape()[2];
  Tensor<Real> out(x.shape());
  const Real* in = x.value().data();
  for (std::size_t p = 0; p < pixels; ++p) {
    Real peak = in[p];
    for (std::size_t k = 1; k < c; ++k) peak = std::max(peak, in[k * pixels + p]);
    Real total = 0;
    for (std::size_t k = 0; k < c; ++k) {
      const Real e = std::exp(in[k * pixels + p] - peak);
      out[k * pixels + p] = e;
      total += e;
    }
    for (std::size_t k = 0; k < c; ++k) out[k * pixels + p] /= total;
  }
  return record<Real>(
      std::move(out), "softmax_channels", {x}, [c, pixels](Node<Real>& self) {
        Node<Real>& input = *self.inputs[0];
        if (!input.requires_grad) return;
        Real* dx = input.grad_buffer().data();
        const Real* dy = self.grad.data();
        const Real* y = self.value.data();
        for (std::size_t p = 0; p < pixels; ++p) {
          Real dot = 0;
          for (std::size_t k = 0; k < c; ++k) dot += dy[k * pixels + p] * y[k * pixels + p];
          for (std::size_t k = 0; k < c; ++k) {
            dx[k * pixels + p] += y[k * pixels + p] * (dy[k * pixels + p] - dot);
          }
        }
      });
}

template <typename Real>
Var<Real> log_softmax_channels(const Var<Real>& x) {
  require_rank(x, 3, "log_softmax_channels");
  const std::size_t c = x.shape()[0];
  const std::size_t pixels = x.shape()[1] * x.shape()[2];
  Tensor<Real> out(x.shape());
  const Real* in = x.value().data();
  for (std::size_t p = 0; p < pixels; ++p) {
    Real peak = in[p];
    for (std::size_t k = 1; k < c; ++k) peak = std::max(peak, in[k * pixels + p]);
    Real total = 0;
    for (std::size_t k = 0; k < c; ++k) total += std::exp(in[k * pixels + p] - peak);
    const Real log_total = peak + std::log(total);
    for (std::size_t k = 0; k < c; ++k) out[k * pixels + p] = in[k * pixels + p] - log_total;
  }
  return record<Real>(
      std::move(out), "log_softmax_channels", {x}, [c, pixels](Node<Real>& self) {
        Node<Real>& input = *self.inputs[0];
        if (!input.requires_grad) return;
        Real* dx = input.grad_buffer().data();
        const Real* dy = self.grad.data();
        const Real* y = self.value.data();
        for (std::size_t p = 0; p < pixels; ++p) {
          Real total = 0;
          for (std::size_t k = 0; k < c; ++k) total += dy[k * pixels + p];
          for (std::size_t k = 0; k < c; ++k) {
            dx[k * pixels + p] += dy[k * pixels + p] - std::exp(y[k * pixels + p]) * total;
          }
        }
      });
}

template <typename Real>
Var<Real> log_clamped(const Var<Real>& x, Real floor) {
  return unary(
      x, "log_clamped",
      [floor](Real v) { return std::log(std::max(v, floor)); },
      [floor](Real v, Real) { return v > floor ? Real{1} / v : Real{0}; });
}

template <typename Real>
Var<Real> reshape(const Var<Real>& x, const Shape& shape) {
  Tensor<Real> out = x.value().reshaped(shape);
  return record<Real>(std::move(out), "reshape", {x}, [](Node<Real>& self) {
    accumulate(*self.inputs[0], self.grad.data());
  });
}

template <typename Real>
Var<Real> tau(const Var<Real>& x) {
  require_rank(x, 3, "tau");
  return reshape(x, Shape{x.size(), 1});
}

template <typename Real>
Var<Real> tau_inv(const Var<Real>& x, const Shape& shape) {
  require_rank(x, 2, "tau_inv");
  if (x.shape()[0] != 1 || shape.size() != 3 ||
      element_count(shape) != x.size()) {
    throw DimensionError("tau_inv: cannot map " + to_string(x.shape()) +
                         " onto " + to_string(shape));
  }
  return reshape(x, shape);
}

template <typename Real>
Var<Real> transpose(const Var<Real>& x) {
  require_rank(x, 2, "transpose");
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  Tensor<Real> out(Shape{cols, rows});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = x.value()[i * cols + j];
  return record<Real>(std::move(out), "transpose", {x},
                      [rows, cols](Node<Real>& self) {
                        Node<Real>& input = *self.inputs[0];
                        if (!input.requires_grad) return;
                        Real* dx = input.grad_buffer().data();
                        for (std::size_t i = 0; i < rows; ++i)
                          for (std::size_t j = 0; j < cols; ++j)
                            dx[i * cols + j] += self.grad[j * rows + i];
                      });
}

template <typename Real>
Var<Real> add(const Var<Real>& a, const Var<Real>& b) {
  require_same_shape(a, b, "add");
  Tensor<Real> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return record<Real>(std::move(out), "add", {a, b}, [](Node<Real>& self) {
    accumulate(*self.inputs[0], self.grad.data());
    accumulate(*self.inputs[1], self.grad.data());
  });
}

template <typename Real>
Var<Real> sub(const Var<Real>& a, const Var<Real>& b) {
  require_same_shape(a, b, "sub");
  Tensor<Real> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return record<Real>(std::move(out), "sub", {a, b}, [](Node<Real>& self) {
    accumulate(*self.inputs[0], self.grad.data());
    Node<Real>& rhs = *self.inputs[1];
    if (!rhs.requires_grad) return;
    Real* db = rhs.grad_buffer().data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) db[i] -= self.grad[i];
  });
}

template <typename Real>
Var<Real> mul(const Var<Real>& a, const Var<Real>& b) {
  require_same_shape(a, b, "mul");
  Tensor<Real> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return record<Real>(std::move(out), "mul", {a, b}, [](Node<Real>& self) {
    Node<Real>& lhs = *self.inputs[0];
    Node<Real>& rhs = *self.inputs[1];
    const std::size_t n = self.grad.size();
    if (lhs.requires_grad) {
      Real* da = lhs.grad_buffer().data();
      for (std::size_t i = 0; i < n; ++i) da[i] += self.grad[i] * rhs.value[i];
    }
    if (rhs.requires_grad) {
      Real* db = rhs.grad_buffer().data();
      for (std::size_t i = 0; i < n; ++i) db[i] += self.grad[i] * lhs.value[i];
    }
  });
}

template <typename Real>
Var<Real> div(const Var<Real>& a, const Var<Real>& b) {
  require_same_shape(a, b, "div");
  Tensor<Real> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] / b.value()[i];
  return record<Real>(std::move(out), "div", {a, b}, [](Node<Real>& self) {
    Node<Real>& lhs = *self.inputs[0];
    Node<Real>& rhs = *self.inputs[1];
    const std::size_t n = self.grad.size();
    if (lhs.requires_grad) {
      Real* da = lhs.grad_buffer().data();
      for (std::size_t i = 0; i < n; ++i) da[i] += self.grad[i] / rhs.value[i];
    }
    if (rhs.requires_grad) {
      Real* db = rhs.grad_buffer().data();
      for (std::size_t i = 0; i < n; ++i) {
        db[i] -= self.grad[i] * self.value[i] / rhs.value[i];
      }
    }
  });
}

template <typename Real>
Var<Real> affine(const Var<Real>& x, Real factor, Real shift) {
  Tensor<Real> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * x.value()[i] + shift;
  return record<Real>(std::move(out), "affine", {x}, [factor](Node<Real>& self) {
    Node<Real>& input = *self.inputs[0];
    if (!input.requires_grad) return;
    Real* dx = input.grad_buffer().data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += factor * self.grad[i];
  });
}

template <typename Real>
Var<Real> matmul(const Var<Real>& a, const Var<Real>& b) {
  require_rank(a, 2, "matmul lhs");
  require_rank(b, 2, "matmul rhs");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimensionError("matmul: " + to_string(a.shape()) + " x " +
                         to_string(b.shape()));
  }
  Tensor<Real> out(Shape{m, n});
  blas::gemm(false, false, m, n, k, Real{1}, a.value().data(), b.value().data(),
             Real{0}, out.data());
  return record<Real>(std::move(out), "matmul", {a, b}, [m, k, n](Node<Real>& self) {
    Node<Real>& lhs = *self.inputs[0];
    Node<Real>& rhs = *self.inputs[1];
    if (lhs.requires_grad) {
      blas::gemm(false, true, m, k, n, Real{1}, self.grad.data(),
                 rhs.value.data(), Real{1}, lhs.grad_buffer().data());
    }
    if (rhs.requires_grad) {
      blas::gemm(true, false, k, n, m, Real{1}, lhs.value.data(),
                 self.grad.data(), Real{1}, rhs.grad_buffer().data());
    }
  });
}

template <typename Real>
Var<Real> reduce_sum(const Var<Real>& x) {
  Real total = 0;
  for (Real v : x.value().values()) total += v;
  return record<Real>(Tensor<Real>::scalar(total), "reduce_sum", {x},
                      [](Node<Real>& self) {
                        Node<Real>& input = *self.inputs[0];
                        if (!input.requires_grad) return;
                        const Real g = self.grad[0];
                        for (Real& v : input.grad_buffer().values()) v += g;
                      });
}

template <typename Real>
Var<Real> concat(const std::vector<Var<Real>>& parts) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.value().rank() == 0 ||
        !std::equal(tail.begin(), tail.end(), p.shape().begin() + 1,
                    p.shape().end())) {
      throw DimensionError("concat: incompatible shape " + to_string(p.shape()));
    }
    rows += p.shape()[0];
  }
  Shape shape = tail;
  shape.insert(shape.begin(), rows);
  Tensor<Real> out(shape);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    std::copy(p.value().data(), p.value().data() + p.size(), out.data() + offset);
    offset += p.size();
  }
  return record<Real>(std::move(out), "concat", parts,
                      [offsets](Node<Real>& self) {
                        for (std::size_t i = 0; i < self.inputs.size(); ++i) {
                          accumulate(*self.inputs[i], self.grad.data() + offsets[i]);
                        }
                      });
}

template <typename Real>
Var<Real> slice(const Var<Real>& x, std::size_t begin, std::size_t count) {
  if (x.value().rank() == 0 || count == 0 || begin + count > x.shape()[0]) {
    throw DimensionError("slice [" + std::to_string(begin) + ", +" +
                         std::to_string(count) + ") out of range for " +
                         to_string(x.shape()));
  }
  Shape shape = x.shape();
  shape[0] = count;
  const std::size_t stride = x.size() / x.shape()[0];
  const std::size_t offset = begin * stride;
  Tensor<Real> out(shape);
  std::copy(x.value().data() + offset, x.value().data() + offset + out.size(),
            out.data());
  return record<Real>(std::move(out), "slice", {x}, [offset](Node<Real>& self) {
    Node<Real>& input = *self.inputs[0];
    if (!input.requires_grad) return;
    Real* dx = input.grad_buffer().data() + offset;
    for (std::size_t i = 0; i < self.grad.size(); ++i) dx[i] += self.grad[i];
  });
}

template <typename Real>
Var<Real> select(const Var<Real>& x, std::size_t i) {
  Var<Real> row = slice(x, i, 1);
  Shape shape(x.shape().begin() + 1, x.shape().end());
  return reshape(row, shape);
}

#define GGPSEG_INSTANTIATE_OPS(Real)                                          \
  template Var<Real> conv2d(const Var<Real>&, const Var<Real>&,               \
                            const Var<Real>&, std::size_t, std::size_t);      \
  template Var<Real> upsample2x(const Var<Real>&);                            \
  template Var<Real> avg_pool2(const Var<Real>&);                             \
  template Var<Real> sigmoid(const Var<Real>&);                               \
  template Var<Real> tanh(const Var<Real>&);                                  \
  template Var<Real> relu(const Var<Real>&);                                  \
  template Var<Real> softmax_channels(const Var<Real>&);                      \
  template Var<Real> log_softmax_channels(const Var<Real>&);                  \
  template Var<Real> log_clamped(const Var<Real>&, Real);                     \
  template Var<Real> tau(const Var<Real>&);                                   \
  template Var<Real> tau_inv(const Var<Real>&, const Shape&);                 \
  template Var<Real> reshape(const Var<Real>&, const Shape&);                 \
  template Var<Real> transpose(const Var<Real>&);                             \
  template Var<Real> add(const Var<Real>&, const Var<Real>&);                 \
  template Var<Real> sub(const Var<Real>&, const Var<Real>&);                 \
  template Var<Real> mul(const Var<Real>&, const Var<Real>&);                 \
  template Var<Real> div(const Var<Real>&, const Var<Real>&);                 \
  template Var<Real> affine(const Var<Real>&, Real, Real);                    \
  template Var<Real> matmul(const Var<Real>&, const Var<Real>&);              \
  template Var<Real> reduce_sum(const Var<Real>&);                            \
  template Var<Real> concat(const std::vector<Var<Real>>&);                   \
  template Var<Real> slice(const Var<Real>&, std::size_t, std::size_t);       \
  template Var<Real> select(const Var<Real>&, std::size_t);

GGPSEG_INSTANTIATE_OPS(float)
GGPSEG_INSTANTIATE_OPS(double)

#undef GGPSEG_INSTANTIATE_OPS

}  // namespace ggpseg::ops
