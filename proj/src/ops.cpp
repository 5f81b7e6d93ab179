/* Copyright 2026 The chgate Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "chgate/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>

#include "chgate/kernels.hpp"

namespace chgate {

template <typename T>
std::pair<std::vector<T>, std::vector<std::size_t>> sort_with_indices(std::span<const T> values) {
  if (values.empty()) throw std::invalid_argument("sort_with_indices: empty input");
  std::vector<std::size_t> perm(values.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::stable_sort(perm.begin(), perm.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<T> sorted(values.size());
  for (std::size_t j = 0; j < perm.size(); ++j) sorted[j] = values[perm[j]];
  return {std::move(sorted), std::move(perm)};
}

namespace ops {

namespace {

[[noreturn]] void shape_error(const char* op, const std::string& what, const Shape& a,
                              const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": " + what + " (" + shape_str(a) + " vs " +
                              shape_str(b) + ")");
}

template <typename T>
bool wants_grad(const TapeNode<T>& self, std::size_t i) {
  return i < self.inputs.size() && self.inputs[i]->requires_grad;
}

}  // namespace

template <typename T>
Variable<T> conv2d(const Variable<T>& input, const Variable<T>& weight, std::size_t stride,
                   std::size_t padding) {
  const Shape& xs = input.shape();
  const Shape& ws = weight.shape();
  if (xs.size() != 4 || ws.size() != 4) shape_error("conv2d", "expected 4-D input and weight", xs, ws);
  if (ws[1] != xs[1]) shape_error("conv2d", "input channels do not match weight", xs, ws);
  if (ws[2] != ws[3] || ws[2] % 2 == 0) shape_error("conv2d", "kernel must be square and odd", xs, ws);
  if (stride == 0) throw std::invalid_argument("conv2d: stride must be positive");
  if (xs[2] + 2 * padding < ws[2] || xs[3] + 2 * padding < ws[3]) {
    shape_error("conv2d", "kernel larger than padded input", xs, ws);
  }
  kernels::ConvGeometry g{xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], stride, padding};
  Tensor<T> out(Shape{g.batch, g.out_channels, g.out_height(), g.out_width()});
  // The unfolded input is only worth keeping when the weight needs a gradient.
  std::shared_ptr<T[]> cols;
  if (grad_enabled() && weight.requires_grad()) cols.reset(new T[kernels::conv_cols_size(g)]);
  kernels::conv2d_forward(g, input.value().raw(), weight.value().raw(), out.raw(), cols.get());
  return make_result<T>(
      std::move(out), {input, weight},
      [g, cols](TapeNode<T>& self) {
        T* gi = wants_grad(self, 0) ? self.inputs[0]->grad_buffer().raw() : nullptr;
        T* gw = wants_grad(self, 1) ? self.inputs[1]->grad_buffer().raw() : nullptr;
        kernels::conv2d_backward(g, self.inputs[0]->value.raw(), self.inputs[1]->value.raw(), self.grad.raw(),
                                 cols.get(), gi, gw);
      },
      "conv2d");
}

template <typename T>
Variable<T> batch_norm(const Variable<T>& input, const Variable<T>& scale, const Variable<T>& shift,
                       BatchNormStats<T>& stats, Mode mode, double momentum, double eps) {
  const Shape& xs = input.shape();
  if (xs.size() != 2 && xs.size() != 4) {
    shape_error("batch_norm", "expected [N,C] or [N,C,H,W]", xs, scale.shape());
  }
  const std::size_t n = xs[0], c = xs[1];
  const std::size_t plane = xs.size() == 4 ? xs[2] * xs[3] : 1;
  const Shape per_channel{c};
  if (scale.shape() != per_channel) shape_error("batch_norm", "scale length", xs, scale.shape());
  if (shift.shape() != per_channel) shape_error("batch_norm", "shift length", xs, shift.shape());
  if (stats.running_mean.shape() != per_channel) {
    shape_error("batch_norm", "running statistics length", xs, stats.running_mean.shape());
  }
  const T* x = input.value().raw();
  const T* g = scale.value().raw();
  const T* b = shift.value().raw();
  const std::size_t count = n * plane;

  std::vector<T> mean(c), invstd(c);
  if (mode == Mode::kTrain) {
    if (count < 2) {
      throw std::invalid_argument("batch_norm: train mode needs at least 2 values per channel, got " +
                                  shape_str(xs));
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const T* p = x + (i * c + ch) * plane;
        for (std::size_t k = 0; k < plane; ++k) s += p[k];
      }
      const double mu = s / static_cast<double>(count);
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const T* p = x + (i * c + ch) * plane;
        for (std::size_t k = 0; k < plane; ++k) {
          const double d = p[k] - mu;
          ss += d * d;
        }
      }
      const double var = ss / static_cast<double>(count);
      mean[ch] = static_cast<T>(mu);
      invstd[ch] = static_cast<T>(1.0 / std::sqrt(var + eps));
      const double unbiased = ss / static_cast<double>(count - 1);
      stats.running_mean[ch] =
          static_cast<T>((1.0 - momentum) * stats.running_mean[ch] + momentum * mu);
      stats.running_var[ch] =
          static_cast<T>((1.0 - momentum) * stats.running_var[ch] + momentum * unbiased);
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      mean[ch] = stats.running_mean[ch];
      invstd[ch] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(stats.running_var[ch]) + eps));
    }
  }

  Tensor<T> xhat(xs);
  Tensor<T> out(xs);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t base = (i * c + ch) * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        const T h = (x[base + k] - mean[ch]) * invstd[ch];
        xhat[base + k] = h;
        out[base + k] = h * g[ch] + b[ch];
      }
    }
  }
  const bool train = mode == Mode::kTrain;
  return make_result<T>(
      std::move(out), {input, scale, shift},
      [xhat = std::move(xhat), invstd = std::move(invstd), n, c, plane, train](TapeNode<T>& self) {
        const T* dy = self.grad.raw();
        const T* g = self.inputs[1]->value.raw();
        const double m = static_cast<double>(n * plane);
        for (std::size_t ch = 0; ch < c; ++ch) {
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t base = (i * c + ch) * plane;
            for (std::size_t k = 0; k < plane; ++k) {
              sum_dy += dy[base + k];
              sum_dy_xhat += static_cast<double>(dy[base + k]) * xhat[base + k];
            }
          }
          if (wants_grad(self, 1)) self.inputs[1]->grad_buffer()[ch] += static_cast<T>(sum_dy_xhat);
          if (wants_grad(self, 2)) self.inputs[2]->grad_buffer()[ch] += static_cast<T>(sum_dy);
          if (!wants_grad(self, 0)) continue;
          T* dx = self.inputs[0]->grad_buffer().raw();
          const double gi = static_cast<double>(g[ch]) * invstd[ch];
          for (std::size_t i = 0; i < n; ++i) {
            const std::size_t base = (i * c + ch) * plane;
            for (std::size_t k = 0; k < plane; ++k) {
              if (train) {
                dx[base + k] += static_cast<T>(
                    gi * (dy[base + k] - sum_dy / m - xhat[base + k] * sum_dy_xhat / m));
              } else {
                dx[base + k] += static_cast<T>(gi * dy[base + k]);
              }
            }
          }
        }
      },
      "batch_norm");
}

template <typename T>
Variable<T> relu(const Variable<T>& x) {
  Tensor<T> out(x.shape());
  const T* in = x.value().raw();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] > T{0} ? in[i] : T{0};
  return make_result<T>(
      std::move(out), {x},
      [](TapeNode<T>& self) {
        const T* in = self.inputs[0]->value.raw();
        T* dx = self.inputs[0]->grad_buffer().raw();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          if (in[i] > T{0}) dx[i] += self.grad[i];
        }
      },
      "relu");
}

template <typename T>
Variable<T> sigmoid(const Variable<T>& x) {
  Tensor<T> out(x.shape());
  const T* in = x.value().raw();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = T{1} / (T{1} + std::exp(-in[i]));
  Tensor<T> saved = out;
  return make_result<T>(
      std::move(out), {x},
      [saved = std::move(saved)](TapeNode<T>& self) {
        T* dx = self.inputs[0]->grad_buffer().raw();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          dx[i] += self.grad[i] * saved[i] * (T{1} - saved[i]);
        }
      },
      "sigmoid");
}

template <typename T>
Variable<T> linear(const Variable<T>& x, const Variable<T>& weight, const Variable<T>* bias) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (xs.size() != 2 || ws.size() != 2 || xs[1] != ws[1]) {
    shape_error("linear", "expected x[N,in] and weight[out,in]", xs, ws);
  }
  const std::size_t n = xs[0], in = xs[1], out_f = ws[0];
  if (bias && bias->shape() != Shape{out_f}) shape_error("linear", "bias length", ws, bias->shape());
  Tensor<T> out(Shape{n, out_f});
  const T* xv = x.value().raw();
  const T* wv = weight.value().raw();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < out_f; ++o) {
      T acc = bias ? bias->value()[o] : T{0};
      const T* xr = xv + i * in;
      const T* wr = wv + o * in;
      for (std::size_t k = 0; k < in; ++k) acc += xr[k] * wr[k];
      out[i * out_f + o] = acc;
    }
  }
  std::vector<Variable<T>> inputs{x, weight};
  if (bias) inputs.push_back(*bias);
  return make_result<T>(
      std::move(out), std::move(inputs),
      [n, in, out_f](TapeNode<T>& self) {
        const T* dy = self.grad.raw();
        const T* xv = self.inputs[0]->value.raw();
        const T* wv = self.inputs[1]->value.raw();
        if (wants_grad(self, 0)) {
          T* dx = self.inputs[0]->grad_buffer().raw();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t o = 0; o < out_f; ++o)
              for (std::size_t k = 0; k < in; ++k) dx[i * in + k] += dy[i * out_f + o] * wv[o * in + k];
        }
        if (wants_grad(self, 1)) {
          T* dw = self.inputs[1]->grad_buffer().raw();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t o = 0; o < out_f; ++o)
              for (std::size_t k = 0; k < in; ++k) dw[o * in + k] += dy[i * out_f + o] * xv[i * in + k];
        }
        if (wants_grad(self, 2)) {
          T* db = self.inputs[2]->grad_buffer().raw();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t o = 0; o < out_f; ++o) db[o] += dy[i * out_f + o];
        }
      },
      "linear");
}

template <typename T>
Variable<T> global_avg_pool(const Variable<T>& x) {
  const Shape& xs = x.shape();
  if (xs.size() != 4) shape_error("global_avg_pool", "expected [N,C,H,W]", xs, Shape{});
  const std::size_t n = xs[0], c = xs[1], plane = xs[2] * xs[3];
  Tensor<T> out(Shape{n, c});
  const T* in = x.value().raw();
  for (std::size_t i = 0; i < n * c; ++i) {
    T acc{0};
    for (std::size_t k = 0; k < plane; ++k) acc += in[i * plane + k];
    out[i] = acc / static_cast<T>(plane);
  }
  return make_result<T>(
      std::move(out), {x},
      [n, c, plane](TapeNode<T>& self) {
        T* dx = self.inputs[0]->grad_buffer().raw();
        for (std::size_t i = 0; i < n * c; ++i) {
          const T d = self.grad[i] / static_cast<T>(plane);
          for (std::size_t k = 0; k < plane; ++k) dx[i * plane + k] += d;
        }
      },
      "global_avg_pool");
}

template <typename T>
Variable<T> max_pool2d(const Variable<T>& x, std::size_t kernel, std::size_t stride,
                       std::size_t padding) {
  const Shape& xs = x.shape();
  if (xs.size() != 4) shape_error("max_pool2d", "expected [N,C,H,W]", xs, Shape{});
  const std::size_t n = xs[0], c = xs[1], h = xs[2], w = xs[3];
  const std::size_t ho = (h + 2 * padding - kernel) / stride + 1;
  const std::size_t wo = (w + 2 * padding - kernel) / stride + 1;
  Tensor<T> out(Shape{n, c, ho, wo});
  std::vector<std::size_t> argmax(out.size());
  const T* in = x.value().raw();
  for (std::size_t p = 0; p < n * c; ++p) {
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        T best = -std::numeric_limits<T>::infinity();
        std::size_t best_i = 0;
        for (std::size_t ky = 0; ky < kernel; ++ky) {
          const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(padding);
          if (iy < 0 || iy >= static_cast<long>(h)) continue;
          for (std::size_t kx = 0; kx < kernel; ++kx) {
            const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(padding);
            if (ix < 0 || ix >= static_cast<long>(w)) continue;
            const std::size_t idx = p * h * w + iy * w + ix;
            if (in[idx] > best) {
              best = in[idx];
              best_i = idx;
            }
          }
        }
        const std::size_t o = (p * ho + oy) * wo + ox;
        out[o] = best;
        argmax[o] = best_i;
      }
    }
  }
  return make_result<T>(
      std::move(out), {x},
      [argmax = std::move(argmax)](TapeNode<T>& self) {
        T* dx = self.inputs[0]->grad_buffer().raw();
        for (std::size_t o = 0; o < argmax.size(); ++o) dx[argmax[o]] += self.grad[o];
      },
      "max_pool2d");
}

template <typename T>
Variable<T> add(const Variable<T>& a, const Variable<T>& b) {
  if (a.shape() != b.shape()) shape_error("add", "operands differ", a.shape(), b.shape());
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make_result<T>(
      std::move(out), {a, b},
      [](TapeNode<T>& self) {
        for (std::size_t k = 0; k < 2; ++k) {
          if (!wants_grad(self, k)) continue;
          T* d = self.inputs[k]->grad_buffer().raw();
          for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i];
        }
      },
      "add");
}

template <typename T>
Variable<T> mul(const Variable<T>& a, const Variable<T>& b) {
  if (a.shape() != b.shape()) shape_error("mul", "operands differ", a.shape(), b.shape());
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make_result<T>(
      std::move(out), {a, b},
      [](TapeNode<T>& self) {
        const T* av = self.inputs[0]->value.raw();
        const T* bv = self.inputs[1]->value.raw();
        if (wants_grad(self, 0)) {
          T* d = self.inputs[0]->grad_buffer().raw();
          for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i] * bv[i];
        }
        if (wants_grad(self, 1)) {
          T* d = self.inputs[1]->grad_buffer().raw();
          for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i] * av[i];
        }
      },
      "mul");
}

template <typename T>
Variable<T> scale(const Variable<T>& x, T factor) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * factor;
  return make_result<T>(
      std::move(out), {x},
      [factor](TapeNode<T>& self) {
        T* d = self.inputs[0]->grad_buffer().raw();
        for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i] * factor;
      },
      "scale");
}

template <typename T>
Variable<T> add_constant(const Variable<T>& x, const Tensor<T>& c) {
  if (x.shape() != c.shape()) shape_error("add_constant", "operands differ", x.shape(), c.shape());
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] + c[i];
  return make_result<T>(
      std::move(out), {x},
      [](TapeNode<T>& self) {
        T* d = self.inputs[0]->grad_buffer().raw();
        for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i];
      },
      "add_constant");
}

template <typename T>
Variable<T> channel_mul(const Variable<T>& x, const Variable<T>& mask) {
  const Shape& xs = x.shape();
  const Shape& ms = mask.shape();
  if (xs.size() != 4 || ms.size() != 2 || ms[0] != xs[0] || ms[1] != xs[1]) {
    shape_error("channel_mul", "expected x[N,C,H,W] and mask[N,C]", xs, ms);
  }
  const std::size_t nc = xs[0] * xs[1], plane = xs[2] * xs[3];
  Tensor<T> out(xs);
  const T* xv = x.value().raw();
  const T* mv = mask.value().raw();
  for (std::size_t p = 0; p < nc; ++p)
    for (std::size_t k = 0; k < plane; ++k) out[p * plane + k] = xv[p * plane + k] * mv[p];
  return make_result<T>(
      std::move(out), {x, mask},
      [nc, plane](TapeNode<T>& self) {
        const T* xv = self.inputs[0]->value.raw();
        const T* mv = self.inputs[1]->value.raw();
        const T* dy = self.grad.raw();
        if (wants_grad(self, 0)) {
          T* dx = self.inputs[0]->grad_buffer().raw();
          for (std::size_t p = 0; p < nc; ++p)
            for (std::size_t k = 0; k < plane; ++k) dx[p * plane + k] += dy[p * plane + k] * mv[p];
        }
        if (wants_grad(self, 1)) {
          T* dm = self.inputs[1]->grad_buffer().raw();
          for (std::size_t p = 0; p < nc; ++p) {
            T acc{0};
            for (std::size_t k = 0; k < plane; ++k) acc += dy[p * plane + k] * xv[p * plane + k];
            dm[p] += acc;
          }
        }
      },
      "channel_mul");
}

template <typename T>
Variable<T> softmax_cross_entropy(const Variable<T>& logits, std::span<const int> labels) {
  const Shape& ls = logits.shape();
  if (ls.size() != 2 || ls[0] != labels.size()) {
    shape_error("softmax_cross_entropy", "expected logits[N,K] with N labels", ls,
                Shape{labels.size()});
  }
  const std::size_t n = ls[0], k = ls[1];
  Tensor<T> probs(ls);
  double loss = 0.0;
  const T* z = logits.value().raw();
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(labels[i]) +
                                  " out of range for " + std::to_string(k) + " classes");
    }
    const T* row = z + i * k;
    const T mx = *std::max_element(row, row + k);
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) denom += std::exp(static_cast<double>(row[j] - mx));
    for (std::size_t j = 0; j < k; ++j) {
      probs[i * k + j] = static_cast<T>(std::exp(static_cast<double>(row[j] - mx)) / denom);
    }
    loss += std::log(denom) - static_cast<double>(row[labels[i]] - mx);
  }
  std::vector<int> lab(labels.begin(), labels.end());
  return make_result<T>(
      Tensor<T>::scalar(static_cast<T>(loss / static_cast<double>(n))), {logits},
      [probs = std::move(probs), lab = std::move(lab), n, k](TapeNode<T>& self) {
        T* dz = self.inputs[0]->grad_buffer().raw();
        const T scale = self.grad[0] / static_cast<T>(n);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < k; ++j) {
            const T target = static_cast<int>(j) == lab[i] ? T{1} : T{0};
            dz[i * k + j] += scale * (probs[i * k + j] - target);
          }
        }
      },
      "softmax_cross_entropy");
}

template <typename T>
Variable<T> sum(const Variable<T>& x) {
  T acc{0};
  for (T v : x.value().data()) acc += v;
  return make_result<T>(
      Tensor<T>::scalar(acc), {x},
      [](TapeNode<T>& self) {
        T* d = self.inputs[0]->grad_buffer().raw();
        const T g = self.grad[0];
        for (std::size_t i = 0; i < self.inputs[0]->value.size(); ++i) d[i] += g;
      },
      "sum");
}

template <typename T>
Variable<T> mean(const Variable<T>& x) {
  return scale(sum(x), T{1} / static_cast<T>(x.size()));
}

template <typename T>
Variable<T> sort(const Variable<T>& x) {
  if (x.shape().size() != 1) shape_error("sort", "expected a 1-D input", x.shape(), Shape{});
  auto [sorted, perm] = sort_with_indices<T>(x.value().data());
  return make_result<T>(
      Tensor<T>(x.shape(), std::move(sorted)), {x},
      [perm = std::move(perm)](TapeNode<T>& self) {
        T* d = self.inputs[0]->grad_buffer().raw();
        for (std::size_t j = 0; j < perm.size(); ++j) d[perm[j]] += self.grad[j];
      },
      "sort");
}

template <typename T>
Variable<T> straight_through(const Variable<T>& soft, const Tensor<T>& hard) {
  if (soft.shape() != hard.shape()) {
    shape_error("straight_through", "soft and hard differ", soft.shape(), hard.shape());
  }
  return make_result<T>(
      hard, {soft},
      [](TapeNode<T>& self) {
        T* d = self.inputs[0]->grad_buffer().raw();
        for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i];
      },
      "straight_through");
}

#define CHGATE_INSTANTIATE_OPS(T)                                                                 \
  template Variable<T> conv2d(const Variable<T>&, const Variable<T>&, std::size_t, std::size_t); \
  template Variable<T> batch_norm(const Variable<T>&, const Variable<T>&, const Variable<T>&,     \
                                  BatchNormStats<T>&, Mode, double, double);                      \
  template Variable<T> relu(const Variable<T>&);                                                 \
  template Variable<T> sigmoid(const Variable<T>&);                                              \
  template Variable<T> linear(const Variable<T>&, const Variable<T>&, const Variable<T>*);       \
  template Variable<T> global_avg_pool(const Variable<T>&);                                      \
  template Variable<T> max_pool2d(const Variable<T>&, std::size_t, std::size_t, std::size_t);    \
  template Variable<T> add(const Variable<T>&, const Variable<T>&);                              \
  template Variable<T> mul(const Variable<T>&, const Variable<T>&);                              \
  template Variable<T> scale(const Variable<T>&, T);                                             \
  template Variable<T> add_constant(const Variable<T>&, const Tensor<T>&);                       \
  template Variable<T> channel_mul(const Variable<T>&, const Variable<T>&);                      \
  template Variable<T> softmax_cross_entropy(const Variable<T>&, std::span<const int>);          \
  template Variable<T> sum(const Variable<T>&);                                                  \
  template Variable<T> mean(const Variable<T>&);                                                 \
  template Variable<T> sort(const Variable<T>&);                                                 \
  template Variable<T> straight_through(const Variable<T>&, const Tensor<T>&);

CHGATE_INSTANTIATE_OPS(float)
CHGATE_INSTANTIATE_OPS(double)
#undef CHGATE_INSTANTIATE_OPS

}  // namespace ops

template std::pair<std::vector<float>, std::vector<std::size_t>> sort_with_indices(
    std::span<const float>);
template std::pair<std::vector<double>, std::vector<std::size_t>> sort_with_indices(
    std::span<const double>);

}  // namespace chgate
