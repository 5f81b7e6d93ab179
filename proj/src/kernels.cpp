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

#include "chgate/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>

namespace chgate::kernels {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

// col[(c*k + ky)*k + kx, oy*Wo + ox] = in[c, oy*s - p + ky, ox*s - p + kx]
// Rows of `col` are `ld` elements apart so several samples can share one matrix.
template <typename T>
void im2col(const ConvGeometry& g, const T* in, T* col, std::size_t ld) {
  const long ho = static_cast<long>(g.out_height()), wo = static_cast<long>(g.out_width());
  const long pad = static_cast<long>(g.padding), stride = static_cast<long>(g.stride);
  const long h = static_cast<long>(g.height), w = static_cast<long>(g.width);
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    const T* plane = in + c * g.height * g.width;
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        T* row = col + ((c * g.kernel + ky) * g.kernel + kx) * ld;
        // Output columns whose input column lies inside the image.
        const long off = static_cast<long>(kx) - pad;
        const long lo = std::min(wo, off < 0 ? (-off + stride - 1) / stride : 0L);
        const long hi = std::max(lo, std::min(wo, (w - off + stride - 1) / stride));
        for (long oy = 0; oy < ho; ++oy) {
          const long iy = oy * stride + static_cast<long>(ky) - pad;
          T* dst = row + oy * wo;
          if (iy < 0 || iy >= h) {
            for (long ox = 0; ox < wo; ++ox) dst[ox] = T{0};
            continue;
          }
          const T* src = plane + iy * w + off;
          for (long ox = 0; ox < lo; ++ox) dst[ox] = T{0};
          if (stride == 1) {
            for (long ox = lo; ox < hi; ++ox) dst[ox] = src[ox];
          } else {
            for (long ox = lo; ox < hi; ++ox) dst[ox] = src[ox * stride];
          }
          for (long ox = hi; ox < wo; ++ox) dst[ox] = T{0};
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const ConvGeometry& g, const T* col, std::size_t ld, T* in) {
  const long ho = static_cast<long>(g.out_height()), wo = static_cast<long>(g.out_width());
  const long pad = static_cast<long>(g.padding), stride = static_cast<long>(g.stride);
  const long h = static_cast<long>(g.height), w = static_cast<long>(g.width);
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    T* plane = in + c * g.height * g.width;
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        const T* row = col + ((c * g.kernel + ky) * g.kernel + kx) * ld;
        const long off = static_cast<long>(kx) - pad;
        const long lo = std::min(wo, off < 0 ? (-off + stride - 1) / stride : 0L);
        const long hi = std::max(lo, std::min(wo, (w - off + stride - 1) / stride));
        for (long oy = 0; oy < ho; ++oy) {
          const long iy = oy * stride + static_cast<long>(ky) - pad;
          if (iy < 0 || iy >= h) continue;
          T* dst = plane + iy * w + off;
          const T* src = row + oy * wo;
          for (long ox = lo; ox < hi; ++ox) dst[ox * stride] += src[ox];
        }
      }
    }
  }
}

// Grow-only per-thread buffers; contents are overwritten before use.
template <typename T>
T* workspace(std::size_t slot, std::size_t n) {
  thread_local std::vector<T> buffers[2];
  auto& b = buffers[slot];
  if (b.size() < n) b.resize(n);
  return b.data();
}

// Samples per GEMM, bounded so the column buffer stays near 16 MB of floats.
std::size_t chunk_size(const ConvGeometry& g) {
  constexpr std::size_t kMaxElements = std::size_t{1} << 22;
  const std::size_t per_sample = std::max(g.patch(), g.out_channels) * g.out_height() * g.out_width();
  return std::clamp<std::size_t>(kMaxElements / std::max<std::size_t>(per_sample, 1), 1, g.batch);
}

}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* in, const T* weight, T* out, T* saved_cols) {
  const std::size_t spatial = g.out_height() * g.out_width();
  const std::size_t in_stride = g.in_channels * g.height * g.width;
  const std::size_t out_stride = g.out_channels * spatial;
  ConstMapMat<T> w(weight, g.out_channels, g.patch());
  const std::size_t chunk = chunk_size(g);
  T* work = saved_cols ? nullptr : workspace<T>(0, g.patch() * chunk * spatial);
  T* result = chunk > 1 ? workspace<T>(1, g.out_channels * chunk * spatial) : nullptr;
  for (std::size_t n0 = 0; n0 < g.batch; n0 += chunk) {
    const std::size_t nb = std::min(chunk, g.batch - n0);
    const std::size_t ld = nb * spatial;
    T* cols = saved_cols ? saved_cols + n0 * g.patch() * spatial : work;
    for (std::size_t b = 0; b < nb; ++b) im2col(g, in + (n0 + b) * in_stride, cols + b * spatial, ld);
    const ConstMapMat<T> panel(cols, g.patch(), ld);
    if (nb == 1) {
      MapMat<T>(out + n0 * out_stride, g.out_channels, spatial).noalias() = w * panel;
      continue;
    }
    MapMat<T>(result, g.out_channels, ld).noalias() = w * panel;
    for (std::size_t b = 0; b < nb; ++b) {
      T* dst = out + (n0 + b) * out_stride;
      for (std::size_t c = 0; c < g.out_channels; ++c) {
        const T* src = result + c * ld + b * spatial;
        for (std::size_t i = 0; i < spatial; ++i) dst[c * spatial + i] = src[i];
      }
    }
  }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* in, const T* weight, const T* grad_out,
                     const T* saved_cols, T* grad_in, T* grad_weight) {
  const std::size_t spatial = g.out_height() * g.out_width();
  const std::size_t in_stride = g.in_channels * g.height * g.width;
  const std::size_t out_stride = g.out_channels * spatial;
  ConstMapMat<T> w(weight, g.out_channels, g.patch());
  const std::size_t chunk = chunk_size(g);
  T* go_buf = workspace<T>(1, g.out_channels * chunk * spatial);
  T* col_buf = workspace<T>(0, g.patch() * chunk * spatial);
  for (std::size_t n0 = 0; n0 < g.batch; n0 += chunk) {
    const std::size_t nb = std::min(chunk, g.batch - n0);
    const std::size_t ld = nb * spatial;
    for (std::size_t b = 0; b < nb; ++b) {
      const T* src = grad_out + (n0 + b) * out_stride;
      for (std::size_t c = 0; c < g.out_channels; ++c) {
        T* dst = go_buf + c * ld + b * spatial;
        for (std::size_t i = 0; i < spatial; ++i) dst[i] = src[c * spatial + i];
      }
    }
    ConstMapMat<T> go(go_buf, g.out_channels, ld);
    MapMat<T> cols(col_buf, g.patch(), ld);
    if (grad_weight) {
      const T* panel = col_buf;
      if (saved_cols) {
        panel = saved_cols + n0 * g.patch() * spatial;
      } else {
        for (std::size_t b = 0; b < nb; ++b) im2col(g, in + (n0 + b) * in_stride, col_buf + b * spatial, ld);
      }
      MapMat<T> gw(grad_weight, g.out_channels, g.patch());
      gw.noalias() += go * ConstMapMat<T>(panel, g.patch(), ld).transpose();
    }
    if (grad_in) {
      cols.noalias() = w.transpose() * go;
      for (std::size_t b = 0; b < nb; ++b) {
        col2im_add(g, col_buf + b * spatial, ld, grad_in + (n0 + b) * in_stride);
      }
    }
  }
}

template <typename T>
void channel_affine(std::size_t batch, std::size_t channels, std::size_t plane, const T* x,
                    const T* scale, const T* shift, T* y) {
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t base = (n * channels + c) * plane;
      const T s = scale[c], b = shift[c];
      for (std::size_t i = 0; i < plane; ++i) y[base + i] = x[base + i] * s + b;
    }
  }
}

template void conv2d_forward(const ConvGeometry&, const float*, const float*, float*, float*);
template void conv2d_forward(const ConvGeometry&, const double*, const double*, double*, double*);
template void conv2d_backward(const ConvGeometry&, const float*, const float*, const float*, const float*, float*,
                              float*);
template void conv2d_backward(const ConvGeometry&, const double*, const double*, const double*, const double*,
                              double*, double*);
template void channel_affine(std::size_t, std::size_t, std::size_t, const float*, const float*,
                             const float*, float*);
template void channel_affine(std::size_t, std::size_t, std::size_t, const double*, const double*,
                             const double*, double*);

}  // namespace chgate::kernels
