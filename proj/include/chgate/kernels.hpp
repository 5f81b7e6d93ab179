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

// Graph-free compute kernels over raw NCHW buffers.

#ifndef CHGATE_KERNELS_HPP_
#define CHGATE_KERNELS_HPP_

#include <cstddef>
#include <vector>

namespace chgate::kernels {

struct ConvGeometry {
  std::size_t batch = 1;
  std::size_t in_channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_height() const { return (height + 2 * padding - kernel) / stride + 1; }
  std::size_t out_width() const { return (width + 2 * padding - kernel) / stride + 1; }
  std::size_t patch() const { return in_channels * kernel * kernel; }
  bool is_pointwise() const { return kernel == 1 && stride == 1 && padding == 0; }
};

/// out[N,Cout,Ho,Wo] = weight[Cout,Cin,k,k] * in[N,Cin,H,W], one GEMM per
/// group of samples. A non-null `saved_cols` (conv_cols_size elements)
/// keeps the unfolded input for conv2d_backward.
template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* in, const T* weight, T* out, T* saved_cols = nullptr);

inline std::size_t conv_cols_size(const ConvGeometry& g) {
  return g.batch * g.patch() * g.out_height() * g.out_width();
}

/// Accumulates into grad_in / grad_weight; either may be null. `saved_cols`
/// may be null, in which case the input is unfolded again.
template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* in, const T* weight, const T* grad_out,
                     const T* saved_cols, T* grad_in, T* grad_weight);

/// y = x * scale[c] + shift[c] over an [N,C,plane] buffer.
template <typename T>
void channel_affine(std::size_t batch, std::size_t channels, std::size_t plane, const T* x,
                    const T* scale, const T* shift, T* y);

}  // namespace chgate::kernels

#endif  // CHGATE_KERNELS_HPP_
