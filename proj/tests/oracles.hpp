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

// Reference implementations that share no code with the library: direct
// loops and numerical quadrature.

#ifndef CHGATE_TESTS_ORACLES_HPP_
#define CHGATE_TESTS_ORACLES_HPP_

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace chgate::oracle {

/// Beta(a,b) CDF as a ratio of two tanh-sinh integrals of the unnormalized
/// density.
inline double beta_cdf(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  boost::math::quadrature::tanh_sinh<double> q(15);
  // For t past the midpoint tc = 1 - t, computed without cancellation.
  auto density = [&](double t, double tc) {
    const double right = t <= 0.5 ? 1.0 - t : tc;
    return std::pow(t, a - 1.0) * std::pow(right, b - 1.0);
  };
  const double tol = 1e-14;
  const double total = q.integrate(density, 0.0, 1.0, tol);
  // Integrate over the shorter side to keep relative accuracy in the tails.
  auto f = [&](double t) { return std::pow(t, a - 1.0) * std::pow(1.0 - t, b - 1.0); };
  if (x <= 0.5) return q.integrate(f, 0.0, x, tol) / total;
  auto g = [&](double t, double tc) {
    const double right = t <= 0.5 * (1.0 + x) ? 1.0 - t : tc;
    return std::pow(t, a - 1.0) * std::pow(right, b - 1.0);
  };
  return 1.0 - q.integrate(g, x, 1.0, tol) / total;
}

/// Direct 7-loop convolution over [N,C,H,W] with zero padding.
template <typename T>
std::vector<T> conv2d(const std::vector<T>& in, const std::vector<T>& w, std::size_t n, std::size_t c,
                      std::size_t h, std::size_t wd, std::size_t cout, std::size_t k, std::size_t stride,
                      std::size_t pad) {
  const std::size_t ho = (h + 2 * pad - k) / stride + 1;
  const std::size_t wo = (wd + 2 * pad - k) / stride + 1;
  std::vector<T> out(n * cout * ho * wo, T{0});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t o = 0; o < cout; ++o)
      for (std::size_t y = 0; y < ho; ++y)
        for (std::size_t x = 0; x < wo; ++x) {
          double acc = 0.0;
          for (std::size_t i = 0; i < c; ++i)
            for (std::size_t ky = 0; ky < k; ++ky)
              for (std::size_t kx = 0; kx < k; ++kx) {
                const long iy = static_cast<long>(y * stride + ky) - static_cast<long>(pad);
                const long ix = static_cast<long>(x * stride + kx) - static_cast<long>(pad);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(wd)) continue;
                acc += static_cast<double>(in[((b * c + i) * h + iy) * wd + ix]) *
                       static_cast<double>(w[((o * c + i) * k + ky) * k + kx]);
              }
          out[((b * cout + o) * ho + y) * wo + x] = static_cast<T>(acc);
        }
  return out;
}

/// Batch-shaping loss straight from its definition, by sorting a copy.
/// Accumulates in long double so that central differences of it resolve
/// gradients several orders below the largest one.
template <typename Cdf>
long double shaping_loss(std::vector<double> samples, Cdf cdf, double lambda) {
  std::sort(samples.begin(), samples.end());
  const long double n = static_cast<long double>(samples.size());
  long double s = 0.0L;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const long double e = (static_cast<long double>(i) + 1.0L) / (n + 1.0L) - cdf(samples[i]);
    s += e * e;
  }
  return lambda / n * s;
}

}  // namespace chgate::oracle

#endif  // CHGATE_TESTS_ORACLES_HPP_
