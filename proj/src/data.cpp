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

#include "chgate/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <stdexcept>

#include "chgate/byteio.hpp"

namespace chgate {

Tensor<float> Dataset::example(std::size_t i) const {
  auto img = image(i);
  return Tensor<float>(Shape{1, channels, height, width}, std::vector<float>(img.begin(), img.end()));
}

Tensor<float> Dataset::gather(std::span<const std::size_t> indices) const {
  std::vector<float> out;
  out.reserve(indices.size() * image_size());
  for (std::size_t i : indices) {
    auto img = image(i);
    out.insert(out.end(), img.begin(), img.end());
  }
  return Tensor<float>(Shape{indices.size(), channels, height, width}, std::move(out));
}

Dataset Dataset::head(std::size_t n) const {
  Dataset d = *this;
  n = std::min(n, size());
  d.labels.resize(n);
  d.pixels.resize(n * image_size());
  return d;
}

void Dataset::normalize(std::span<const double> mean, std::span<const double> stddev) {
  if (mean.size() != channels || stddev.size() != channels) {
    throw std::invalid_argument("normalize: need one mean and stddev per channel");
  }
  const std::size_t plane = height * width;
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t c = 0; c < channels; ++c) {
      float* p = pixels.data() + (i * channels + c) * plane;
      const float m = static_cast<float>(mean[c]), s = static_cast<float>(stddev[c]);
      for (std::size_t k = 0; k < plane; ++k) p[k] = (p[k] - m) / s;
    }
}

std::pair<std::vector<double>, std::vector<double>> Dataset::channel_stats() const {
  const std::size_t plane = height * width;
  std::vector<double> mean(channels, 0.0), sq(channels, 0.0);
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t c = 0; c < channels; ++c) {
      const float* p = pixels.data() + (i * channels + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        mean[c] += p[k];
        sq[c] += static_cast<double>(p[k]) * p[k];
      }
    }
  const double n = static_cast<double>(size() * plane);
  std::vector<double> sd(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    mean[c] /= n;
    sd[c] = std::sqrt(std::max(sq[c] / n - mean[c] * mean[c], 0.0));
  }
  return {mean, sd};
}

std::vector<std::size_t> Dataset::class_histogram() const {
  std::vector<std::size_t> h(classes, 0);
  for (int l : labels) ++h.at(static_cast<std::size_t>(l));
  return h;
}

Dataset parse_cifar10(const std::vector<unsigned char>& bytes, const std::string& source, std::size_t limit) {
  if (bytes.size() % kCifarRecordBytes != 0) {
    const std::size_t whole = bytes.size() / kCifarRecordBytes;
    throw std::runtime_error(source + ": byte " + std::to_string(whole * kCifarRecordBytes) + ": truncated record " +
                             std::to_string(whole) + " (" + std::to_string(bytes.size() % kCifarRecordBytes) +
                             " of " + std::to_string(kCifarRecordBytes) + " bytes)");
  }
  const std::size_t n = std::min(bytes.size() / kCifarRecordBytes, limit);
  Dataset d;
  d.channels = 3;
  d.height = 32;
  d.width = 32;
  d.classes = 10;
  d.labels.resize(n);
  d.pixels.resize(n * d.image_size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t off = i * kCifarRecordBytes;
    if (bytes[off] > 9) {
      throw std::runtime_error(source + ": byte " + std::to_string(off) + ": label " + std::to_string(bytes[off]) +
                               " out of range [0,9]");
    }
    d.labels[i] = bytes[off];
    for (std::size_t k = 0; k < d.image_size(); ++k) {
      d.pixels[i * d.image_size() + k] = static_cast<float>(bytes[off + 1 + k]) / 255.0f;
    }
  }
  return d;
}

Dataset load_cifar10(const std::string& dir, bool train, std::size_t limit) {
  std::vector<std::string> files;
  if (train) {
    for (int b = 1; b <= 5; ++b) files.push_back("data_batch_" + std::to_string(b) + ".bin");
  } else {
    files.push_back("test_batch.bin");
  }
  Dataset all;
  for (const auto& f : files) {
    if (all.size() >= limit) break;
    const std::string path = (std::filesystem::path(dir) / f).string();
    Dataset part = parse_cifar10(read_file(path), path, limit - all.size());
    if (all.size() == 0) {
      all = std::move(part);
    } else {
      all.labels.insert(all.labels.end(), part.labels.begin(), part.labels.end());
      all.pixels.insert(all.pixels.end(), part.pixels.begin(), part.pixels.end());
    }
  }
  all.normalize(kCifarMean, kCifarStd);
  return all;
}

namespace {

using Pattern = std::array<std::array<std::uint8_t, 5>, 5>;

Pattern make_pattern(std::size_t id) {
  Pattern p{};
  auto set = [&](std::size_t r, std::size_t c) { p[r][c] = 1; };
  switch (id % 10) {
    case 0:  // horizontal bar
      for (std::size_t c = 0; c < 5; ++c) set(2, c);
      break;
    case 1:  // vertical bar
      for (std::size_t r = 0; r < 5; ++r) set(r, 2);
      break;
    case 2:  // diagonal
      for (std::size_t i = 0; i < 5; ++i) set(i, i);
      break;
    case 3:  // anti-diagonal
      for (std::size_t i = 0; i < 5; ++i) set(i, 4 - i);
      break;
    case 4:  // plus
      for (std::size_t i = 0; i < 5; ++i) {
        set(2, i);
        set(i, 2);
      }
      break;
    case 5:  // hollow square
      for (std::size_t i = 0; i < 5; ++i) {
        set(0, i);
        set(4, i);
        set(i, 0);
        set(i, 4);
      }
      break;
    case 6:  // four corner blocks
      for (std::size_t r : {0u, 1u, 3u, 4u})
        for (std::size_t c : {0u, 1u, 3u, 4u}) set(r, c);
      break;
    case 7:  // filled centre
      for (std::size_t r = 1; r < 4; ++r)
        for (std::size_t c = 1; c < 4; ++c) set(r, c);
      break;
    case 8:  // checkerboard
      for (std::size_t r = 0; r < 5; ++r)
        for (std::size_t c = 0; c < 5; ++c)
          if ((r + c) % 2 == 0) set(r, c);
      break;
    default:  // upper half block
      for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 5; ++c) set(r, c);
      break;
  }
  return p;
}

}  // namespace

Dataset synthetic_conditional_dataset(std::uint64_t seed, std::size_t count, std::size_t classes, std::size_t size) {
  if (classes < 2) throw std::invalid_argument("synthetic dataset needs at least 2 classes");
  if (size < 5) throw std::invalid_argument("synthetic images must be at least 5x5");
  Dataset d;
  d.channels = 3;
  d.height = size;
  d.width = size;
  d.classes = classes;
  d.labels.resize(count);
  d.pixels.assign(count * d.image_size(), 0.0f);
  const std::size_t group = (classes + 1) / 2;
  const float colours[2][3] = {{1.0f, 0.35f, -0.2f}, {-0.2f, 0.35f, 1.0f}};
  Rng order_rng(derive_seed(seed, {0x5e7, 0}));
  // Balanced labels in a shuffled order.
  std::vector<std::size_t> perm = shuffled_indices(count, order_rng);
  for (std::size_t i = 0; i < count; ++i) d.labels[perm[i]] = static_cast<int>(i % classes);

  const std::size_t plane = size * size;
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, {0x5e7, 1, i}));
    const auto label = static_cast<std::size_t>(d.labels[i]);
    const std::size_t g = label < group ? 0 : 1;
    // Patterns 0-4 are line strokes, 5-9 block strokes.
    const Pattern pat = make_pattern(g == 0 ? label % 5 : 5 + (label - group) % 5);
    float* img = d.pixels.data() + i * d.image_size();
    for (std::size_t k = 0; k < d.image_size(); ++k) img[k] = static_cast<float>(0.35 * rng.normal());
    const std::size_t r0 = rng.below(size - 4);
    const std::size_t c0 = rng.below(size - 4);
    const float amp = static_cast<float>(rng.uniform(0.8, 1.2));
    for (std::size_t r = 0; r < 5; ++r)
      for (std::size_t c = 0; c < 5; ++c) {
        if (!pat[r][c]) continue;
        for (std::size_t ch = 0; ch < 3; ++ch) img[ch * plane + (r0 + r) * size + (c0 + c)] += amp * colours[g][ch];
      }
  }
  return d;
}

void flip_horizontal(Tensor<float>& batch) {
  const std::size_t rows = batch.dim(0) * batch.dim(1) * batch.dim(2), w = batch.dim(3);
  float* p = batch.raw();
  for (std::size_t r = 0; r < rows; ++r) std::reverse(p + r * w, p + (r + 1) * w);
}

void augment(Tensor<float>& batch, const Augmentation& aug, Rng& rng) {
  if (aug.pad == 0 && !aug.flip) return;
  const std::size_t n = batch.dim(0), c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
  std::vector<float> tmp(c * h * w);
  for (std::size_t i = 0; i < n; ++i) {
    float* img = batch.raw() + i * c * h * w;
    const auto dy = static_cast<std::ptrdiff_t>(aug.pad ? rng.below(2 * aug.pad + 1) : 0) -
                    static_cast<std::ptrdiff_t>(aug.pad);
    const auto dx = static_cast<std::ptrdiff_t>(aug.pad ? rng.below(2 * aug.pad + 1) : 0) -
                    static_cast<std::ptrdiff_t>(aug.pad);
    const bool flip = aug.flip && rng.below(2) == 1;
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + dy;
          const std::ptrdiff_t sx0 = static_cast<std::ptrdiff_t>(flip ? w - 1 - x : x);
          const std::ptrdiff_t sx = sx0 + dx;
          const bool inside = sy >= 0 && sx >= 0 && sy < static_cast<std::ptrdiff_t>(h) &&
                              sx < static_cast<std::ptrdiff_t>(w);
          tmp[(ch * h + y) * w + x] =
              inside ? img[(ch * h + static_cast<std::size_t>(sy)) * w + static_cast<std::size_t>(sx)] : 0.0f;
        }
    std::copy(tmp.begin(), tmp.end(), img);
  }
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

}  // namespace chgate
