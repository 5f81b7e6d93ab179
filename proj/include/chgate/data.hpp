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

#ifndef CHGATE_DATA_HPP_
#define CHGATE_DATA_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chgate/rng.hpp"
#include "chgate/tensor.hpp"

namespace chgate {

/// Images stored contiguously as [count, channels, height, width].
struct Dataset {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t classes = 0;
  std::vector<float> pixels;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t image_size() const { return channels * height * width; }
  std::span<const float> image(std::size_t i) const {
    return std::span<const float>(pixels).subspan(i * image_size(), image_size());
  }
  /// Single image as [1,C,H,W].
  Tensor<float> example(std::size_t i) const;
  /// Gathers `indices` into [n,C,H,W].
  Tensor<float> gather(std::span<const std::size_t> indices) const;
  /// First `n` examples (or all if fewer).
  Dataset head(std::size_t n) const;
  void normalize(std::span<const double> mean, std::span<const double> stddev);
  /// Per-channel mean and population standard deviation.
  std::pair<std::vector<double>, std::vector<double>> channel_stats() const;
  std::vector<std::size_t> class_histogram() const;
};

inline constexpr std::size_t kCifarRecordBytes = 1 + 3 * 32 * 32;
inline constexpr std::array<double, 3> kCifarMean{0.4914, 0.4822, 0.4465};
inline constexpr std::array<double, 3> kCifarStd{0.2470, 0.2435, 0.2616};

/// Parses CIFAR-10 binary records (label byte, then R, G, B 32x32 planes),
/// scaled to [0,1] but not normalized. Truncated input and labels above 9
/// are rejected with the byte offset.
Dataset parse_cifar10(const std::vector<unsigned char>& bytes, const std::string& source,
                      std::size_t limit = SIZE_MAX);
/// Loads data_batch_1..5 (train) or test_batch from `dir`, keeps the first
/// `limit` records, and normalizes with the standard channel statistics.
Dataset load_cifar10(const std::string& dir, bool train, std::size_t limit = SIZE_MAX);

/// Class-conditional toy images: every class stamps its own 5x5 stroke
/// pattern at a random position over noise. Classes [0, k/2) use line
/// strokes in one colour, the rest use block strokes in another, so the two
/// groups need disjoint features.
Dataset synthetic_conditional_dataset(std::uint64_t seed, std::size_t count, std::size_t classes,
                                      std::size_t size = 16);

struct Augmentation {
  std::size_t pad = 0;  // random crop after zero padding by this many pixels
  bool flip = false;    // random horizontal flip
};

/// Applies crop and flip in place to a [n,C,H,W] batch.
void augment(Tensor<float>& batch, const Augmentation& aug, Rng& rng);
/// Mirrors every image of a [n,C,H,W] batch left to right.
void flip_horizontal(Tensor<float>& batch);

/// Seed-deterministic permutation of [0, n).
std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng);

}  // namespace chgate

#endif  // CHGATE_DATA_HPP_
