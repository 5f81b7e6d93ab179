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

// Central finite-difference checks of analytic gradients.

#ifndef CHGATE_GRADCHECK_HPP_
#define CHGATE_GRADCHECK_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "chgate/autograd.hpp"
#include "chgate/rng.hpp"

namespace chgate {

struct GradCheckOptions {
  double step = 1e-5;
  /// Entries checked per input; inputs at most this large are checked fully.
  std::size_t samples_per_input = 64;
  /// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
  double floor = 1e-7;
  /// When positive, entries with max(|a|, |n|) < floor are instead required
  /// to satisfy |a - n| <= absolute.
  double absolute = 0.0;
};

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t checked = 0;
  std::size_t small_entries = 0;
  std::size_t small_failures = 0;
  double max_abs_error_small = 0.0;
  bool passed() const { return max_rel_error <= tolerance && small_failures == 0; }
};

template <typename T>
using ScalarFn = std::function<Variable<T>(const std::vector<Variable<T>>&)>;

/// Compares backward() against central differences of `f` for sampled
/// entries of every input. Inputs must require gradients.
template <typename T>
GradCheckResult check_gradients(const std::string& name, const ScalarFn<T>& f, std::vector<Variable<T>> inputs,
                                double tolerance, const GradCheckOptions& options, Rng& rng);

/// The fixed suite run by `chgate gradcheck`: every differentiable op in
/// 64-bit mode, batch-shaping, L0, a gated block with a fixed mask, the gate
/// relaxation with fixed noise, and a 32-bit gated block check.
std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed);

}  // namespace chgate

#endif  // CHGATE_GRADCHECK_HPP_
