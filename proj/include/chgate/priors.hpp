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

#ifndef CHGATE_PRIORS_HPP_
#define CHGATE_PRIORS_HPP_

#include <string>
#include <vector>

namespace chgate {

enum class PriorKind { kBeta, kGaussian, kUniform };

/// Beta inputs are clamped into [kBetaClamp, 1 - kBetaClamp] so densities
/// stay finite at the endpoints.
inline constexpr double kBetaClamp = 1e-6;

/// Target distribution for batch-shaping. All evaluation is in double
/// precision; instances are immutable after construction.
class PriorSpec {
 public:
  static PriorSpec beta(double a, double b);
  static PriorSpec gaussian(double mean, double stddev);
  static PriorSpec uniform(double lo, double hi);
  /// Builds from a config-style kind name ("beta", "gaussian", "uniform")
  /// and its parameter list.
  static PriorSpec from_params(const std::string& kind, const std::vector<double>& params);

  PriorKind kind() const { return kind_; }
  std::string kind_name() const;
  std::vector<double> params() const { return {p0_, p1_}; }

  double cdf(double x) const;
  double pdf(double x) const;
  /// Inverse CDF for u in (0,1).
  double quantile(double u) const;
  double mean() const;

 private:
  PriorSpec(PriorKind kind, double p0, double p1);

  PriorKind kind_;
  double p0_;
  double p1_;
  double log_beta_ = 0.0;  // ln B(a,b), Beta only
};

/// The gate prior used throughout training: Beta(0.6, 0.4).
PriorSpec default_gate_prior();

/// Regularized incomplete beta I_x(a,b) via a modified-Lentz continued
/// fraction, switching to 1 - I_{1-x}(b,a) for x > (a+1)/(a+b+2).
double regularized_incomplete_beta(double x, double a, double b);

}  // namespace chgate

#endif  // CHGATE_PRIORS_HPP_
