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

#include "chgate/priors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace chgate {

namespace {

constexpr int kMaxIterations = 200;
constexpr double kConvergence = 1e-12;
constexpr double kTiny = 1e-300;

// Continued fraction for I_x(a,b), modified Lentz evaluation.
double beta_continued_fraction(double x, double a, double b) {
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kConvergence) break;
  }
  return h;
}

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double clamp_unit(double x) { return std::clamp(x, kBetaClamp, 1.0 - kBetaClamp); }

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete beta needs a>0, b>0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

PriorSpec::PriorSpec(PriorKind kind, double p0, double p1) : kind_(kind), p0_(p0), p1_(p1) {
  if (kind_ == PriorKind::kBeta) log_beta_ = log_beta(p0_, p1_);
}

PriorSpec PriorSpec::beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw std::invalid_argument("Beta prior needs positive finite shapes, got a=" + std::to_string(a) +
                                " b=" + std::to_string(b));
  }
  return PriorSpec(PriorKind::kBeta, a, b);
}

PriorSpec PriorSpec::gaussian(double mean, double stddev) {
  if (!(stddev > 0.0) || !std::isfinite(mean) || !std::isfinite(stddev)) {
    throw std::invalid_argument("Gaussian prior needs a positive stddev, got " + std::to_string(stddev));
  }
  return PriorSpec(PriorKind::kGaussian, mean, stddev);
}

PriorSpec PriorSpec::uniform(double lo, double hi) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("Uniform prior needs lo < hi, got [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "]");
  }
  return PriorSpec(PriorKind::kUniform, lo, hi);
}

PriorSpec PriorSpec::from_params(const std::string& kind, const std::vector<double>& params) {
  if (params.size() != 2) {
    throw std::invalid_argument("prior '" + kind + "' needs exactly 2 parameters, got " +
                                std::to_string(params.size()));
  }
  if (kind == "beta") return beta(params[0], params[1]);
  if (kind == "gaussian") return gaussian(params[0], params[1]);
  if (kind == "uniform") return uniform(params[0], params[1]);
  throw std::invalid_argument("unknown prior kind '" + kind + "' (expected beta, gaussian, uniform)");
}

std::string PriorSpec::kind_name() const {
  switch (kind_) {
    case PriorKind::kBeta:
      return "beta";
    case PriorKind::kGaussian:
      return "gaussian";
    case PriorKind::kUniform:
      return "uniform";
  }
  return "unknown";
}

PriorSpec default_gate_prior() { return PriorSpec::beta(0.6, 0.4); }

double PriorSpec::cdf(double x) const {
  switch (kind_) {
    case PriorKind::kBeta:
      // Exact at the support boundary; interior points clamped.
      if (x <= 0.0) return 0.0;
      if (x >= 1.0) return 1.0;
      return regularized_incomplete_beta(clamp_unit(x), p0_, p1_);
    case PriorKind::kGaussian:
      return 0.5 * std::erfc(-(x - p0_) / (p1_ * std::numbers::sqrt2));
    case PriorKind::kUniform:
      return std::clamp((x - p0_) / (p1_ - p0_), 0.0, 1.0);
  }
  return 0.0;
}

double PriorSpec::pdf(double x) const {
  switch (kind_) {
    case PriorKind::kBeta: {
      const double u = clamp_unit(x);
      return std::exp((p0_ - 1.0) * std::log(u) + (p1_ - 1.0) * std::log1p(-u) - log_beta_);
    }
    case PriorKind::kGaussian: {
      const double z = (x - p0_) / p1_;
      return std::exp(-0.5 * z * z) / (p1_ * std::sqrt(2.0 * std::numbers::pi));
    }
    case PriorKind::kUniform:
      return (x < p0_ || x > p1_) ? 0.0 : 1.0 / (p1_ - p0_);
  }
  return 0.0;
}

double PriorSpec::mean() const {
  switch (kind_) {
    case PriorKind::kBeta:
      return p0_ / (p0_ + p1_);
    case PriorKind::kGaussian:
      return p0_;
    case PriorKind::kUniform:
      return 0.5 * (p0_ + p1_);
  }
  return 0.0;
}

double PriorSpec::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("quantile needs u in (0,1)");
  if (kind_ == PriorKind::kUniform) return p0_ + u * (p1_ - p0_);
  double lo, hi;
  if (kind_ == PriorKind::kBeta) {
    lo = 0.0;
    hi = 1.0;
  } else {
    lo = p0_ - 40.0 * p1_;
    hi = p0_ + 40.0 * p1_;
  }
  // Safeguarded Newton: fall back to bisection whenever a step leaves the bracket.
  double x = kind_ == PriorKind::kBeta ? std::clamp(u, 1e-3, 1.0 - 1e-3) : p0_;
  for (int it = 0; it < 200; ++it) {
    const double f = cdf(x) - u;
    if (f > 0.0) hi = x; else lo = x;
    if (hi - lo < 1e-15 * std::max(1.0, std::fabs(x))) break;
    const double dens = pdf(x);
    double next = dens > 0.0 ? x - f / dens : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - x) < 1e-15 * std::max(1.0, std::fabs(x))) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

}  // namespace chgate
