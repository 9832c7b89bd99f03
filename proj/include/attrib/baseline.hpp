/*
 * Copyright 2026 The attrib-audit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Baseline distributions over examples with exact per-feature marginal
// masses and truncated moments.

#ifndef ATTRIB_BASELINE_HPP_
#define ATTRIB_BASELINE_HPP_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <variant>
#include <vector>

#include "attrib/model.hpp"

namespace attrib {

// 1-D interval with independently open or closed endpoints. Infinite
// endpoints are allowed.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_closed = false;
  bool hi_closed = false;

  static Interval Open(double lo, double hi) { return {lo, hi, false, false}; }
  static Interval Closed(double lo, double hi) { return {lo, hi, true, true}; }
  static Interval ClosedOpen(double lo, double hi) { return {lo, hi, true, false}; }
  static Interval OpenClosed(double lo, double hi) { return {lo, hi, false, true}; }
  static Interval Whole() { return {}; }

  bool Contains(double t) const {
    return (lo_closed ? t >= lo : t > lo) && (hi_closed ? t <= hi : t < hi);
  }
  bool Empty() const {
    return lo > hi || (lo == hi && !(lo_closed && hi_closed));
  }
};

struct Pointmass {
  std::vector<double> point;
};
struct Empirical {
  std::vector<std::vector<double>> samples;
};
struct UniformBox {
  std::vector<double> lo;
  std::vector<double> hi;
};
struct GaussianIso {
  std::vector<double> center;
  double sigma = 1.0;
};

class Baseline {
 public:
  using Variant = std::variant<Pointmass, Empirical, UniformBox, GaussianIso>;

  Baseline(Variant v);  // NOLINT: validates the variant's invariants

  std::size_t dim() const;
  const Variant& variant() const { return variant_; }
  std::string_view kind() const;

  // Pointmass and Empirical baselines have finite support; the remaining
  // variants are continuous.
  bool is_discrete() const;
  // Support points of a discrete baseline (each with weight 1/size).
  std::span<const std::vector<double>> support() const;

  // Deterministic in (seed, count).
  std::vector<std::vector<double>> Sample(std::uint64_t seed,
                                          std::size_t count) const;

  // 1-D marginal of feature j.
  Baseline Marginal(std::size_t j) const;
  double Mean(std::size_t j) const;

  // mu_j(interval).
  double IntervalMass(std::size_t j, const Interval& iv) const;
  // E[X_j * 1{X_j in interval}].
  double TruncatedFirstMoment(std::size_t j, const Interval& iv) const;
  // E[X_j^order].
  double RawMoment(std::size_t j, int order) const;

 private:
  void CheckFeature(std::size_t j) const;

  Variant variant_;
  // Pointmass stored as a single-sample support so support() has one shape.
  std::vector<std::vector<double>> point_support_;
};

double NormalCdf(double z);
double NormalPdf(double z);

struct BaselineSupportCheck {
  bool holds = false;
  // Witness interval (xL, xR): the feature's domain extent.
  double witness_lo = 0.0;
  double witness_hi = 0.0;
  // mu_j((xL, xR) \ [x_j - delta, x_j + delta]).
  double outside_mass = 0.0;
};

// Checks the baseline-support hypothesis of the counterexample construction
// for feature j of x with radius delta, using the domain extent of feature j
// as the witness interval. Throws InvalidArgument when the baseline places
// mass outside the domain.
BaselineSupportCheck CheckBaselineSupport(const Baseline& b, std::span<const double> x,
                                  std::size_t j, double delta,
                                  const Range& domain);

}  // namespace attrib

#endif  // ATTRIB_BASELINE_HPP_
