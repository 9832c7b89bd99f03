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

// Counterexample forge: models with a prescribed local behaviour around an
// example and a prescribed attribution under every complete and linear
// method.
//
// For feature j the forged component equals g on N = [x_j - delta, x_j + delta]
// and is affine on each side of N up to the edges (xL, xR) of the feature
// domain:
//
//   fL(t) = beta_L (t - (x_j - delta)) + g(x_j - delta)   on [xL, x_j - delta)
//   fR(t) = beta_R (t - (x_j + delta)) + g(x_j + delta)   on (x_j + delta, xR]
//
// and 0 beyond a ramp of width ~1e-9 outside the domain. Completeness gives
// phi = g(x_j) - E f(X_j), which is affine in (beta_L, beta_R):
//
//   beta_L cL + beta_R cR = g(x_j) - phi - g(x_j-delta) mL - g(x_j+delta) mR
//                           - E[g(X_j) 1{X_j in N}]
//
// with mL, mR the baseline masses of the two outer pieces and
// cL = E[X_j 1{left}] - (x_j - delta) mL, cR = E[X_j 1{right}] - (x_j + delta) mR.
// Only the side with the larger |c| is used (ties go left); the other slope
// is zero.

#ifndef ATTRIB_FORGE_HPP_
#define ATTRIB_FORGE_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "attrib/baseline.hpp"
#include "attrib/model.hpp"
#include "attrib/parallel.hpp"

namespace attrib {

struct LocalBehaviour {
  PiecewiseLinear1D g;
  std::vector<double> x;
  std::size_t feature = 0;
  double delta = 0.0;

  double lo() const { return x[feature] - delta; }
  double hi() const { return x[feature] + delta; }
  // Throws InvalidArgument on an invalid feature index or delta, and
  // DegenerateBehaviour when g is not finite at x_j or at either endpoint.
  void Validate() const;
};

struct ForgedModel {
  Model model;
  StitchedComponent component;
  std::size_t feature = 0;
  double beta_left = 0.0;
  double beta_right = 0.0;
  double witness_lo = 0.0;
  double witness_hi = 0.0;
  double target_phi = 0.0;
  double delta = 0.0;
};

// `domain` is the extent of feature j, used as the witness interval.
// Throws AssumptionViolated when the baseline has no mass outside the
// neighbourhood within the domain.
ForgedModel ForgeCounterexample(const LocalBehaviour& behaviour,
                                const Baseline& baseline, const Range& domain,
                                double target_phi);

// Two forged models sharing (x, feature, delta) and attribution shared_phi
// with local behaviours b0.g and b1.g respectively.
std::pair<ForgedModel, ForgedModel> ForgePair(const LocalBehaviour& b0,
                                              const LocalBehaviour& b1,
                                              const Baseline& baseline,
                                              const Range& domain,
                                              double shared_phi);

// E[g(X_j) 1{X_j in [lo, hi]}] for a piecewise-linear g, from exact interval
// masses and truncated first moments.
double TruncatedExpectation(const PiecewiseLinear1D& g, const Baseline& baseline,
                            std::size_t j, double lo, double hi);

struct RandomPolynomialEstimate {
  double estimate = 0.0;        // fraction of sign disagreements
  double standard_error = 0.0;  // binomial standard error of the estimate
  double closed_form = 0.0;     // Gaussian probability of the disagreement set
  std::int64_t disagreements = 0;
  std::int64_t samples = 0;
};

// Draws a ~ N(0, 1) and compares the sign of the complete-and-linear
// attribution of f(t) = a t^n - t at t = 1,
//   a (1 - E X^n) - (1 - E X),
// against the sign of f'(1) = n a - 1. Requires E X^n in (1/2, 1); throws
// AssumptionViolated otherwise.
RandomPolynomialEstimate RandomPolynomialMc(int degree, const Baseline& baseline,
                                            std::int64_t mc_samples,
                                            std::uint64_t seed,
                                            Exec exec = Exec::kParallel);

}  // namespace attrib

#endif  // ATTRIB_FORGE_HPP_
