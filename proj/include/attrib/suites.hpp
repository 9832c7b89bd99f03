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

// Randomized invariant batteries behind `attrib-audit verify`, plus the
// random case generators they share with the tests.

#ifndef ATTRIB_SUITES_HPP_
#define ATTRIB_SUITES_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "attrib/baseline.hpp"
#include "attrib/forge.hpp"
#include "attrib/model.hpp"
#include "attrib/parallel.hpp"
#include "attrib/rng.hpp"

namespace attrib {

struct SuiteOptions {
  std::uint64_t seed = 0;
  Exec exec = Exec::kParallel;
  int completeness_cases = 200;
  int linearity_cases = 100;
  int forge_cases = 60;
  int roc_cases = 40;
  int ig_steps = 200;
  double exact_tol = 1e-9;
  double ig_tol = 1e-4;
  std::int64_t sign_samples = 1000000;
  std::int64_t query_trials = 20000;
};

struct SuiteReport {
  std::string name;
  bool passed = false;
  int cases = 0;
  int failures = 0;
  std::string detail;
  double seconds = 0.0;
};

SuiteReport RunCompletenessSuite(const SuiteOptions& opt);
SuiteReport RunLinearitySuite(const SuiteOptions& opt);
SuiteReport RunForgeSuite(const SuiteOptions& opt);
SuiteReport RunRocSuite(const SuiteOptions& opt);
SuiteReport RunQuerySuite(const SuiteOptions& opt);
SuiteReport RunSignDisagreementSuite(const SuiteOptions& opt);

// completeness | linearity | forge | roc | query | prop4 | all. Throws
// InvalidArgument for any other name.
std::vector<SuiteReport> RunSuites(std::string_view name, const SuiteOptions& opt);

// Random case generators.
std::vector<double> RandomPoint(Rng& rng, std::size_t p, double lo, double hi);
PiecewiseLinear1D RandomPwl(Rng& rng, double lo, double hi, int max_breakpoints = 4);
// Degree <= 3 with coefficients small enough that 200-step midpoint
// quadrature stays well below 1e-4 on [-1, 1].
Polynomial1D RandomSmoothPoly(Rng& rng);
// Mix of piecewise-linear and polynomial components, or polynomial only.
Model RandomAdditiveModel(Rng& rng, std::size_t p, bool smooth_only);
Model RandomMlp(Rng& rng, std::size_t p, std::size_t hidden, std::size_t q);
Baseline RandomEmpirical(Rng& rng, std::size_t p, std::size_t count, double lo = -1.0,
                         double hi = 1.0);

// The recourse (g0 = -(t - x_j), g1 = t - x_j) and spurious (g0 = 0,
// g1 = epsilon (t - x_j) / delta) behaviour pairs.
std::pair<LocalBehaviour, LocalBehaviour> RecourseBehaviours(std::vector<double> x,
                                                             std::size_t j, double delta);
std::pair<LocalBehaviour, LocalBehaviour> SpuriousBehaviours(std::vector<double> x,
                                                             std::size_t j, double delta,
                                                             double epsilon, bool ramp);

}  // namespace attrib

#endif  // ATTRIB_SUITES_HPP_
