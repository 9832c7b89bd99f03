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

// Brute-force query testing. The test draws n iid queries uniform on
// (0, delta]^p and rejects when any returned value is positive, or otherwise
// with probability tau. Against the alternate family (L-Lipschitz models that
// reach epsilon somewhere in the box) its rates are
//
//   spec = 1 - tau
//   sens = 1 - (1 - tau) (1 - (2 epsilon / (L delta))^p)^n.

#ifndef ATTRIB_QUERYTEST_HPP_
#define ATTRIB_QUERYTEST_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "attrib/parallel.hpp"
#include "attrib/rng.hpp"

namespace attrib {

struct QueryPlan {
  double delta = 1.0;
  int p = 1;
  std::int64_t n = 1;
  double tau = 0.0;
  double epsilon = 0.25;
  double lipschitz = 1.0;
  std::uint64_t rng_seed = 0;

  // Throws InvalidArgument unless delta, epsilon, L > 0, p >= 1, n >= 0,
  // tau in [0, 1] and 2 epsilon <= L delta.
  void Validate() const;
  // Number of cells of side 2 epsilon / L per axis, floor(L delta / (2 epsilon)).
  std::int64_t CellsPerAxis() const;
  // Probability that one query lands in a fixed cell, (2 epsilon / (L delta))^p.
  double HitProbability() const;
};

// p = 10, L = 1, delta = 0.05, epsilon = 0.01, n = 21960, tau = 0.
QueryPlan QueryBudgetPreset();

using QueryModel = std::function<double(std::span<const double>)>;

// Pyramid bump epsilon * max(0, 1 - (L / epsilon) ||x - c||_inf). It is
// positive exactly on the open cube of side 2 epsilon / L around c, peaks at
// epsilon, and is L-Lipschitz in the sup norm (2L-Lipschitz bound kept for
// the worst-case argument).
struct BumpModel {
  std::vector<double> center;
  double epsilon = 0.0;
  double lipschitz = 1.0;

  double operator()(std::span<const double> x) const;

  // Bump centred in cell `index` of the r^p grid, cells enumerated with the
  // first coordinate fastest.
  static BumpModel InCell(const QueryPlan& plan, std::int64_t index);
  // The hardest alternate: centred at epsilon / L in every coordinate, so its
  // positive region has side exactly 2 epsilon / L and lies inside the box.
  static BumpModel Hardest(const QueryPlan& plan);
};

// One run of the test with the given generator. Returns 1 to reject.
int RunQueryTest(const QueryPlan& plan, const QueryModel& model, Rng& rng);
// Seeds the generator from plan.rng_seed.
int RunQueryTest(const QueryPlan& plan, const QueryModel& model);

struct Rates {
  double spec = 0.0;
  double sens = 0.0;
};

Rates TheoreticalRates(const QueryPlan& plan);

struct EmpiricalResult {
  Rates theory;
  Rates empirical;
  double spec_se = 0.0;  // binomial SE at the theoretical value
  double sens_se = 0.0;
  std::int64_t trials = 0;

  // Both rates within `k` standard errors (exact equality when SE is 0).
  bool Within(double k = 4.0) const;
};

// spec from the zero model, sens from BumpModel::Hardest. Trial t of each
// uses its own stream derived from (plan.rng_seed, model, t).
EmpiricalResult EmpiricalRates(const QueryPlan& plan, std::int64_t trials,
                               Exec exec = Exec::kParallel);

struct AdversaryResult {
  double detection = 0.0;
  double bound = 0.0;  // n / r^p
  double standard_error = 0.0;
  std::int64_t cells_per_axis = 0;
  bool passed = false;
};

// Bump in cell 0; uniform queries make every cell equally likely, so this is
// a least-likely cell. Throws InvalidArgument when r < 2.
AdversaryResult AdversaryBoundCheck(const QueryPlan& plan, std::int64_t trials,
                                    Exec exec = Exec::kParallel);

std::string QueryCsvHeader();
std::string QueryCsvRow(const QueryPlan& plan, const Rates& theory,
                        const EmpiricalResult* empirical);

}  // namespace attrib

#endif  // ATTRIB_QUERYTEST_HPP_
