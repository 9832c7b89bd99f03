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

#include <cmath>

#include "doctest.h"

#include "attrib/error.hpp"
#include "attrib/querytest.hpp"
#include "oracles/oracles.hpp"

using namespace attrib;

namespace {

QueryPlan Plan(int p, std::int64_t n, double tau, double eps, double L = 1.0,
               double delta = 1.0) {
  QueryPlan q;
  q.p = p;
  q.n = n;
  q.tau = tau;
  q.epsilon = eps;
  q.lipschitz = L;
  q.delta = delta;
  return q;
}

double RejectRate(const QueryPlan& plan, const QueryModel& m, int trials) {
  Rng rng = MakeRng(plan.rng_seed, 42);
  int hits = 0;
  for (int t = 0; t < trials; ++t) hits += RunQueryTest(plan, m, rng);
  return static_cast<double>(hits) / trials;
}

}  // namespace

TEST_CASE("query test on constant models") {
  const QueryModel zero = [](std::span<const double>) { return 0.0; };
  const QueryModel one = [](std::span<const double>) { return 1.0; };
  CHECK(RejectRate(Plan(2, 5, 0.0, 0.25), zero, 1000) == 0.0);
  for (double tau : {0.0, 0.4, 1.0}) CHECK(RejectRate(Plan(2, 5, tau, 0.25), one, 1000) == 1.0);
  CHECK(std::abs(RejectRate(Plan(1, 3, 0.3, 0.25), zero, 100000) - 0.3) < 0.005);
  const QueryPlan plan = Plan(1, 1, 0.0, 0.25);
  CHECK(RunQueryTest(plan, one) == 1);
  CHECK(RunQueryTest(plan, zero) == RunQueryTest(plan, zero));
}

TEST_CASE("queries stay inside the box") {
  QueryPlan plan = Plan(3, 50, 0.0, 0.01, 1.0, 0.5);
  bool inside = true;
  const QueryModel probe = [&](std::span<const double> x) {
    for (double v : x) inside = inside && v > 0.0 && v <= 0.5;
    return 0.0;
  };
  RejectRate(plan, probe, 100);
  CHECK(inside);
}

TEST_CASE("theoretical rates") {
  const Rates r = TheoreticalRates(Plan(1, 1, 0.0, 0.25));
  CHECK(r.sens == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.spec == 1.0);
  const Rates preset = TheoreticalRates(QueryBudgetPreset());
  CHECK(preset.sens >= 0.9);
  CHECK(preset.sens == doctest::Approx(oracle::QuerySensitivity(0.0, 0.01, 1.0, 0.05, 10, 21960))
                         .epsilon(1e-9));
  for (int i = 0; i <= 20; ++i) {
    const double tau = i / 20.0;
    CHECK(TheoreticalRates(Plan(2, 7, tau, 0.1)).spec == 1.0 - tau);
  }
}

TEST_CASE("sensitivity is monotone in the plan parameters") {
  double prev = -1.0;
  for (std::int64_t n : {0, 1, 2, 5, 10, 100, 1000, 100000}) {
    const double s = TheoreticalRates(Plan(2, n, 0.1, 0.05)).sens;
    CHECK(s >= prev);
    prev = s;
  }
  CHECK(prev == doctest::Approx(1.0));
  prev = -1.0;
  for (double eps : {0.01, 0.02, 0.1, 0.3, 0.5}) {
    const double s = TheoreticalRates(Plan(3, 20, 0.0, eps)).sens;
    CHECK(s >= prev);
    prev = s;
  }
  prev = 2.0;
  for (double L : {1.0, 1.5, 3.0, 10.0}) {
    const double s = TheoreticalRates(Plan(2, 20, 0.0, 0.1, L)).sens;
    CHECK(s <= prev);
    prev = s;
  }
  prev = 2.0;
  for (double delta : {0.5, 1.0, 2.0, 4.0}) {
    const double s = TheoreticalRates(Plan(2, 20, 0.0, 0.1, 1.0, delta)).sens;
    CHECK(s <= prev);
    prev = s;
  }
  for (int p = 1; p <= 4; ++p) {
    for (std::int64_t n : {1, 10, 300}) {
      for (double tau : {0.0, 0.25}) {
        CHECK(TheoreticalRates(Plan(p, n, tau, 0.15)).sens ==
              doctest::Approx(oracle::QuerySensitivity(tau, 0.15, 1.0, 1.0, p, n)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("empirical rates track the closed form") {
  const auto r = EmpiricalRates(Plan(1, 1, 0.0, 0.25), 100000);
  CHECK(std::abs(r.empirical.sens - 0.5) <= 0.006);
  CHECK(r.Within());
  const auto all = EmpiricalRates(Plan(2, 3, 1.0, 0.1), 2000);
  CHECK(all.empirical.spec == 0.0);
  CHECK(all.empirical.sens == 1.0);
  const auto preset = EmpiricalRates(QueryBudgetPreset(), 1000);
  CHECK(preset.empirical.sens >= 0.88);

  int within = 0;
  for (int c = 0; c < 20; ++c) {
    QueryPlan plan = Plan(1 + c % 3, 1 + 4 * c, 0.05 * (c % 4), 0.05 + 0.02 * (c % 5));
    plan.rng_seed = static_cast<std::uint64_t>(c);
    const auto e = EmpiricalRates(plan, 4000);
    within += e.Within(4.0);
    CHECK(std::abs(e.empirical.sens - e.theory.sens) <=
          4 * std::sqrt(e.theory.sens * (1 - e.theory.sens) / 4000) + 1e-12);
  }
  CHECK(within == 20);
}

TEST_CASE("serial and parallel trials agree") {
  QueryPlan plan = Plan(2, 40, 0.2, 0.05);
  plan.rng_seed = 9;
  const auto a = EmpiricalRates(plan, 3000, Exec::kSerial);
  const auto b = EmpiricalRates(plan, 3000, Exec::kParallel);
  CHECK(a.empirical.spec == b.empirical.spec);
  CHECK(a.empirical.sens == b.empirical.sens);
}

TEST_CASE("pyramid bump") {
  const QueryPlan plan = Plan(2, 1, 0.0, 0.1);
  const BumpModel h = BumpModel::Hardest(plan);
  CHECK(h.center == std::vector<double>{0.1, 0.1});
  CHECK(h(std::vector<double>{0.1, 0.1}) == doctest::Approx(0.1));
  CHECK(h(std::vector<double>{0.2, 0.1}) == 0.0);
  CHECK(h(std::vector<double>{0.15, 0.1}) == doctest::Approx(0.05));
  CHECK(h(std::vector<double>{0.9, 0.9}) == 0.0);
  const BumpModel c = BumpModel::InCell(plan, 6);
  CHECK(c.center[0] == doctest::Approx(0.3));
  CHECK(c.center[1] == doctest::Approx(0.3));
  CHECK(plan.CellsPerAxis() == 5);
  CHECK(plan.HitProbability() == doctest::Approx(0.04));
  // Lipschitz in the sup norm.
  Rng rng = MakeRng(1, 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const std::vector<double> a{u(rng), u(rng)}, b{u(rng), u(rng)};
    const double d = std::max(std::abs(a[0] - b[0]), std::abs(a[1] - b[1]));
    CHECK(std::abs(h(a) - h(b)) <= plan.lipschitz * d + 1e-15);
  }
}

TEST_CASE("adversarial cell detection respects the union bound") {
  const auto r = AdversaryBoundCheck(Plan(2, 3, 0.0, 0.1), 100000);
  CHECK(r.cells_per_axis == 5);
  CHECK(r.bound == doctest::Approx(3.0 / 25.0));
  CHECK(r.detection <= 3.0 / 25.0 + 4 * r.standard_error);
  CHECK(r.passed);
  const auto none = AdversaryBoundCheck(Plan(2, 0, 0.0, 0.1), 1000);
  CHECK(none.detection == 0.0);
  CHECK(none.passed);
  CHECK_THROWS_AS(AdversaryBoundCheck(Plan(1, 3, 0.0, 0.3), 100), InvalidArgument);
}

TEST_CASE("plan validation") {
  CHECK_THROWS_AS(Plan(1, 1, 0.0, 0.6).Validate(), InvalidArgument);
  CHECK_THROWS_AS(Plan(0, 1, 0.0, 0.1).Validate(), InvalidArgument);
  CHECK_THROWS_AS(Plan(1, -1, 0.0, 0.1).Validate(), InvalidArgument);
  CHECK_THROWS_AS(Plan(1, 1, 1.5, 0.1).Validate(), InvalidArgument);
  CHECK_THROWS_AS(Plan(1, 1, 0.0, 0.1, 0.0).Validate(), InvalidArgument);
  CHECK_NOTHROW(Plan(1, 1, 0.0, 0.5).Validate());
}

TEST_CASE("csv row") {
  const QueryPlan plan = Plan(1, 1, 0.0, 0.25);
  const std::string header = QueryCsvHeader();
  CHECK(header.rfind("p,n,tau,epsilon", 0) == 0);
  const std::string row = QueryCsvRow(plan, TheoreticalRates(plan), nullptr);
  CHECK(std::count(row.begin(), row.end(), ',') == std::count(header.begin(), header.end(), ','));
}
