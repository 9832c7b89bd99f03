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

#include "attrib/querytest.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "attrib/error.hpp"

namespace attrib {

namespace {

constexpr std::uint64_t kNullStream = 0;
constexpr std::uint64_t kAltStream = 1;
constexpr std::uint64_t kAdversaryStream = 2;

double BinomialSe(double rate, std::int64_t trials) {
  return std::sqrt(std::max(0.0, rate * (1.0 - rate)) / static_cast<double>(trials));
}

// Fraction of trials that reject.
double RejectionRate(const QueryPlan& plan, const QueryModel& model,
                     std::int64_t trials, std::uint64_t stream, Exec exec) {
  std::vector<unsigned char> rejected(static_cast<std::size_t>(trials), 0);
  ForEachIndex(exec, trials, [&](std::int64_t t) {
    Rng rng(DeriveSeed(plan.rng_seed, stream, static_cast<std::uint64_t>(t)));
    rejected[static_cast<std::size_t>(t)] =
        static_cast<unsigned char>(RunQueryTest(plan, model, rng));
  });
  std::int64_t count = 0;
  for (unsigned char r : rejected) count += r;
  return static_cast<double>(count) / static_cast<double>(trials);
}

}  // namespace

void QueryPlan::Validate() const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidArgument("delta must be positive");
  if (p < 1) throw InvalidArgument("dimension p must be >= 1");
  if (n < 0) throw InvalidArgument("query budget n must be >= 0");
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidArgument("tau must lie in [0, 1]");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("epsilon must be positive");
  }
  if (!(lipschitz > 0.0) || !std::isfinite(lipschitz)) {
    throw InvalidArgument("Lipschitz constant must be positive");
  }
  if (2.0 * epsilon > lipschitz * delta) {
    throw InvalidArgument("plan requires 2 epsilon <= L delta");
  }
}

std::int64_t QueryPlan::CellsPerAxis() const {
  return static_cast<std::int64_t>(
      std::floor(lipschitz * delta / (2.0 * epsilon) * (1.0 + 1e-12)));
}

double QueryPlan::HitProbability() const {
  return std::pow(2.0 * epsilon / (lipschitz * delta), p);
}

QueryPlan QueryBudgetPreset() {
  QueryPlan plan;
  plan.p = 10;
  plan.lipschitz = 1.0;
  plan.delta = 0.05;
  plan.epsilon = 0.01;
  plan.n = 21960;
  plan.tau = 0.0;
  return plan;
}

double BumpModel::operator()(std::span<const double> x) const {
  double dist = 0.0;
  for (std::size_t i = 0; i < center.size(); ++i) {
    dist = std::max(dist, std::abs(x[i] - center[i]));
  }
  return epsilon * std::max(0.0, 1.0 - (lipschitz / epsilon) * dist);
}

BumpModel BumpModel::InCell(const QueryPlan& plan, std::int64_t index) {
  plan.Validate();
  const std::int64_t r = plan.CellsPerAxis();
  const double side = 2.0 * plan.epsilon / plan.lipschitz;
  BumpModel bump{std::vector<double>(static_cast<std::size_t>(plan.p)), plan.epsilon,
                 plan.lipschitz};
  if (index < 0) throw InvalidArgument("cell index must be non-negative");
  for (int i = 0; i < plan.p; ++i) {
    const std::int64_t coord = index % r;
    index /= r;
    bump.center[static_cast<std::size_t>(i)] = (static_cast<double>(coord) + 0.5) * side;
  }
  if (index != 0) throw InvalidArgument("cell index exceeds r^p");
  return bump;
}

BumpModel BumpModel::Hardest(const QueryPlan& plan) {
  plan.Validate();
  return BumpModel{
      std::vector<double>(static_cast<std::size_t>(plan.p), plan.epsilon / plan.lipschitz),
      plan.epsilon, plan.lipschitz};
}

int RunQueryTest(const QueryPlan& plan, const QueryModel& model, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> q(static_cast<std::size_t>(plan.p));
  for (std::int64_t t = 0; t < plan.n; ++t) {
    // 1 - u with u in [0, 1) lands in (0, 1].
    for (double& v : q) v = plan.delta * (1.0 - unif(rng));
    if (model(q) > 0.0) return 1;
  }
  return unif(rng) < plan.tau ? 1 : 0;
}

int RunQueryTest(const QueryPlan& plan, const QueryModel& model) {
  Rng rng(DeriveSeed(plan.rng_seed, kNullStream));
  return RunQueryTest(plan, model, rng);
}

Rates TheoreticalRates(const QueryPlan& plan) {
  plan.Validate();
  const double a = plan.HitProbability();
  double miss = 1.0;
  if (plan.n > 0) {
    miss = a >= 1.0 ? 0.0 : std::exp(static_cast<double>(plan.n) * std::log1p(-a));
  }
  return Rates{1.0 - plan.tau, 1.0 - (1.0 - plan.tau) * miss};
}

bool EmpiricalResult::Within(double k) const {
  auto ok = [k](double hat, double ref, double se) {
    return se == 0.0 ? hat == ref : std::abs(hat - ref) <= k * se;
  };
  return ok(empirical.spec, theory.spec, spec_se) && ok(empirical.sens, theory.sens, sens_se);
}

EmpiricalResult EmpiricalRates(const QueryPlan& plan, std::int64_t trials, Exec exec) {
  plan.Validate();
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  EmpiricalResult out;
  out.trials = trials;
  out.theory = TheoreticalRates(plan);
  const QueryModel zero = [](std::span<const double>) { return 0.0; };
  const BumpModel bump = BumpModel::Hardest(plan);
  const QueryModel alt = [&bump](std::span<const double> x) { return bump(x); };
  out.empirical.spec = 1.0 - RejectionRate(plan, zero, trials, kNullStream, exec);
  out.empirical.sens = RejectionRate(plan, alt, trials, kAltStream, exec);
  out.spec_se = BinomialSe(out.theory.spec, trials);
  out.sens_se = BinomialSe(out.theory.sens, trials);
  return out;
}

AdversaryResult AdversaryBoundCheck(const QueryPlan& plan, std::int64_t trials, Exec exec) {
  plan.Validate();
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  AdversaryResult out;
  out.cells_per_axis = plan.CellsPerAxis();
  if (out.cells_per_axis < 2) {
    throw InvalidArgument("adversary check requires floor(L delta / (2 epsilon)) >= 2");
  }
  QueryPlan detect = plan;
  detect.tau = 0.0;
  const BumpModel bump = BumpModel::InCell(plan, 0);
  const QueryModel model = [&bump](std::span<const double> x) { return bump(x); };
  out.detection = RejectionRate(detect, model, trials, kAdversaryStream, exec);
  out.bound = static_cast<double>(plan.n) /
              std::pow(static_cast<double>(out.cells_per_axis), plan.p);
  out.standard_error = BinomialSe(std::min(1.0, out.bound), trials);
  out.passed = out.detection <= out.bound + 4.0 * out.standard_error;
  return out;
}

std::string QueryCsvHeader() {
  return "p,n,tau,epsilon,lipschitz,delta,trials,spec_theory,sens_theory,"
         "spec_hat,sens_hat,spec_ci_halfwidth,sens_ci_halfwidth\n";
}

std::string QueryCsvRow(const QueryPlan& plan, const Rates& theory,
                        const EmpiricalResult* empirical) {
  std::ostringstream os;
  os << std::setprecision(17) << plan.p << ',' << plan.n << ',' << plan.tau << ','
     << plan.epsilon << ',' << plan.lipschitz << ',' << plan.delta << ',';
  if (empirical) {
    os << empirical->trials << ',' << theory.spec << ',' << theory.sens << ','
       << empirical->empirical.spec << ',' << empirical->empirical.sens << ','
       << 4.0 * empirical->spec_se << ',' << 4.0 * empirical->sens_se << '\n';
  } else {
    os << 0 << ',' << theory.spec << ',' << theory.sens << ",,,,\n";
  }
  return os.str();
}

}  // namespace attrib
