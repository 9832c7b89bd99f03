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

#include "attrib/forge.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "attrib/error.hpp"
#include "attrib/rng.hpp"

namespace attrib {

namespace {

constexpr std::int64_t kMcBlock = 1 << 16;

int Sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

void LocalBehaviour::Validate() const {
  if (feature >= x.size()) {
    throw InvalidArgument("behaviour feature index " + std::to_string(feature) +
                          " out of range");
  }
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw InvalidArgument("behaviour radius delta must be positive and finite");
  }
  if (!std::isfinite(g(lo())) || !std::isfinite(g(hi())) ||
      !std::isfinite(g(x[feature]))) {
    throw DegenerateBehaviour(
        "local behaviour is not finite on the closed neighbourhood");
  }
}

double TruncatedExpectation(const PiecewiseLinear1D& g, const Baseline& baseline,
                            std::size_t j, double lo, double hi) {
  if (lo > hi) return 0.0;
  if (baseline.is_discrete()) {
    const auto support = baseline.support();
    double acc = 0.0;
    for (const auto& s : support) {
      if (s[j] >= lo && s[j] <= hi) acc += g(s[j]);
    }
    return acc / static_cast<double>(support.size());
  }
  // g is affine between consecutive split points.
  std::vector<double> cuts{lo};
  for (double b : g.breakpoints()) {
    if (b > lo && b < hi) cuts.push_back(b);
  }
  cuts.push_back(hi);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const Interval piece = (i + 2 == cuts.size())
                               ? Interval::Closed(cuts[i], cuts[i + 1])
                               : Interval::ClosedOpen(cuts[i], cuts[i + 1]);
    const double slope = g.Derivative(cuts[i]);
    const double intercept = g(cuts[i]) - slope * cuts[i];
    acc += intercept * baseline.IntervalMass(j, piece) +
           slope * baseline.TruncatedFirstMoment(j, piece);
  }
  return acc;
}

ForgedModel ForgeCounterexample(const LocalBehaviour& behaviour,
                                const Baseline& baseline, const Range& domain,
                                double target_phi) {
  behaviour.Validate();
  if (baseline.dim() != behaviour.x.size()) {
    throw InvalidArgument("baseline dimension does not match the example");
  }
  if (!std::isfinite(target_phi)) throw InvalidArgument("target attribution must be finite");
  const std::size_t j = behaviour.feature;
  const auto check = CheckBaselineSupport(baseline, behaviour.x, j, behaviour.delta, domain);
  if (!check.holds) {
    throw AssumptionViolated(
        "baseline support",
        "baseline has no mass in the domain of feature " + std::to_string(j) +
            " outside the neighbourhood [" + std::to_string(behaviour.lo()) + ", " +
            std::to_string(behaviour.hi()) + "]");
  }

  const double lo = behaviour.lo();
  const double hi = behaviour.hi();
  const double x_l = domain.lo;
  const double x_r = domain.hi;
  const PiecewiseLinear1D& g = behaviour.g;

  const Interval left = Interval::ClosedOpen(x_l, lo);
  const Interval right = Interval::OpenClosed(hi, x_r);
  const double mass_l = baseline.IntervalMass(j, left);
  const double mass_r = baseline.IntervalMass(j, right);
  const double coef_l = baseline.TruncatedFirstMoment(j, left) - lo * mass_l;
  const double coef_r = baseline.TruncatedFirstMoment(j, right) - hi * mass_r;
  if (coef_l == 0.0 && coef_r == 0.0) {
    throw AssumptionViolated("baseline support",
                             "both outer slope coefficients vanish");
  }

  const double g_lo = g(lo);
  const double g_hi = g(hi);
  const double rhs = g(behaviour.x[j]) - target_phi - g_lo * mass_l - g_hi * mass_r -
                     TruncatedExpectation(g, baseline, j, lo, hi);

  ForgedModel out{
      .model = Model(Polynomial1D{}),
      .component = StitchedComponent(g, lo, hi, PiecewiseLinear1D::Constant(0.0)),
      .feature = j,
      .witness_lo = x_l,
      .witness_hi = x_r,
      .target_phi = target_phi,
      .delta = behaviour.delta,
  };
  if (std::abs(coef_l) >= std::abs(coef_r)) {
    out.beta_left = rhs / coef_l;
  } else {
    out.beta_right = rhs / coef_r;
  }

  const double ramp_l = 1e-9 * std::max(1.0, std::abs(x_l));
  const double ramp_r = 1e-9 * std::max(1.0, std::abs(x_r));
  PiecewiseLinear1D outer(
      {x_l - ramp_l, x_l, lo, hi, x_r, x_r + ramp_r},
      {0.0, out.beta_left * (x_l - lo) + g_lo, g_lo, g_hi,
       out.beta_right * (x_r - hi) + g_hi, 0.0},
      0.0, 0.0);
  out.component = StitchedComponent(g, lo, hi, std::move(outer));
  out.model = SingleFeatureModel(behaviour.x.size(), j, out.component);
  return out;
}

std::pair<ForgedModel, ForgedModel> ForgePair(const LocalBehaviour& b0,
                                              const LocalBehaviour& b1,
                                              const Baseline& baseline,
                                              const Range& domain,
                                              double shared_phi) {
  if (b0.x != b1.x || b0.feature != b1.feature || b0.delta != b1.delta) {
    throw InvalidArgument("paired behaviours must share x, feature and delta");
  }
  return {ForgeCounterexample(b0, baseline, domain, shared_phi),
          ForgeCounterexample(b1, baseline, domain, shared_phi)};
}

RandomPolynomialEstimate RandomPolynomialMc(int degree, const Baseline& baseline,
                                            std::int64_t mc_samples,
                                            std::uint64_t seed, Exec exec) {
  if (degree < 2) throw InvalidArgument("degree must be >= 2");
  if (mc_samples < 1) throw InvalidArgument("need at least one Monte Carlo sample");
  const double moment_n = baseline.RawMoment(0, degree);
  const double mean = baseline.Mean(0);
  if (!(moment_n > 0.5 && moment_n < 1.0)) {
    throw AssumptionViolated("moment condition",
                             "E X^n = " + std::to_string(moment_n) +
                                 " is not in (1/2, 1)");
  }
  const double n = degree;

  const std::int64_t blocks = (mc_samples + kMcBlock - 1) / kMcBlock;
  std::vector<std::int64_t> counts(static_cast<std::size_t>(blocks), 0);
  ForEachIndex(exec, blocks, [&](std::int64_t block) {
    Rng rng = MakeRng(seed, static_cast<std::uint64_t>(block));
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::int64_t begin = block * kMcBlock;
    const std::int64_t end = std::min(mc_samples, begin + kMcBlock);
    std::int64_t local = 0;
    for (std::int64_t i = begin; i < end; ++i) {
      const double a = normal(rng);
      const double attribution = a * (1.0 - moment_n) - (1.0 - mean);
      const double derivative = n * a - 1.0;
      local += Sign(attribution) != Sign(derivative);
    }
    counts[static_cast<std::size_t>(block)] = local;
  });

  RandomPolynomialEstimate out;
  out.samples = mc_samples;
  for (std::int64_t c : counts) out.disagreements += c;
  out.estimate = static_cast<double>(out.disagreements) / static_cast<double>(mc_samples);
  out.standard_error =
      std::sqrt(out.estimate * (1.0 - out.estimate) / static_cast<double>(mc_samples));
  // Signs disagree exactly when a lies between the two sign-change points.
  const double root_attribution = (1.0 - mean) / (1.0 - moment_n);
  const double root_derivative = 1.0 / n;
  out.closed_form = std::abs(NormalCdf(root_attribution) - NormalCdf(root_derivative));
  return out;
}

}  // namespace attrib
