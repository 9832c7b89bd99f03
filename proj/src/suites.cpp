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

#include "attrib/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "attrib/attribution.hpp"
#include "attrib/error.hpp"
#include "attrib/hyptest.hpp"
#include "attrib/querytest.hpp"

namespace attrib {

namespace {

// Forged pairs agree to this tolerance; thresholds stay clear of it.
constexpr double kPairTieBand = 2e-6;

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

double Uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int UniformInt(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

SuiteReport Finish(SuiteReport r, const Timer& t, std::ostringstream& detail) {
  r.passed = r.failures == 0 && r.cases > 0;
  r.seconds = t.Seconds();
  r.detail = detail.str();
  return r;
}

Baseline UniformSampleBaseline(std::size_t p, std::size_t count, std::uint64_t seed) {
  const Baseline box(UniformBox{std::vector<double>(p, -1.0), std::vector<double>(p, 1.0)});
  return Baseline(Empirical{box.Sample(seed, count)});
}

}  // namespace

std::vector<double> RandomPoint(Rng& rng, std::size_t p, double lo, double hi) {
  std::vector<double> out(p);
  for (double& v : out) v = Uniform(rng, lo, hi);
  return out;
}

PiecewiseLinear1D RandomPwl(Rng& rng, double lo, double hi, int max_breakpoints) {
  const int k = UniformInt(rng, 1, max_breakpoints);
  std::vector<double> bp(static_cast<std::size_t>(k));
  for (double& b : bp) b = Uniform(rng, lo, hi);
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  std::vector<double> values(bp.size());
  for (double& v : values) v = Uniform(rng, -2.0, 2.0);
  return PiecewiseLinear1D(bp, values, Uniform(rng, -2.0, 2.0), Uniform(rng, -2.0, 2.0));
}

Polynomial1D RandomSmoothPoly(Rng& rng) {
  const int degree = UniformInt(rng, 0, 3);
  std::vector<double> c(static_cast<std::size_t>(degree + 1));
  for (int d = 0; d <= degree; ++d) {
    const double scale = d == 3 ? 0.3 : 1.0;
    c[static_cast<std::size_t>(d)] = Uniform(rng, -scale, scale);
  }
  return Polynomial1D(c);
}

Model RandomAdditiveModel(Rng& rng, std::size_t p, bool smooth_only) {
  std::vector<Component1D> comps;
  for (std::size_t j = 0; j < p; ++j) {
    if (smooth_only || UniformInt(rng, 0, 1) == 0) {
      comps.emplace_back(RandomSmoothPoly(rng));
    } else {
      comps.emplace_back(RandomPwl(rng, -1.0, 1.0));
    }
  }
  return Model(AdditiveModel(std::move(comps)));
}

Model RandomMlp(Rng& rng, std::size_t p, std::size_t hidden, std::size_t q) {
  std::normal_distribution<double> normal(0.0, 1.0);
  auto layer = [&](std::size_t out, std::size_t in) {
    DenseLayer l{Eigen::MatrixXd(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)),
                 Eigen::VectorXd(static_cast<Eigen::Index>(out))};
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = normal(rng);
      l.bias(r) = 0.5 * normal(rng);
    }
    return l;
  };
  return Model(MlpModel({layer(hidden, p), layer(q, hidden)}));
}

Baseline RandomEmpirical(Rng& rng, std::size_t p, std::size_t count, double lo, double hi) {
  std::vector<std::vector<double>> samples;
  for (std::size_t i = 0; i < count; ++i) samples.push_back(RandomPoint(rng, p, lo, hi));
  return Baseline(Empirical{std::move(samples)});
}

std::pair<LocalBehaviour, LocalBehaviour> RecourseBehaviours(std::vector<double> x,
                                                             std::size_t j, double delta) {
  const double xj = x[j];
  return {LocalBehaviour{PiecewiseLinear1D::Affine(-1.0, xj, 0.0), x, j, delta},
          LocalBehaviour{PiecewiseLinear1D::Affine(1.0, xj, 0.0), x, j, delta}};
}

std::pair<LocalBehaviour, LocalBehaviour> SpuriousBehaviours(std::vector<double> x,
                                                             std::size_t j, double delta,
                                                             double epsilon, bool ramp) {
  const double xj = x[j];
  PiecewiseLinear1D alt = ramp ? PiecewiseLinear1D::Affine(epsilon / delta, xj, 0.0)
                               : PiecewiseLinear1D::Constant(epsilon);
  return {LocalBehaviour{PiecewiseLinear1D::Constant(0.0), x, j, delta},
          LocalBehaviour{std::move(alt), x, j, delta}};
}

SuiteReport RunCompletenessSuite(const SuiteOptions& opt) {
  Timer timer;
  SuiteReport r;
  r.name = "completeness";
  std::ostringstream detail;
  std::vector<int> failed(static_cast<std::size_t>(opt.completeness_cases), 0);
  ForEachIndex(opt.exec, opt.completeness_cases, [&](std::int64_t c) {
    Rng rng = MakeRng(opt.seed, 0xC0 + static_cast<std::uint64_t>(c) * 7919);
    const auto p = static_cast<std::size_t>(UniformInt(rng, 1, 6));
    const auto n_ref = static_cast<std::size_t>(UniformInt(rng, 1, 6));
    const Baseline base = RandomEmpirical(rng, p, n_ref);
    const auto x = RandomPoint(rng, p, -1.0, 1.0);
    const Model general = UniformInt(rng, 0, 1) == 0
                              ? RandomAdditiveModel(rng, p, false)
                              : RandomMlp(rng, p, static_cast<std::size_t>(UniformInt(rng, 2, 8)),
                                          static_cast<std::size_t>(UniformInt(rng, 1, 2)));
    const Model smooth = RandomAdditiveModel(rng, p, true);
    MethodSettings s;
    s.ig_steps = opt.ig_steps;
    const bool ok =
        VerifyCompleteness(Method::kShapExact, general, base, x, opt.exact_tol, s) &&
        VerifyCompleteness(Method::kIntegratedGradients, smooth, base, x, opt.ig_tol, s);
    failed[static_cast<std::size_t>(c)] = ok ? 0 : 1;
  });
  r.cases = opt.completeness_cases;
  for (std::size_t c = 0; c < failed.size(); ++c) {
    if (failed[c]) {
      ++r.failures;
      detail << "case " << c << " failed\n";
    }
  }
  detail << r.cases - r.failures << "/" << r.cases
         << " cases: shap_exact tol " << opt.exact_tol << ", ig (" << opt.ig_steps
         << " steps) tol " << opt.ig_tol << "\n";
  return Finish(r, timer, detail);
}

SuiteReport RunLinearitySuite(const SuiteOptions& opt) {
  Timer timer;
  SuiteReport r;
  r.name = "linearity";
  std::ostringstream detail;
  std::vector<int> failed(static_cast<std::size_t>(opt.linearity_cases), 0);
  ForEachIndex(opt.exec, opt.linearity_cases, [&](std::int64_t c) {
    Rng rng = MakeRng(opt.seed, 0x11EA + static_cast<std::uint64_t>(c) * 104729);
    const auto p = static_cast<std::size_t>(UniformInt(rng, 1, 6));
    const Baseline base = RandomEmpirical(rng, p, static_cast<std::size_t>(UniformInt(rng, 1, 6)));
    const auto x = RandomPoint(rng, p, -1.0, 1.0);
    const Model mixed = RandomAdditiveModel(rng, p, false);
    const Model smooth = RandomAdditiveModel(rng, p, true);
    MethodSettings s;
    s.ig_steps = opt.ig_steps;
    const bool ok = VerifyLinearity(Method::kShapExact, mixed, base, x, opt.exact_tol, s) &&
                    VerifyLinearity(Method::kIntegratedGradients, smooth, base, x, opt.ig_tol, s);
    failed[static_cast<std::size_t>(c)] = ok ? 0 : 1;
  });
  r.cases = opt.linearity_cases;
  for (std::size_t c = 0; c < failed.size(); ++c) {
    if (failed[c]) {
      ++r.failures;
      detail << "case " << c << " failed\n";
    }
  }
  detail << r.cases - r.failures << "/" << r.cases << " cases\n";
  return Finish(r, timer, detail);
}

SuiteReport RunForgeSuite(const SuiteOptions& opt) {
  Timer timer;
  SuiteReport r;
  r.name = "forge";
  std::ostringstream detail;
  const int n = opt.forge_cases;
  // 0 pass, 1 fail, 2 skipped (assumption did not hold for the draw)
  std::vector<int> status(static_cast<std::size_t>(n), 0);
  ForEachIndex(opt.exec, n, [&](std::int64_t c) {
    Rng rng = MakeRng(opt.seed, 0xF0 + static_cast<std::uint64_t>(c) * 15485863);
    const auto p = static_cast<std::size_t>(UniformInt(rng, 1, 4));
    const auto j = static_cast<std::size_t>(UniformInt(rng, 0, static_cast<int>(p) - 1));
    const double delta = Uniform(rng, 0.05, 0.3);
    auto x = RandomPoint(rng, p, -0.5, 0.5);
    const double phi = Uniform(rng, -2.0, 2.0);
    const Baseline base =
        RandomEmpirical(rng, p, static_cast<std::size_t>(UniformInt(rng, 5, 60)));
    const LocalBehaviour b{RandomPwl(rng, x[j] - delta, x[j] + delta, 3), x, j, delta};
    try {
      const ForgedModel f = ForgeCounterexample(b, base, Range{-1.0, 1.0}, phi);
      const Attribution a = ShapExact(f.model, base, x, Exec::kSerial);
      bool ok = std::abs(a(j) - phi) <= 1e-6 * std::max(1.0, std::abs(phi));
      std::vector<double> probe = x;
      for (int k = 0; k <= 100; ++k) {
        probe[j] = std::min(b.hi(), b.lo() + (b.hi() - b.lo()) * k / 100.0);
        ok = ok && f.model.EvaluateOutput(probe, 0) == b.g(probe[j]);
      }
      status[static_cast<std::size_t>(c)] = ok ? 0 : 1;
    } catch (const AssumptionViolated&) {
      status[static_cast<std::size_t>(c)] = 2;
    }
  });
  int skipped = 0;
  for (std::size_t c = 0; c < status.size(); ++c) {
    if (status[c] == 2) {
      ++skipped;
      continue;
    }
    ++r.cases;
    if (status[c] == 1) {
      ++r.failures;
      detail << "case " << c << " failed\n";
    }
  }
  // A pointmass inside the neighbourhood must be rejected.
  ++r.cases;
  try {
    const Baseline inside(Pointmass{{0.1}});
    ForgeCounterexample(LocalBehaviour{PiecewiseLinear1D::Constant(0.0), {0.1}, 0, 0.2},
                        inside, Range{-1.0, 1.0}, 0.0);
    ++r.failures;
    detail << "pointmass inside the neighbourhood was not rejected\n";
  } catch (const AssumptionViolated&) {
  }
  detail << r.cases - r.failures << "/" << r.cases << " cases, " << skipped
         << " random draws skipped (no baseline mass outside the neighbourhood)\n";
  return Finish(r, timer, detail);
}

SuiteReport RunRocSuite(const SuiteOptions& opt) {
  Timer timer;
  SuiteReport r;
  r.name = "roc";
  std::ostringstream detail;
  const int n = opt.roc_cases;
  std::vector<int> failed(static_cast<std::size_t>(n), 0);
  ForEachIndex(opt.exec, n, [&](std::int64_t c) {
    Rng rng = MakeRng(opt.seed, 0x20C + static_cast<std::uint64_t>(c) * 32452843);
    const auto p = static_cast<std::size_t>(UniformInt(rng, 1, 4));
    const auto j = static_cast<std::size_t>(UniformInt(rng, 0, static_cast<int>(p) - 1));
    const double delta = Uniform(rng, 0.05, 0.2);
    const auto x = RandomPoint(rng, p, -0.5, 0.5);
    const double phi = Uniform(rng, -1.0, 1.0);
    const Baseline base = UniformSampleBaseline(p, 200, DeriveSeed(opt.seed, 0x8A5E, c));
    const Range domain{-1.0, 1.0};
    bool ok = true;
    for (int task = 0; task < 3; ++task) {
      auto behaviours = task == 0   ? RecourseBehaviours(x, j, delta)
                        : task == 1 ? SpuriousBehaviours(x, j, delta, 0.1, false)
                                    : SpuriousBehaviours(x, j, delta, 0.1, true);
      const auto pair = ForgePair(behaviours.first, behaviours.second, base, domain, phi);
      const std::vector<Model> f0{pair.first.model}, f1{pair.second.model};
      const Attributor shap = [&](const Model& f) { return ShapExact(f, base, x, Exec::kSerial)(j); };
      const double s0 = shap(f0[0]), s1 = shap(f1[0]);
      ok = ok && std::abs(s0 - s1) <= 2e-6;
      const TestKind kind = task == 0 ? TestKind::kRecourseSign : TestKind::kSpuriousMagnitude;
      const double scores[] = {s0, s1};
      for (double alpha : ThresholdGrid(scores, kind, 40, kPairTieBand)) {
        const auto res = ScenarioSpecSens(f0, f1, shap, ThresholdTest{kind, alpha});
        ok = ok && res.spec + res.sens <= 1.0 + 1e-9;
      }
      // Pooled forged-pair population: fpr == tpr at every threshold.
      const Prediction preds[] = {{s0, 0}, {s1, 1}};
      for (const auto& pt : BuildRocCurve(preds, kind, ThresholdGrid(scores, kind, 40, kPairTieBand)).points) {
        ok = ok && pt.fpr == pt.tpr;
      }
      if (task != 1) {
        const Attributor grad = [&](const Model& f) { return GradientMethod(f, x)(j); };
        const double alpha = task == 0 ? 0.0 : 0.5 * 0.1 / delta;
        const auto res = ScenarioSpecSens(f0, f1, grad, ThresholdTest{kind, alpha});
        ok = ok && res.spec == 1.0 && res.sens == 1.0;
      }
    }
    // Random predictions give monotone curves.
    std::vector<Prediction> preds;
    std::vector<double> scores;
    for (int i = 0; i < 50; ++i) {
      preds.push_back({Uniform(rng, -1.0, 1.0), UniformInt(rng, 0, 1)});
      scores.push_back(preds.back().score);
    }
    for (TestKind kind : {TestKind::kRecourseSign, TestKind::kSpuriousMagnitude}) {
      const auto curve = BuildRocCurve(preds, kind, ThresholdGrid(scores, kind, 40));
      for (std::size_t i = 1; i < curve.points.size(); ++i) {
        ok = ok && curve.points[i].fpr <= curve.points[i - 1].fpr &&
             curve.points[i].tpr <= curve.points[i - 1].tpr;
      }
    }
    failed[static_cast<std::size_t>(c)] = ok ? 0 : 1;
  });
  r.cases = n;
  for (std::size_t c = 0; c < failed.size(); ++c) {
    if (failed[c]) {
      ++r.failures;
      detail << "case " << c << " failed\n";
    }
  }
  detail << r.cases - r.failures << "/" << r.cases << " cases\n";
  return Finish(r, timer, detail);
}

SuiteReport RunQuerySuite(const SuiteOptions& opt) {
  Timer timer;
  SuiteReport r;
  r.name = "query";
  std::ostringstream detail;
  auto check = [&](bool ok, const std::string& what) {
    ++r.cases;
    if (!ok) {
      ++r.failures;
      detail << "failed: " << what << "\n";
    }
  };
  QueryPlan base;
  base.p = 2;
  base.delta = 1.0;
  base.epsilon = 0.1;
  base.n = 10;
  base.rng_seed = opt.seed;
  for (int i = 0; i <= 20; ++i) {
    QueryPlan plan = base;
    plan.tau = i / 20.0;
    check(TheoreticalRates(plan).spec == 1.0 - plan.tau, "spec = 1 - tau");
  }
  double prev = -1.0;
  for (std::int64_t n : {0, 1, 2, 5, 10, 50, 100, 1000}) {
    QueryPlan plan = base;
    plan.n = n;
    const double sens = TheoreticalRates(plan).sens;
    check(sens >= prev, "sens non-decreasing in n");
    prev = sens;
  }
  prev = -1.0;
  for (double eps : {0.01, 0.05, 0.1, 0.2, 0.4, 0.5}) {
    QueryPlan plan = base;
    plan.epsilon = eps;
    const double sens = TheoreticalRates(plan).sens;
    check(sens >= prev, "sens non-decreasing in epsilon");
    prev = sens;
  }
  prev = 2.0;
  for (double l : {1.0, 1.5, 2.0, 4.0, 8.0}) {
    QueryPlan plan = base;
    plan.lipschitz = l;
    const double sens = TheoreticalRates(plan).sens;
    check(sens <= prev, "sens non-increasing in L");
    prev = sens;
  }
  prev = 2.0;
  for (double d : {0.2, 0.5, 1.0, 2.0, 4.0}) {
    QueryPlan plan = base;
    plan.delta = d;
    const double sens = TheoreticalRates(plan).sens;
    check(sens <= prev, "sens non-increasing in delta");
    prev = sens;
  }
  for (int i = 0; i < 5; ++i) {
    QueryPlan plan = base;
    plan.p = 1 + i % 3;
    plan.n = 1 + 3 * i;
    plan.tau = 0.1 * i;
    plan.epsilon = 0.15;
    plan.rng_seed = DeriveSeed(opt.seed, 0x9E, static_cast<std::uint64_t>(i));
    const auto res = EmpiricalRates(plan, opt.query_trials, opt.exec);
    check(res.Within(4.0), "empirical rates within 4 SE (plan " + std::to_string(i) + ")");
  }
  for (int p : {1, 2}) {
    QueryPlan plan = base;
    plan.p = p;
    plan.n = 3;
    plan.epsilon = 0.1;  // r = 5
    plan.rng_seed = DeriveSeed(opt.seed, 0xAD, static_cast<std::uint64_t>(p));
    check(AdversaryBoundCheck(plan, opt.query_trials, opt.exec).passed, "adversary bound");
  }
  bool rejected = false;
  try {
    QueryPlan plan = base;
    plan.epsilon = 0.3;  // r = 1
    AdversaryBoundCheck(plan, 10, opt.exec);
  } catch (const InvalidArgument&) {
    rejected = true;
  }
  check(rejected, "r < 2 rejected");
  detail << r.cases - r.failures << "/" << r.cases << " checks\n";
  return Finish(r, timer, detail);
}

SuiteReport RunSignDisagreementSuite(const SuiteOptions& opt) {
  Timer timer;
  SuiteReport r;
  r.name = "prop4";
  std::ostringstream detail;
  const Baseline base(UniformBox{{-1.5}, {1.5}});
  const auto est = RandomPolynomialMc(2, base, opt.sign_samples, opt.seed, opt.exec);
  r.cases = 2;
  if (!(est.estimate > 0.25 && est.estimate < 0.5)) ++r.failures;
  if (!(std::abs(est.estimate - est.closed_form) <= std::max(0.005, 4 * est.standard_error))) {
    ++r.failures;
  }
  detail << "estimate " << est.estimate << " (SE " << est.standard_error << "), closed form "
         << est.closed_form << ", samples " << est.samples << "\n";
  return Finish(r, timer, detail);
}

std::vector<SuiteReport> RunSuites(std::string_view name, const SuiteOptions& opt) {
  using Runner = SuiteReport (*)(const SuiteOptions&);
  const std::pair<std::string_view, Runner> all[] = {
      {"completeness", RunCompletenessSuite}, {"linearity", RunLinearitySuite},
      {"forge", RunForgeSuite},               {"roc", RunRocSuite},
      {"query", RunQuerySuite},               {"prop4", RunSignDisagreementSuite},
  };
  std::vector<SuiteReport> out;
  for (const auto& [tag, run] : all) {
    if (name == "all" || name == tag) out.push_back(run(opt));
  }
  if (out.empty()) throw InvalidArgument("unknown suite '" + std::string(name) + "'");
  return out;
}

}  // namespace attrib
