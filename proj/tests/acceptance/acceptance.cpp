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

// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Usage: acceptance <data_dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "attrib/attribution.hpp"
#include "attrib/baseline.hpp"
#include "attrib/experiments.hpp"
#include "attrib/forge.hpp"
#include "attrib/hyptest.hpp"
#include "attrib/querytest.hpp"
#include "attrib/serialize.hpp"
#include "attrib/suites.hpp"

using namespace attrib;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kExactTol = 1e-9;
constexpr double kIgTol = 1e-4;
constexpr int kIgSteps = 200;
constexpr double kFigTol = 0.02;
constexpr std::size_t kFigSamples = 10000;
constexpr double kPairTol = 2e-6;
constexpr double kTieBand = 2e-6;
constexpr double kSpecSensSlack = 1e-9;
constexpr int kGrid = 40;
constexpr std::int64_t kSignSamples = 1000000;
constexpr double kSignTarget = 0.3085;
constexpr double kSignTol = 0.005;
constexpr double kSignBound = 0.2858;
constexpr std::int64_t kBatteryTrials = 100000;
constexpr std::int64_t kPresetTrials = 1000;
constexpr double kPresetMinSens = 0.88;
constexpr double kSeK = 4.0;

constexpr double kBudget1 = 30.0;
constexpr double kBudget3 = 10.0;
constexpr double kBudget4 = 10.0;
constexpr double kBudget5 = 300.0;
constexpr double kBudget6 = 60.0;

struct Outcome {
  bool ok = true;
  std::ostringstream note;
  void Require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      note << " [" << what << "]";
    }
  }
};

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

bool Report(int id, const std::string& title, const std::function<void(Outcome&)>& body,
            double budget) {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.ok = false;
    out.note << " [exception: " << e.what() << "]";
  }
  const double secs = Seconds(start);
  if (budget > 0.0 && secs >= budget) {
    out.ok = false;
    out.note << " [over time budget " << budget << " s]";
  }
  std::printf("%s %d %s (%.2f s)%s\n", out.ok ? "PASS" : "FAIL", id, title.c_str(), secs,
              out.note.str().c_str());
  std::fflush(stdout);
  return out.ok;
}

void Completeness(Outcome& out) {
  SuiteOptions opt;
  opt.completeness_cases = 200;
  opt.linearity_cases = 100;
  opt.exact_tol = kExactTol;
  opt.ig_tol = kIgTol;
  opt.ig_steps = kIgSteps;
  for (const auto& r : {RunCompletenessSuite(opt), RunLinearitySuite(opt)}) {
    std::ostringstream what;
    what << r.name << " " << r.failures << "/" << r.cases << " failed";
    out.Require(r.passed && r.failures == 0 && r.cases > 0, what.str());
    out.note << " " << r.name << "=" << r.cases - r.failures << "/" << r.cases;
  }
}

void ZigzagForge(Outcome& out) {
  const PiecewiseLinear1D g({-0.05, 0.1, 0.22}, {0.3, -0.2, 0.45}, -1.0, 2.0);
  const LocalBehaviour behaviour{g, {0.1}, 0, 0.2};
  const Baseline uniform(UniformBox{{-1.0}, {1.0}});
  const Baseline disc(Empirical{uniform.Sample(2, kFigSamples)});
  const Range domain{-1.0, 1.0};
  for (double phi : {0.0, 1.0}) {
    const ForgedModel f = ForgeCounterexample(behaviour, disc, domain, phi);
    const double got = ShapExact(f.model, disc, std::vector<double>{0.1})(0);
    out.Require(std::abs(got - phi) <= kFigTol, "shap off target");
    out.note << " phi" << phi << "=" << got;
    // The uniform forge is judged against the discretization.
    const ForgedModel fu = ForgeCounterexample(behaviour, uniform, domain, phi);
    const double gu = ShapExact(fu.model, disc, std::vector<double>{0.1})(0);
    out.Require(std::abs(gu - phi) <= kFigTol, "uniform forge off target");
    for (int i = 0; i <= 400; ++i) {
      const double t = -0.1 + 0.4 * i / 400.0;
      const std::vector<double> z{t};
      if (f.model.EvaluateOutput(z, 0) != g(t) || fu.model.EvaluateOutput(z, 0) != g(t)) {
        out.Require(false, "local behaviour not reproduced");
        return;
      }
    }
  }
}

void Impossibility(Outcome& out) {
  const std::vector<double> x{0.2, -0.3, 0.5};
  const std::size_t j = 1;
  const double delta = 0.15, eps = 0.1;
  const Baseline base(Empirical{Baseline(UniformBox{{-1, -1, -1}, {1, 1, 1}}).Sample(7, 200)});
  const Range domain{-1.0, 1.0};
  const Attributor shap = [&](const Model& f) { return ShapExact(f, base, x)(j); };
  const Attributor grad = [&](const Model& f) { return GradientMethod(f, x)(j); };

  struct Case {
    const char* tag;
    std::pair<LocalBehaviour, LocalBehaviour> pair;
    TestKind kind;
  };
  const Case cases[] = {
      {"recourse", RecourseBehaviours(x, j, delta), TestKind::kRecourseSign},
      {"spurious", SpuriousBehaviours(x, j, delta, eps, false), TestKind::kSpuriousMagnitude},
  };
  for (const auto& c : cases) {
    for (double phi : {-0.5, 0.0, 0.3}) {
      const auto forged = ForgePair(c.pair.first, c.pair.second, base, domain, phi);
      const std::vector<Model> f0{forged.first.model}, f1{forged.second.model};
      const double s0 = shap(f0[0]), s1 = shap(f1[0]);
      out.Require(std::abs(s0 - s1) <= kPairTol, std::string(c.tag) + " attribution gap");
      const double scores[] = {s0, s1};
      double worst = 0.0;
      for (double alpha : ThresholdGrid(scores, c.kind, kGrid, kTieBand)) {
        const auto r = ScenarioSpecSens(f0, f1, shap, ThresholdTest{c.kind, alpha});
        worst = std::max(worst, r.spec + r.sens);
      }
      out.Require(worst <= 1.0 + kSpecSensSlack, std::string(c.tag) + " spec + sens > 1");
      if (phi == 0.0) out.note << " " << c.tag << " max(spec+sens)=" << worst;
    }
  }
  // Derivative sign test on the recourse pair.
  const auto rec = RecourseBehaviours(x, j, delta);
  const auto forged = ForgePair(rec.first, rec.second, base, domain, 0.0);
  const std::vector<Model> f0{forged.first.model}, f1{forged.second.model};
  const auto r = ScenarioSpecSens(f0, f1, grad, ThresholdTest{TestKind::kRecourseSign, 0.0});
  out.Require(r.spec == 1.0 && r.sens == 1.0, "gradient does not separate");
  out.note << " gradient spec=" << r.spec << " sens=" << r.sens;
}

void SignDisagreement(Outcome& out) {
  const Baseline wide(UniformBox{{-1.5}, {1.5}});
  const auto est = RandomPolynomialMc(2, wide, kSignSamples, 0);
  out.Require(est.estimate > 0.25 && est.estimate < 0.5, "outside (0.25, 0.5)");
  out.Require(std::abs(est.estimate - kSignTarget) <= kSignTol, "far from closed form");
  out.Require(est.estimate > kSignBound - 3.0 * est.standard_error, "below lower bound");
  out.note << " estimate=" << est.estimate << " se=" << est.standard_error
           << " closed_form=" << est.closed_form;
}

void QueryExactness(Outcome& out) {
  int within = 0;
  for (int c = 0; c < 20; ++c) {
    QueryPlan plan;
    plan.p = 1 + c % 3;
    plan.n = 1 + 4 * c;
    plan.tau = 0.05 * (c % 4);
    plan.epsilon = 0.05 + 0.02 * (c % 5);
    plan.rng_seed = static_cast<std::uint64_t>(100 + c);
    const auto e = EmpiricalRates(plan, kBatteryTrials);
    const bool ok = e.Within(kSeK);
    within += ok;
    if (!ok) out.note << " plan" << c << " off";
  }
  out.Require(within == 20, "battery outside 4 SE");
  out.note << " battery=" << within << "/20";
  const auto preset = EmpiricalRates(QueryBudgetPreset(), kPresetTrials);
  out.Require(preset.empirical.sens >= kPresetMinSens, "preset sensitivity");
  out.Require(preset.empirical.spec == 1.0, "preset specificity");
  out.note << " preset sens=" << preset.empirical.sens << " spec=" << preset.empirical.spec
           << " theory=" << preset.theory.sens;
}

void Adversary(Outcome& out) {
  // (cells per axis, dimension, queries)
  const int grid[10][3] = {{2, 1, 1}, {3, 1, 2}, {4, 1, 3}, {5, 1, 2}, {6, 1, 4},
                           {2, 2, 3}, {3, 2, 5}, {4, 2, 7}, {2, 3, 4}, {3, 3, 9}};
  int passed = 0;
  for (const auto& g : grid) {
    QueryPlan plan;
    plan.p = g[1];
    plan.n = g[2];
    plan.delta = 1.0;
    plan.lipschitz = 1.0;
    plan.epsilon = 1.0 / (2.0 * g[0]);
    plan.rng_seed = static_cast<std::uint64_t>(g[0] * 10 + g[1]);
    const auto r = AdversaryBoundCheck(plan, 100000);
    out.Require(r.cells_per_axis == g[0], "cell count mismatch");
    out.Require(r.detection <= r.bound + kSeK * r.standard_error, "detection above bound");
    passed += r.passed;
  }
  out.Require(passed == 10, "adversary check failed");
  out.note << " plans=" << passed << "/10";
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void Determinism(Outcome& out, const fs::path& data_dir) {
  const fs::path csv = data_dir / "synthetic_additive.csv";
  const fs::path schema = data_dir / "synthetic_additive.schema.json";
  const Dataset data = IngestCsv(csv, SchemaFromJson(ReadJsonFile(schema)));
  ExperimentConfig exp;
  exp.n_models = 2;
  exp.n_examples = 5;
  exp.calibration_examples = 40;
  exp.settings.shap_baseline_samples = 10;
  exp.settings.shap_subset_samples = 40;
  exp.settings.smoothgrad_samples = 20;
  exp.settings.lime_samples = 50;
  exp.seed = 17;
  TrainConfig train;
  train.epochs = 5;
  train.seed = 17;

  const fs::path root = fs::temp_directory_path() / "attrib_acceptance_sweep";
  fs::remove_all(root);
  std::vector<std::vector<fs::path>> written;
  std::vector<SweepResult> results;
  for (int run = 0; run < 2; ++run) {
    results.push_back(RunSweep(data, exp, train));
    written.push_back(WriteSweep(results.back(), root / std::to_string(run)));
  }
  std::size_t csvs = 0;
  for (const auto& f : written[0]) {
    if (f.extension() != ".csv") continue;
    ++csvs;
    const fs::path twin = root / "1" / f.filename();
    out.Require(fs::exists(twin) && Slurp(f) == Slurp(twin), "csv differs: " + f.filename().string());
  }
  out.Require(csvs == exp.methods.size() * exp.end_tasks.size(), "missing csv outputs");
  bool monotone = true;
  for (const auto& curve : results[0].curves) {
    for (const auto& rc : curve.per_model) {
      for (std::size_t t = 1; t < rc.points.size(); ++t) {
        const auto& a = rc.points[t - 1];
        const auto& b = rc.points[t];
        if (!std::isnan(b.fpr) && b.fpr > a.fpr) monotone = false;
        if (!std::isnan(b.tpr) && b.tpr > a.tpr) monotone = false;
      }
    }
  }
  out.Require(monotone, "per-model curve not monotone");
  out.note << " csvs=" << csvs << " identical";
  fs::remove_all(root);
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path data_dir = argc > 1 ? fs::path(argv[1]) : fs::path("data");
  bool all = true;
  all &= Report(1, "completeness and linearity suites", Completeness, kBudget1);
  all &= Report(2, "zigzag forge hits target attributions", ZigzagForge, 0.0);
  all &= Report(3, "forged pairs defeat complete attributions", Impossibility, kBudget3);
  all &= Report(4, "random polynomial sign disagreement", SignDisagreement, kBudget4);
  all &= Report(5, "query test rates", QueryExactness, kBudget5);
  all &= Report(6, "adversarial cell bound", Adversary, kBudget6);
  all &= Report(7, "sweep determinism",
                [&](Outcome& o) { Determinism(o, data_dir); }, 0.0);
  return all ? 0 : 1;
}
