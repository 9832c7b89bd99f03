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

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"

#include "attrib/attribution.hpp"
#include "attrib/error.hpp"
#include "attrib/forge.hpp"
#include "attrib/hyptest.hpp"
#include "attrib/rng.hpp"
#include "attrib/suites.hpp"

using namespace attrib;

namespace {

Model Linear(std::vector<double> w) {
  std::vector<Component1D> comps;
  for (double v : w) comps.emplace_back(PiecewiseLinear1D::Affine(v, 0.0, 0.0));
  return Model(AdditiveModel(std::move(comps)));
}

const Range kUnit{-1.0, 1.0};

}  // namespace

TEST_CASE("threshold tests") {
  CHECK(RunThresholdTest({TestKind::kRecourseSign, 0.0}, 2.0) == 1);
  CHECK(RunThresholdTest({TestKind::kRecourseSign, 0.0}, 0.0) == 0);
  CHECK(RunThresholdTest({TestKind::kSpuriousMagnitude, 1.0}, -2.0) == 1);
  CHECK(RunThresholdTest({TestKind::kSpuriousMagnitude, 1.0}, 0.5) == 0);
  CHECK(RunThresholdTest({TestKind::kSpuriousMagnitude, 1.0}, 1.0) == 0);
}

TEST_CASE("neighbourhood grid") {
  const Neighbourhood nb{{0.5, 2.0}, 1, 0.1, 3.0};
  const auto off = nb.Offsets();
  REQUIRE(off.size() == 20);
  CHECK(std::count_if(off.begin(), off.end(), [](double o) { return o > 0; }) == 10);
  CHECK(std::count_if(off.begin(), off.end(), [](double o) { return o < 0; }) == 10);
  for (std::size_t i = 0; i < off.size(); ++i) {
    CHECK(std::abs(off[i]) < nb.radius());
    CHECK(off[i] == doctest::Approx(-off[off.size() - 1 - i]));
    if (i > 0) CHECK(off[i] - off[i - 1] == doctest::Approx(2 * 0.3 / 21));
  }
  const auto out = nb.Outputs(Linear({0.0, 1.0}), 0);
  CHECK(out.front() == doctest::Approx(2.0 + off.front()));
  CHECK_THROWS_AS(Neighbourhood({{0.5}, 1, 0.1, 1.0}).Outputs(Linear({1.0}), 0), InvalidArgument);
}

TEST_CASE("recourse ground truth") {
  const Neighbourhood nb{{0.2, -0.4}, 0, 0.1, 2.0};
  CHECK(RecourseGroundTruth(Linear({1.0, 0.0}), nb, 0) == 1);
  CHECK(RecourseGroundTruth(Linear({-1.0, 0.0}), nb, 0) == 0);
  CHECK(RecourseGroundTruth(Linear({0.0, 5.0}), nb, 0) == 0);

  const std::vector<double> x{0.2, -0.4};
  const Baseline b(Empirical{{{0.9, 0.9}, {-0.9, -0.9}, {0.7, -0.8}}});
  const Neighbourhood forged_nb{x, 0, 0.1, 1.0};
  const auto beh = RecourseBehaviours(x, 0, forged_nb.radius());
  const auto pair = ForgePair(beh.first, beh.second, b, kUnit, 0.0);
  CHECK(RecourseGroundTruth(pair.first.model, forged_nb, 0) == 0);
  CHECK(RecourseGroundTruth(pair.second.model, forged_nb, 0) == 1);
  CHECK(std::abs(ShapExact(pair.first.model, b, x)(0) - ShapExact(pair.second.model, b, x)(0)) <=
        2e-6);
}

TEST_CASE("quantiles") {
  CHECK(Quantile({4.0, 1.0, 3.0, 2.0}, 0.5) == 2.5);
  CHECK(Quantile({4.0, 1.0, 3.0, 2.0}, 0.0) == 1.0);
  CHECK(Quantile({4.0, 1.0, 3.0, 2.0}, 1.0) == 4.0);
  CHECK(Percentile({0.0, 10.0}, 80) == doctest::Approx(8.0));
  CHECK_THROWS_AS(Quantile({}, 0.5), InvalidArgument);
}

TEST_CASE("spurious ground truth") {
  Rng rng = MakeRng(2, 0);
  std::vector<std::vector<double>> calib;
  for (int i = 0; i < 100; ++i) calib.push_back(RandomPoint(rng, 7, -1.0, 1.0));
  const std::vector<double> ranges(7, 2.0);
  const std::vector<double> x{0.1, 0.2, 0.3, -0.1, -0.2, -0.3, 0.0};

  const Model flat(AdditiveModel(std::vector<Component1D>(7, PiecewiseLinear1D::Constant(1.0))));
  CHECK(SpuriousGroundTruth(flat, {x, 0, 0.1, 2.0}, 0, calib, ranges) == 0);

  // One dominant feature among six nearly flat ones: its variance sits above
  // the pooled 0.8 quantile.
  const Model dom = Linear({5.0, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01});
  CHECK(SpuriousGroundTruth(dom, {x, 0, 0.1, 2.0}, 0, calib, ranges) == 1);
  CHECK(SpuriousGroundTruth(dom, {x, 3, 0.1, 2.0}, 0, calib, ranges) == 0);
  const double eps = SpuriousThreshold(dom, calib, ranges, {}, 0.1, 0);
  CHECK(eps == doctest::Approx(NeighbourhoodVariance(dom, {x, 4, 0.1, 2.0}, 0)));
  std::vector<bool> include(7, true);
  include[1] = include[2] = include[3] = include[4] = include[5] = false;
  // With only features 0 and 6 pooled, half the pairs have the large
  // variance, so the 0.8 quantile is the large value itself.
  CHECK(SpuriousThreshold(dom, calib, ranges, include, 0.1, 0) ==
        doctest::Approx(NeighbourhoodVariance(dom, {x, 0, 0.1, 2.0}, 0)));

  CHECK_THROWS_AS(SpuriousGroundTruth(dom, {x, 0, 0.1, 2.0}, 0,
                                      std::span<const std::vector<double>>{}, ranges),
                  InvalidArgument);
}

TEST_CASE("spurious forged pairs") {
  const std::vector<double> x{0.3};
  const Baseline b(UniformBox{{-1.0}, {1.0}});
  const Neighbourhood nb{x, 0, 0.1, 2.0};
  const auto flat = SpuriousBehaviours(x, 0, nb.radius(), 0.1, false);
  const auto pair = ForgePair(flat.first, flat.second, b, kUnit, 0.0);
  CHECK(SpuriousGroundTruthSup(pair.first.model, nb, 0, 0.05) == 0);
  CHECK(SpuriousGroundTruthSup(pair.second.model, nb, 0, 0.05) == 1);

  const auto ramp = SpuriousBehaviours(x, 0, nb.radius(), 0.1, true);
  const auto rp = ForgePair(ramp.first, ramp.second, b, kUnit, 0.0);
  CHECK(SpuriousGroundTruth(rp.first.model, nb, 0, 0.0) == 0);
  CHECK(SpuriousGroundTruth(rp.second.model, nb, 0, 0.0) == 1);
}

TEST_CASE("threshold grid") {
  std::vector<double> scores;
  for (int i = 0; i <= 100; ++i) scores.push_back(i - 50.0);
  const auto signed_grid = ThresholdGrid(scores, TestKind::kRecourseSign);
  REQUIRE(signed_grid.size() == 40);
  CHECK(signed_grid.front() == doctest::Approx(-49.0));
  CHECK(signed_grid.back() == doctest::Approx(49.0));
  CHECK(std::is_sorted(signed_grid.begin(), signed_grid.end()));
  const auto mag = ThresholdGrid(scores, TestKind::kSpuriousMagnitude);
  CHECK(mag.front() >= 0.0);
  CHECK(mag.back() == doctest::Approx(49.5).epsilon(0.02));
  const std::vector<double> same(10, 2.0);
  const auto wide = ThresholdGrid(same, TestKind::kRecourseSign);
  CHECK(wide.front() == doctest::Approx(1.0));
  CHECK(wide.back() == doctest::Approx(3.0));
}

TEST_CASE("threshold grid steps over near-equal scores") {
  const double scores[] = {0.3, 0.3 + 1e-9, -0.5, -0.5 - 5e-10, 0.9};
  const auto grid = ThresholdGrid(scores, TestKind::kRecourseSign, 40, 1e-6);
  CHECK(grid.size() == 40);
  CHECK(std::is_sorted(grid.begin(), grid.end()));
  for (double a : grid) {
    for (double s : scores) CHECK(std::abs(a - s) > 1e-6);
  }
  // A lone pair spans less than the band and is widened around it.
  const double pair[] = {0.25, 0.25 + 1e-8};
  const auto wide = ThresholdGrid(pair, TestKind::kRecourseSign, 40, 2e-6);
  CHECK(wide.front() < 0.25);
  CHECK(wide.back() > 0.25);
  for (double a : wide) CHECK((a < 0.25 - 2e-6 || a > 0.25 + 1e-8 + 2e-6));
  CHECK_THROWS_AS(ThresholdGrid(pair, TestKind::kRecourseSign, 40, -1.0), InvalidArgument);
}

TEST_CASE("roc on separable scores passes through the corner") {
  std::vector<Prediction> preds;
  for (int i = 0; i < 20; ++i) preds.push_back({i < 10 ? -1.0 - i : 1.0 + i, i < 10 ? 0 : 1});
  std::vector<double> scores;
  for (const auto& p : preds) scores.push_back(p.score);
  const auto grid = ThresholdGrid(scores, TestKind::kRecourseSign);
  const auto roc = BuildRocCurve(preds, TestKind::kRecourseSign, grid);
  CHECK(roc.points.size() == 40);
  CHECK(std::any_of(roc.points.begin(), roc.points.end(),
                    [](const RocPoint& p) { return p.fpr == 0.0 && p.tpr == 1.0; }));
  CHECK_FALSE(roc.degenerate_labels);
}

TEST_CASE("uninformative scores stay inside the permutation envelope") {
  // Simultaneous band: the largest |tpr - fpr| over the grid against the
  // same statistic under 300 label shuffles. At a 95% band, independent
  // replicates exceed it about 5% of the time.
  auto widest = [](const RocCurve& r) {
    double w = 0.0;
    for (const auto& p : r.points) w = std::max(w, std::abs(p.tpr - p.fpr));
    return w;
  };
  const int replicates = 40;
  int outside = 0;
  for (int rep = 0; rep < replicates; ++rep) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(rep));
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<Prediction> preds(200);
    for (std::size_t i = 0; i < preds.size(); ++i) preds[i] = {n01(rng), static_cast<int>(i % 2)};
    std::vector<double> scores;
    for (const auto& p : preds) scores.push_back(p.score);
    const auto grid = ThresholdGrid(scores, TestKind::kRecourseSign);
    const auto roc = BuildRocCurve(preds, TestKind::kRecourseSign, grid);
    for (std::size_t t = 0; t < grid.size(); ++t) {
      long tp = 0, fp = 0;
      for (const auto& p : preds) {
        if (p.score > grid[t]) (p.truth ? tp : fp)++;
      }
      CHECK(roc.points[t].tpr == tp / 100.0);
      CHECK(roc.points[t].fpr == fp / 100.0);
    }
    std::vector<double> null_widths;
    std::vector<int> labels;
    for (const auto& p : preds) labels.push_back(p.truth);
    for (int s = 0; s < 300; ++s) {
      std::shuffle(labels.begin(), labels.end(), rng);
      auto shuffled = preds;
      for (std::size_t i = 0; i < shuffled.size(); ++i) shuffled[i].truth = labels[i];
      null_widths.push_back(widest(BuildRocCurve(shuffled, TestKind::kRecourseSign, grid)));
    }
    if (widest(roc) > Quantile(null_widths, 0.95)) ++outside;
  }
  // P(Binomial(40, 0.05) > 6) < 0.01.
  CHECK(outside <= 6);
}

TEST_CASE("forged-pair populations sit on the diagonal") {
  std::vector<Prediction> preds;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double s = u(rng);
    preds.push_back({s, 0});
    preds.push_back({s, 1});
  }
  std::vector<double> scores;
  for (const auto& p : preds) scores.push_back(p.score);
  for (TestKind kind : {TestKind::kRecourseSign, TestKind::kSpuriousMagnitude}) {
    const auto roc = BuildRocCurve(preds, kind, ThresholdGrid(scores, kind));
    for (const auto& p : roc.points) CHECK(p.fpr == p.tpr);
  }
}

TEST_CASE("roc rates are monotone in the threshold") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int m = 0; m < 10; ++m) {
    std::vector<Prediction> preds;
    for (int i = 0; i < 60; ++i) {
      const int truth = i % 3 == 0;
      preds.push_back({n01(rng) + truth, truth});
    }
    std::vector<double> scores;
    for (const auto& p : preds) scores.push_back(p.score);
    for (TestKind kind : {TestKind::kRecourseSign, TestKind::kSpuriousMagnitude}) {
      const auto roc = BuildRocCurve(preds, kind, ThresholdGrid(scores, kind));
      for (std::size_t t = 1; t < roc.points.size(); ++t) {
        CHECK(roc.points[t].fpr <= roc.points[t - 1].fpr);
        CHECK(roc.points[t].tpr <= roc.points[t - 1].tpr);
        CHECK(roc.points[t].fpr >= 0.0);
        CHECK(roc.points[t].tpr <= 1.0);
      }
    }
  }
}

TEST_CASE("degenerate labels yield undefined rates") {
  const std::vector<Prediction> preds{{0.5, 1}, {-0.5, 1}};
  const std::vector<double> grid{0.0};
  const auto roc = BuildRocCurve(preds, TestKind::kRecourseSign, grid);
  CHECK(roc.degenerate_labels);
  CHECK(std::isnan(roc.points[0].fpr));
  CHECK(roc.points[0].tpr == 0.5);
  CHECK(RocCurveToCsv(roc).find("nan") != std::string::npos);
}

TEST_CASE("scenario specificity and sensitivity") {
  const std::vector<Model> one{Linear({1.0})};
  const Attributor grad = [](const Model& f) {
    return GradientMethod(f, std::vector<double>{0.0})(0);
  };
  const auto always = ScenarioSpecSens(one, one, grad, {TestKind::kRecourseSign, -1e300});
  CHECK(always.spec == 0.0);
  CHECK(always.sens == 1.0);
  CHECK_THROWS_AS(ScenarioSpecSens({}, one, grad, {}), InvalidArgument);

  // Recourse families from forged pairs at several examples.
  const Baseline b(UniformBox{{-1.0}, {1.0}});
  // Recourse pair forged at a single example.
  const auto beh = RecourseBehaviours({0.0}, 0, 0.1);
  const auto pair = ForgePair(beh.first, beh.second, b, kUnit, 0.0);
  const std::vector<Model> n0{pair.first.model}, n1{pair.second.model};
  const auto g = ScenarioSpecSens(n0, n1, grad, {TestKind::kRecourseSign, 0.0});
  CHECK(g.spec == 1.0);
  CHECK(g.sens == 1.0);
  const Baseline disc(Empirical{b.Sample(1, 500)});
  const auto dpair = ForgePair(beh.first, beh.second, disc, kUnit, 0.0);
  const std::vector<Model> d0{dpair.first.model}, d1{dpair.second.model};
  const Attributor shap = [&](const Model& f) {
    return ShapExact(f, disc, std::vector<double>{0.0})(0);
  };
  for (double alpha : {-1.0, -1e-3, 0.0, 1e-3, 1.0}) {
    const auto s = ScenarioSpecSens(d0, d1, shap, {TestKind::kRecourseSign, alpha});
    CHECK(s.spec + s.sens <= 1.0 + 1e-9);
  }
}

TEST_CASE("scenario result matches a brute-force double loop") {
  Rng rng = MakeRng(6, 0);
  const std::vector<double> x{0.2, -0.1};
  for (int c = 0; c < 20; ++c) {
    std::vector<Model> f0, f1;
    const int n0 = 1 + c % 10, n1 = 1 + (c * 7) % 10;
    for (int i = 0; i < n0; ++i) f0.push_back(RandomMlp(rng, 2, 4, 1));
    for (int i = 0; i < n1; ++i) f1.push_back(RandomMlp(rng, 2, 4, 1));
    const Attributor grad = [&](const Model& f) { return GradientMethod(f, x)(0); };
    const ThresholdTest test{c % 2 ? TestKind::kRecourseSign : TestKind::kSpuriousMagnitude,
                             0.1 * (c % 5)};
    const auto got = ScenarioSpecSens(f0, f1, grad, test);
    double spec = 1.0, sens = 1.0;
    Confusion cnt;
    for (const auto& f : f0) {
      const int h = RunThresholdTest(test, grad(f));
      spec = std::min(spec, 1.0 - h);
      (h ? cnt.fp : cnt.tn)++;
    }
    for (const auto& f : f1) {
      const int h = RunThresholdTest(test, grad(f));
      sens = std::min(sens, static_cast<double>(h));
      (h ? cnt.tp : cnt.fn)++;
    }
    CHECK(got.spec == spec);
    CHECK(got.sens == sens);
    CHECK(got.counts.tp == cnt.tp);
    CHECK(got.counts.fp == cnt.fp);
    CHECK(got.counts.tn == cnt.tn);
    CHECK(got.counts.fn == cnt.fn);
    CHECK(got.spec_rate == doctest::Approx(static_cast<double>(cnt.tn) / (cnt.tn + cnt.fp)));
    CHECK(got.sens_rate == doctest::Approx(static_cast<double>(cnt.tp) / (cnt.tp + cnt.fn)));
  }
}

TEST_CASE("roc outputs") {
  RocCurve roc;
  roc.points.push_back({0.5, 0.25, 0.75, {}});
  const std::string csv = RocCurveToCsv(roc);
  CHECK(csv.rfind("threshold,fpr,tpr", 0) == 0);
  CHECK(csv.find("0.5,0.25,0.75") != std::string::npos);
  const std::vector<PlotSeries> series{{"shap", {{0.0, 0.0}, {0.5, 0.6}, {1.0, 1.0}}}};
  const std::string svg = RocPlotSvg("demo", series);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
  CHECK(svg.find("shap") != std::string::npos);
}
