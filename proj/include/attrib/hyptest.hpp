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

// Hypothesis tests on attributions: end-task ground truth (recourse and
// spurious features), threshold tests, worst-case specificity/sensitivity
// over finite model families, and ROC curves.

#ifndef ATTRIB_HYPTEST_HPP_
#define ATTRIB_HYPTEST_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attrib/model.hpp"

namespace attrib {

enum class TestKind {
  kRecourseSign,       // h(phi) = 1{phi > alpha}
  kSpuriousMagnitude,  // h(phi) = 1{|phi| > alpha}
};

std::string_view TestKindTag(TestKind kind);

struct ThresholdTest {
  TestKind kind = TestKind::kRecourseSign;
  double alpha = 0.0;
};

int RunThresholdTest(const ThresholdTest& test, double score);

inline constexpr int kNeighbourhoodGrid = 20;

// 20 copies of x with feature j shifted by offsets evenly spaced inside the
// open interval (-fraction * range, fraction * range):
//   offset_i = fraction * range * (2 (i + 1) / 21 - 1),  i = 0..19.
// The grid is symmetric, skips 0, and has 10 offsets of each sign.
struct Neighbourhood {
  std::vector<double> x;
  std::size_t feature = 0;
  double fraction = 0.1;
  double range = 1.0;

  std::vector<double> Offsets() const;
  double radius() const { return fraction * range; }
  // Model output k at every grid point, in offset order.
  std::vector<double> Outputs(const Model& model, std::size_t output_k) const;
};

// 1 iff the mean output over the positive offsets exceeds the mean over the
// negative offsets.
int RecourseGroundTruth(const Model& model, const Neighbourhood& nb,
                        std::size_t output_k);

// Population variance of the model output over the neighbourhood grid.
double NeighbourhoodVariance(const Model& model, const Neighbourhood& nb,
                             std::size_t output_k);

// Linear-interpolation quantile (q in [0, 1]) of `values`.
double Quantile(std::vector<double> values, double q);

// Threshold eps for the spurious-feature task: the `quantile` of the
// neighbourhood variance pooled over every (calibration example, feature)
// pair. `ranges[j]` is the dataset range of feature j; features with
// `include[j] == false` (categoricals) are skipped.
double SpuriousThreshold(const Model& model,
                         std::span<const std::vector<double>> calibration,
                         std::span<const double> ranges,
                         const std::vector<bool>& include, double fraction,
                         std::size_t output_k, double quantile = 0.8);

// 1 (sensitive) iff the neighbourhood variance exceeds eps.
int SpuriousGroundTruth(const Model& model, const Neighbourhood& nb,
                        std::size_t output_k, double eps);

// Calibrates eps from `calibration` (pooled over all features, see
// SpuriousThreshold) and labels nb. Throws InvalidArgument when empty.
int SpuriousGroundTruth(const Model& model, const Neighbourhood& nb,
                        std::size_t output_k,
                        std::span<const std::vector<double>> calibration,
                        std::span<const double> ranges, double quantile = 0.8);

// Sup form: 1 iff max |f| over the positive-offset grid points is >= eps.
int SpuriousGroundTruthSup(const Model& model, const Neighbourhood& nb,
                           std::size_t output_k, double eps);

// Percentile (linear interpolation, p in [0, 100]).
double Percentile(std::vector<double> values, double p);

// `count` thresholds evenly spaced between the 1st and 99th percentile of
// the scores (signed scores for kRecourseSign, |scores| for
// kSpuriousMagnitude). A range no wider than tie_band is widened by 1 on
// each side. With tie_band > 0, a threshold within tie_band of a score is moved above
// that score, repeatedly, so near-equal scores never straddle a threshold.
std::vector<double> ThresholdGrid(std::span<const double> scores, TestKind kind,
                                  int count = 40, double tie_band = 0.0);

struct Confusion {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;
};

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;  // NaN when there are no negatives
  double tpr = 0.0;  // NaN when there are no positives
  Confusion counts;
};

struct RocCurve {
  std::vector<RocPoint> points;
  bool degenerate_labels = false;
  std::string method_tag;
  std::string dataset;
  std::string end_task;
};

struct Prediction {
  double score = 0.0;
  int truth = 0;
};

RocCurve BuildRocCurve(std::span<const Prediction> predictions, TestKind kind,
                       std::span<const double> thresholds);

struct ScenarioResult {
  // Worst case over the enumerated families.
  double spec = 0.0;
  double sens = 0.0;
  // Per-instance rates tn/(tn+fp) and tp/(tp+fn).
  double spec_rate = 0.0;
  double sens_rate = 0.0;
  Confusion counts;
};

using Attributor = std::function<double(const Model&)>;

// spec = min over null models of 1 - h(Phi(f)); sens = min over alternate
// models of h(Phi(f)). Throws InvalidArgument when a family is empty.
ScenarioResult ScenarioSpecSens(std::span<const Model> null_models,
                                std::span<const Model> alt_models,
                                const Attributor& attributor,
                                const ThresholdTest& test);

std::string RocCurveToCsv(const RocCurve& curve);

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (fpr, tpr)
};

// Standalone SVG with axes, the diagonal reference line, and one polyline
// per series.
std::string RocPlotSvg(const std::string& title,
                       std::span<const PlotSeries> series);

}  // namespace attrib

#endif  // ATTRIB_HYPTEST_HPP_
