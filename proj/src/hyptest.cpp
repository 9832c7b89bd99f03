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

#include "attrib/hyptest.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "attrib/error.hpp"

namespace attrib {

std::string_view TestKindTag(TestKind kind) {
  return kind == TestKind::kRecourseSign ? "recourse" : "spurious";
}

int RunThresholdTest(const ThresholdTest& test, double score) {
  if (test.kind == TestKind::kRecourseSign) return score > test.alpha ? 1 : 0;
  return std::abs(score) > test.alpha ? 1 : 0;
}

std::vector<double> Neighbourhood::Offsets() const {
  std::vector<double> out(kNeighbourhoodGrid);
  const double r = radius();
  for (int i = 0; i < kNeighbourhoodGrid; ++i) {
    out[static_cast<std::size_t>(i)] =
        r * (2.0 * (i + 1) / (kNeighbourhoodGrid + 1) - 1.0);
  }
  return out;
}

std::vector<double> Neighbourhood::Outputs(const Model& model,
                                           std::size_t output_k) const {
  if (feature >= x.size()) throw InvalidArgument("neighbourhood feature out of range");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InvalidArgument("neighbourhood fraction must lie in (0, 1]");
  }
  if (output_k >= model.output_dim()) throw InvalidArgument("output index out of range");
  std::vector<double> out;
  out.reserve(kNeighbourhoodGrid);
  std::vector<double> point = x;
  for (double off : Offsets()) {
    point[feature] = x[feature] + off;
    out.push_back(model.EvaluateOutput(point, output_k));
  }
  return out;
}

int RecourseGroundTruth(const Model& model, const Neighbourhood& nb,
                        std::size_t output_k) {
  const auto offsets = nb.Offsets();
  const auto values = nb.Outputs(model, output_k);
  double up = 0.0, down = 0.0;
  int n_up = 0, n_down = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (offsets[i] > 0.0) {
      up += values[i];
      ++n_up;
    } else {
      down += values[i];
      ++n_down;
    }
  }
  return up / n_up > down / n_down ? 1 : 0;
}

double NeighbourhoodVariance(const Model& model, const Neighbourhood& nb,
                             std::size_t output_k) {
  const auto values = nb.Outputs(model, output_k);
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return var / static_cast<double>(values.size());
}

double Quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto below = static_cast<std::size_t>(std::floor(pos));
  const std::size_t above = std::min(below + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(below);
  return values[below] + frac * (values[above] - values[below]);
}

double Percentile(std::vector<double> values, double p) {
  return Quantile(std::move(values), p / 100.0);
}

double SpuriousThreshold(const Model& model,
                         std::span<const std::vector<double>> calibration,
                         std::span<const double> ranges,
                         const std::vector<bool>& include, double fraction,
                         std::size_t output_k, double quantile) {
  if (calibration.empty()) throw InvalidArgument("spurious calibration set is empty");
  std::vector<double> pooled;
  for (const auto& example : calibration) {
    if (example.size() != ranges.size()) {
      throw InvalidArgument("calibration example dimension does not match ranges");
    }
    for (std::size_t j = 0; j < example.size(); ++j) {
      if (!include.empty() && !include[j]) continue;
      Neighbourhood nb{example, j, fraction, ranges[j]};
      pooled.push_back(NeighbourhoodVariance(model, nb, output_k));
    }
  }
  if (pooled.empty()) throw InvalidArgument("no features eligible for calibration");
  return Quantile(std::move(pooled), quantile);
}

int SpuriousGroundTruth(const Model& model, const Neighbourhood& nb,
                        std::size_t output_k, double eps) {
  return NeighbourhoodVariance(model, nb, output_k) > eps ? 1 : 0;
}

int SpuriousGroundTruth(const Model& model, const Neighbourhood& nb,
                        std::size_t output_k,
                        std::span<const std::vector<double>> calibration,
                        std::span<const double> ranges, double quantile) {
  const double eps =
      SpuriousThreshold(model, calibration, ranges, {}, nb.fraction, output_k, quantile);
  return SpuriousGroundTruth(model, nb, output_k, eps);
}

int SpuriousGroundTruthSup(const Model& model, const Neighbourhood& nb,
                           std::size_t output_k, double eps) {
  const auto offsets = nb.Offsets();
  const auto values = nb.Outputs(model, output_k);
  double sup = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (offsets[i] > 0.0) sup = std::max(sup, std::abs(values[i]));
  }
  return sup >= eps ? 1 : 0;
}

std::vector<double> ThresholdGrid(std::span<const double> scores, TestKind kind,
                                  int count, double tie_band) {
  if (scores.empty()) throw InvalidArgument("threshold grid needs at least one score");
  if (!(tie_band >= 0.0)) throw InvalidArgument("tie band must be non-negative");
  if (count < 2) throw InvalidArgument("threshold grid needs at least two points");
  std::vector<double> s(scores.begin(), scores.end());
  if (kind == TestKind::kSpuriousMagnitude) {
    for (double& v : s) v = std::abs(v);
  }
  double lo = Percentile(s, 1.0);
  double hi = Percentile(s, 99.0);
  if (!(hi - lo > tie_band)) {
    lo -= 1.0;
    hi += 1.0;
  }
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
  }
  if (tie_band > 0.0) {
    // Step each threshold past any score cluster it lands in, so scores that
    // agree to within the band always receive the same decision.
    std::sort(s.begin(), s.end());
    for (double& a : grid) {
      for (;;) {
        const auto it = std::lower_bound(s.begin(), s.end(), a - tie_band);
        if (it == s.end() || *it > a + tie_band) break;
        a = *it + 1.5 * tie_band;
      }
    }
    std::sort(grid.begin(), grid.end());
  }
  return grid;
}

RocCurve BuildRocCurve(std::span<const Prediction> predictions, TestKind kind,
                       std::span<const double> thresholds) {
  RocCurve curve;
  curve.end_task = std::string(TestKindTag(kind));
  long positives = 0;
  for (const auto& p : predictions) positives += p.truth != 0;
  const long negatives = static_cast<long>(predictions.size()) - positives;
  curve.degenerate_labels = positives == 0 || negatives == 0;
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  for (double alpha : thresholds) {
    const ThresholdTest test{kind, alpha};
    RocPoint pt;
    pt.threshold = alpha;
    for (const auto& p : predictions) {
      const int h = RunThresholdTest(test, p.score);
      if (p.truth) {
        (h ? pt.counts.tp : pt.counts.fn)++;
      } else {
        (h ? pt.counts.fp : pt.counts.tn)++;
      }
    }
    pt.tpr = positives ? static_cast<double>(pt.counts.tp) / positives : kNaN;
    pt.fpr = negatives ? static_cast<double>(pt.counts.fp) / negatives : kNaN;
    curve.points.push_back(pt);
  }
  return curve;
}

ScenarioResult ScenarioSpecSens(std::span<const Model> null_models,
                                std::span<const Model> alt_models,
                                const Attributor& attributor,
                                const ThresholdTest& test) {
  if (null_models.empty() || alt_models.empty()) {
    throw InvalidArgument("scenario model families must be non-empty");
  }
  ScenarioResult r;
  r.spec = 1.0;
  r.sens = 1.0;
  for (const auto& f : null_models) {
    const int h = RunThresholdTest(test, attributor(f));
    r.spec = std::min(r.spec, 1.0 - h);
    (h ? r.counts.fp : r.counts.tn)++;
  }
  for (const auto& f : alt_models) {
    const int h = RunThresholdTest(test, attributor(f));
    r.sens = std::min(r.sens, static_cast<double>(h));
    (h ? r.counts.tp : r.counts.fn)++;
  }
  r.spec_rate = static_cast<double>(r.counts.tn) / (r.counts.tn + r.counts.fp);
  r.sens_rate = static_cast<double>(r.counts.tp) / (r.counts.tp + r.counts.fn);
  return r;
}

std::string RocCurveToCsv(const RocCurve& curve) {
  std::ostringstream os;
  os << std::setprecision(17) << "threshold,fpr,tpr\n";
  for (const auto& p : curve.points) {
    os << p.threshold << ',' << p.fpr << ',' << p.tpr << '\n';
  }
  return os.str();
}

std::string RocPlotSvg(const std::string& title,
                       std::span<const PlotSeries> series) {
  static constexpr const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c",
                                             "#9467bd", "#ff7f0e", "#8c564b",
                                             "#e377c2", "#17becf"};
  constexpr double kSize = 400.0, kMargin = 50.0;
  auto sx = [&](double v) { return kMargin + v * kSize; };
  auto sy = [&](double v) { return kMargin + (1.0 - v) * kSize; };
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  const double w = kSize + 2 * kMargin + 140;
  const double h = kSize + 2 * kMargin;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << sx(0.5) << "\" y=\"25\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  os << "<rect x=\"" << sx(0) << "\" y=\"" << sy(1) << "\" width=\"" << kSize
     << "\" height=\"" << kSize << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(1)
     << "\" y2=\"" << sy(1) << "\" stroke=\"grey\" stroke-dasharray=\"4 4\"/>\n";
  os << "<text x=\"" << sx(0.5) << "\" y=\"" << h - 12
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
     << "false positive rate</text>\n";
  os << "<text x=\"12\" y=\"" << sy(0.5) << "\" transform=\"rotate(-90 12 " << sy(0.5)
     << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
     << "true positive rate</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    os << "<text x=\"" << sx(v) << "\" y=\"" << sy(0) + 15
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << v
       << "</text>\n";
    os << "<text x=\"" << sx(0) - 5 << "\" y=\"" << sy(v) + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << v
       << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* colour = kColours[s % std::size(kColours)];
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"";
    for (const auto& [fpr, tpr] : series[s].points) {
      if (std::isnan(fpr) || std::isnan(tpr)) continue;
      os << sx(fpr) << ',' << sy(tpr) << ' ';
    }
    os << "\"/>\n";
    os << "<text x=\"" << sx(1) + 10 << "\" y=\"" << sy(1) + 15 + 16.0 * s
       << "\" fill=\"" << colour << "\" font-family=\"sans-serif\" font-size=\"12\">"
       << series[s].label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace attrib
