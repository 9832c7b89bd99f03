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

// Feature attribution methods. Each maps (model, baseline, example) to a
// p x q score matrix. SHAP and Integrated Gradients are complete and linear;
// Gradient, SmoothGrad and LIME are local and ignore the baseline.

#ifndef ATTRIB_ATTRIBUTION_HPP_
#define ATTRIB_ATTRIBUTION_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "attrib/baseline.hpp"
#include "attrib/model.hpp"
#include "attrib/parallel.hpp"

namespace attrib {

enum class Method {
  kShapExact,
  kShapSampled,
  kIntegratedGradients,
  kGradient,
  kSmoothGrad,
  kLime,
};

std::string_view MethodTag(Method m);
// Accepts the tags returned by MethodTag ("shap_exact", "shap", "ig",
// "gradient", "smoothgrad", "lime").
Method ParseMethod(std::string_view tag);

struct MethodSettings {
  int ig_steps = 20;
  int shap_baseline_samples = 100;
  int shap_subset_samples = 500;
  double smoothgrad_sigma = 0.1;
  int smoothgrad_samples = 100;
  double lime_lambda = 1.0;
  double lime_sigma = 0.1;
  int lime_samples = 100;
  std::uint64_t rng_seed = 0;

  // Throws InvalidArgument unless counts >= 1, sigmas > 0, lambda > 0.
  void Validate() const;
};

struct Attribution {
  Eigen::MatrixXd scores;  // p x q
  Method method = Method::kGradient;
  MethodSettings settings;

  double operator()(std::size_t j, std::size_t k = 0) const {
    return scores(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
  }
};

// Exact SHAP by enumerating all 2^p coalitions for every support point of a
// Pointmass or Empirical baseline. Requires p <= 20.
Attribution ShapExact(const Model& model, const Baseline& baseline,
                      std::span<const double> x, Exec exec = Exec::kParallel);

// Monte Carlo SHAP: shap_baseline_samples baseline draws, and for every draw
// and feature shap_subset_samples coalitions drawn with the Shapley weights
// (uniform coalition size, then a uniform coalition of that size).
Attribution ShapSampled(const Model& model, const Baseline& baseline,
                        std::span<const double> x,
                        const MethodSettings& settings,
                        Exec exec = Exec::kParallel);

// Midpoint-rule Integrated Gradients with ig_steps nodes per path, averaged
// over the support of a discrete baseline, or over shap_baseline_samples
// draws of a continuous one.
Attribution IntegratedGradients(const Model& model, const Baseline& baseline,
                                std::span<const double> x,
                                const MethodSettings& settings,
                                Exec exec = Exec::kParallel);

Attribution GradientMethod(const Model& model, std::span<const double> x);

Attribution SmoothGrad(const Model& model, std::span<const double> x,
                       const MethodSettings& settings);

// Ridge regression without intercept on Gaussian perturbations of x, with the
// empirical expectation taken as the sample mean:
//   (A / n + lambda I) beta = b / n,  A = sum x' x'^T,  b = sum x' f(x')^T.
Attribution Lime(const Model& model, std::span<const double> x,
                 const MethodSettings& settings);

// Dispatches on `method`; local methods ignore `baseline`.
Attribution Attribute(Method method, const Model& model,
                      const Baseline& baseline, std::span<const double> x,
                      const MethodSettings& settings,
                      Exec exec = Exec::kParallel);

// |sum_j scores_jk - (f(x)_k - E f(X)_k)| <= tol for every output k. The
// baseline expectation is exact, so the baseline must be discrete.
bool VerifyCompleteness(Method method, const Model& model,
                        const Baseline& baseline, std::span<const double> x,
                        double tol, const MethodSettings& settings = {});

// Attribution of the additive model built from `components` agrees, feature
// by feature, with the 1-D attribution of that component under the marginal
// baseline.
bool VerifyLinearity(Method method, const std::vector<Component1D>& components,
                     const Baseline& baseline, std::span<const double> x,
                     double tol, const MethodSettings& settings = {});
// Rejects (InvalidArgument) models that are not additive.
bool VerifyLinearity(Method method, const Model& model,
                     const Baseline& baseline, std::span<const double> x,
                     double tol, const MethodSettings& settings = {});

// Rows are features, columns are outputs.
std::string AttributionToCsv(const Attribution& a);

}  // namespace attrib

#endif  // ATTRIB_ATTRIBUTION_HPP_
