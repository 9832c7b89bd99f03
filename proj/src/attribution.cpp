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

#include "attrib/attribution.hpp"

#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include "attrib/error.hpp"
#include "attrib/rng.hpp"

namespace attrib {

namespace {

constexpr std::size_t kMaxExactFeatures = 20;

using Eigen::Index;

void CheckExample(const Model& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw InvalidArgument("example has dimension " + std::to_string(x.size()) +
                          ", model expects " + std::to_string(model.input_dim()));
  }
}

void CheckBaseline(const Model& model, const Baseline& b) {
  if (b.dim() != model.input_dim()) {
    throw InvalidArgument("baseline has dimension " + std::to_string(b.dim()) +
                          ", model expects " + std::to_string(model.input_dim()));
  }
}

// Shapley weight omega(i) = i! (p-i-1)! / p! = 1 / (p * C(p-1, i)).
std::vector<double> ShapleyWeights(std::size_t p) {
  std::vector<double> w(p);
  double binom = 1.0;  // C(p-1, i)
  for (std::size_t i = 0; i < p; ++i) {
    if (i > 0) binom = binom * static_cast<double>(p - i) / static_cast<double>(i);
    w[i] = 1.0 / (static_cast<double>(p) * binom);
  }
  return w;
}

// Sums per-item matrices in index order.
Eigen::MatrixXd OrderedMean(const std::vector<Eigen::MatrixXd>& parts,
                            Index rows, Index cols, double denom) {
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(rows, cols);
  for (const auto& m : parts) total += m;
  return total / denom;
}

Attribution Make(Eigen::MatrixXd scores, Method m, const MethodSettings& s) {
  Attribution a;
  a.scores = std::move(scores);
  a.method = m;
  a.settings = s;
  return a;
}

std::vector<std::vector<double>> IntegrationPoints(const Baseline& b,
                                                   const MethodSettings& s) {
  if (b.is_discrete()) {
    const auto sup = b.support();
    return {sup.begin(), sup.end()};
  }
  return b.Sample(DeriveSeed(s.rng_seed, 0x16), s.shap_baseline_samples);
}

}  // namespace

std::string_view MethodTag(Method m) {
  switch (m) {
    case Method::kShapExact: return "shap_exact";
    case Method::kShapSampled: return "shap";
    case Method::kIntegratedGradients: return "ig";
    case Method::kGradient: return "gradient";
    case Method::kSmoothGrad: return "smoothgrad";
    case Method::kLime: return "lime";
  }
  return "unknown";
}

Method ParseMethod(std::string_view tag) {
  for (Method m : {Method::kShapExact, Method::kShapSampled,
                   Method::kIntegratedGradients, Method::kGradient,
                   Method::kSmoothGrad, Method::kLime}) {
    if (MethodTag(m) == tag) return m;
  }
  if (tag == "shap_sampled") return Method::kShapSampled;
  if (tag == "integrated_gradients") return Method::kIntegratedGradients;
  throw InvalidArgument("unknown attribution method '" + std::string(tag) + "'");
}

void MethodSettings::Validate() const {
  if (ig_steps < 1 || shap_baseline_samples < 1 || shap_subset_samples < 1 ||
      smoothgrad_samples < 1 || lime_samples < 1) {
    throw InvalidArgument("attribution sample counts must be >= 1");
  }
  if (!(smoothgrad_sigma > 0.0) || !(lime_sigma > 0.0)) {
    throw InvalidArgument("attribution sigmas must be > 0");
  }
  if (!(lime_lambda > 0.0)) throw InvalidArgument("lime_lambda must be > 0");
}

Attribution ShapExact(const Model& model, const Baseline& baseline,
                      std::span<const double> x, Exec exec) {
  CheckExample(model, x);
  CheckBaseline(model, baseline);
  if (!baseline.is_discrete()) {
    throw InvalidArgument("exact SHAP needs a pointmass or empirical baseline, got " +
                          std::string(baseline.kind()));
  }
  const std::size_t p = x.size();
  if (p > kMaxExactFeatures) {
    throw InvalidArgument("exact SHAP enumerates 2^p coalitions; p = " +
                          std::to_string(p) + " exceeds 20");
  }
  const std::size_t q = model.output_dim();
  const auto weights = ShapleyWeights(p);
  const auto support = baseline.support();
  const std::size_t n_masks = std::size_t{1} << p;

  std::vector<Eigen::MatrixXd> parts(support.size());
  ForEachIndex(exec, static_cast<std::int64_t>(support.size()), [&](std::int64_t s) {
    const auto& ref = support[static_cast<std::size_t>(s)];
    // values[mask * q + k]: output k at the hybrid taking x on `mask`.
    std::vector<double> values(n_masks * q);
    std::vector<double> hybrid(p);
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
      for (std::size_t j = 0; j < p; ++j) {
        hybrid[j] = (mask >> j & 1U) ? x[j] : ref[j];
      }
      const auto y = model.Evaluate(hybrid);
      std::copy(y.begin(), y.end(), values.begin() + static_cast<std::ptrdiff_t>(mask * q));
    }
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(static_cast<Index>(p), static_cast<Index>(q));
    for (std::size_t j = 0; j < p; ++j) {
      const std::size_t bit = std::size_t{1} << j;
      for (std::size_t mask = 0; mask < n_masks; ++mask) {
        if (mask & bit) continue;
        const double w = weights[static_cast<std::size_t>(std::popcount(mask))];
        for (std::size_t k = 0; k < q; ++k) {
          phi(static_cast<Index>(j), static_cast<Index>(k)) +=
              w * (values[(mask | bit) * q + k] - values[mask * q + k]);
        }
      }
    }
    parts[static_cast<std::size_t>(s)] = std::move(phi);
  });
  return Make(OrderedMean(parts, static_cast<Index>(p), static_cast<Index>(q),
                          static_cast<double>(support.size())),
              Method::kShapExact, MethodSettings{});
}

Attribution ShapSampled(const Model& model, const Baseline& baseline,
                        std::span<const double> x,
                        const MethodSettings& settings, Exec exec) {
  settings.Validate();
  CheckExample(model, x);
  CheckBaseline(model, baseline);
  const std::size_t p = x.size();
  const std::size_t q = model.output_dim();
  const auto refs = baseline.Sample(DeriveSeed(settings.rng_seed, 0x5A),
                                    static_cast<std::size_t>(settings.shap_baseline_samples));
  const std::size_t n_refs = refs.size();
  const auto n_subsets = static_cast<std::size_t>(settings.shap_subset_samples);

  // One work item per (feature, baseline draw), each with its own stream.
  std::vector<Eigen::VectorXd> parts(p * n_refs);
  ForEachIndex(exec, static_cast<std::int64_t>(p * n_refs), [&](std::int64_t item) {
    const std::size_t j = static_cast<std::size_t>(item) / n_refs;
    const std::size_t r = static_cast<std::size_t>(item) % n_refs;
    Rng rng = MakeRng(DeriveSeed(settings.rng_seed, 0x5B), static_cast<std::uint64_t>(item));
    std::uniform_int_distribution<std::size_t> size_dist(0, p - 1);
    std::vector<std::size_t> others;
    for (std::size_t i = 0; i < p; ++i) {
      if (i != j) others.push_back(i);
    }
    std::vector<double> with(p), without(p);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Index>(q));
    for (std::size_t s = 0; s < n_subsets; ++s) {
      const std::size_t size = size_dist(rng);
      // Partial Fisher-Yates: the first `size` entries form the coalition.
      for (std::size_t i = 0; i < size; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, others.size() - 1);
        std::swap(others[i], others[pick(rng)]);
      }
      for (std::size_t i = 0; i < p; ++i) without[i] = refs[r][i];
      for (std::size_t i = 0; i < size; ++i) without[others[i]] = x[others[i]];
      with = without;
      with[j] = x[j];
      const auto y1 = model.Evaluate(with);
      const auto y0 = model.Evaluate(without);
      for (std::size_t k = 0; k < q; ++k) acc[static_cast<Index>(k)] += y1[k] - y0[k];
    }
    parts[static_cast<std::size_t>(item)] = std::move(acc);
  });

  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(static_cast<Index>(p), static_cast<Index>(q));
  for (std::size_t item = 0; item < parts.size(); ++item) {
    scores.row(static_cast<Index>(item / n_refs)) += parts[item].transpose();
  }
  scores /= static_cast<double>(n_refs * n_subsets);
  return Make(std::move(scores), Method::kShapSampled, settings);
}

Attribution IntegratedGradients(const Model& model, const Baseline& baseline,
                                std::span<const double> x,
                                const MethodSettings& settings, Exec exec) {
  settings.Validate();
  CheckExample(model, x);
  CheckBaseline(model, baseline);
  const std::size_t p = x.size();
  const std::size_t q = model.output_dim();
  const auto refs = IntegrationPoints(baseline, settings);
  const int steps = settings.ig_steps;

  std::vector<Eigen::MatrixXd> parts(refs.size());
  ForEachIndex(exec, static_cast<std::int64_t>(refs.size()), [&](std::int64_t r) {
    const auto& ref = refs[static_cast<std::size_t>(r)];
    std::vector<double> point(p);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(static_cast<Index>(p), static_cast<Index>(q));
    for (int t = 0; t < steps; ++t) {
      const double alpha = (t + 0.5) / steps;
      for (std::size_t j = 0; j < p; ++j) point[j] = ref[j] + alpha * (x[j] - ref[j]);
      acc += model.Gradient(point);
    }
    acc /= static_cast<double>(steps);
    for (std::size_t j = 0; j < p; ++j) acc.row(static_cast<Index>(j)) *= x[j] - ref[j];
    parts[static_cast<std::size_t>(r)] = std::move(acc);
  });
  return Make(OrderedMean(parts, static_cast<Index>(p), static_cast<Index>(q),
                          static_cast<double>(refs.size())),
              Method::kIntegratedGradients, settings);
}

Attribution GradientMethod(const Model& model, std::span<const double> x) {
  CheckExample(model, x);
  return Make(model.Gradient(x), Method::kGradient, MethodSettings{});
}

Attribution SmoothGrad(const Model& model, std::span<const double> x,
                       const MethodSettings& settings) {
  settings.Validate();
  CheckExample(model, x);
  Rng rng = MakeRng(settings.rng_seed, 0x56);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> point(x.size());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(static_cast<Index>(x.size()),
                                              static_cast<Index>(model.output_dim()));
  for (int s = 0; s < settings.smoothgrad_samples; ++s) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      point[j] = x[j] + settings.smoothgrad_sigma * noise(rng);
    }
    acc += model.Gradient(point);
  }
  return Make(acc / settings.smoothgrad_samples, Method::kSmoothGrad, settings);
}

Attribution Lime(const Model& model, std::span<const double> x,
                 const MethodSettings& settings) {
  settings.Validate();
  CheckExample(model, x);
  const auto p = static_cast<Index>(x.size());
  const auto q = static_cast<Index>(model.output_dim());
  Rng rng = MakeRng(settings.rng_seed, 0x11);
  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(p, q);
  std::vector<double> point(x.size());
  for (int s = 0; s < settings.lime_samples; ++s) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      point[j] = x[j] + settings.lime_sigma * noise(rng);
    }
    const auto y = model.Evaluate(point);
    const Eigen::Map<const Eigen::VectorXd> xp(point.data(), p);
    const Eigen::Map<const Eigen::RowVectorXd> yp(y.data(), q);
    gram.noalias() += xp * xp.transpose();
    rhs.noalias() += xp * yp;
  }
  const double n = settings.lime_samples;
  Eigen::MatrixXd system = gram / n;
  system.diagonal().array() += settings.lime_lambda;
  return Make(system.ldlt().solve(rhs / n), Method::kLime, settings);
}

Attribution Attribute(Method method, const Model& model,
                      const Baseline& baseline, std::span<const double> x,
                      const MethodSettings& settings, Exec exec) {
  switch (method) {
    case Method::kShapExact: {
      Attribution a = ShapExact(model, baseline, x, exec);
      a.settings = settings;
      return a;
    }
    case Method::kShapSampled: return ShapSampled(model, baseline, x, settings, exec);
    case Method::kIntegratedGradients:
      return IntegratedGradients(model, baseline, x, settings, exec);
    case Method::kGradient: return GradientMethod(model, x);
    case Method::kSmoothGrad: return SmoothGrad(model, x, settings);
    case Method::kLime: return Lime(model, x, settings);
  }
  throw InvalidArgument("unknown method");
}

bool VerifyCompleteness(Method method, const Model& model,
                        const Baseline& baseline, std::span<const double> x,
                        double tol, const MethodSettings& settings) {
  const Attribution a = Attribute(method, model, baseline, x, settings);
  const auto support = baseline.support();
  const std::size_t q = model.output_dim();
  std::vector<double> mean(q, 0.0);
  for (const auto& ref : support) {
    const auto y = model.Evaluate(ref);
    for (std::size_t k = 0; k < q; ++k) mean[k] += y[k];
  }
  const auto fx = model.Evaluate(x);
  for (std::size_t k = 0; k < q; ++k) {
    const double gap = fx[k] - mean[k] / static_cast<double>(support.size());
    const double total = a.scores.col(static_cast<Index>(k)).sum();
    if (!(std::abs(total - gap) <= tol)) return false;
  }
  return true;
}

bool VerifyLinearity(Method method, const std::vector<Component1D>& components,
                     const Baseline& baseline, std::span<const double> x,
                     double tol, const MethodSettings& settings) {
  const Model full{AdditiveModel(components)};
  const Attribution a = Attribute(method, full, baseline, x, settings);
  for (std::size_t j = 0; j < components.size(); ++j) {
    const Model part{AdditiveModel({components[j]})};
    const double xj[] = {x[j]};
    const Attribution aj =
        Attribute(method, part, baseline.Marginal(j), xj, settings);
    if (!(std::abs(a(j) - aj(0)) <= tol)) return false;
  }
  return true;
}

bool VerifyLinearity(Method method, const Model& model,
                     const Baseline& baseline, std::span<const double> x,
                     double tol, const MethodSettings& settings) {
  const AdditiveModel* additive = model.additive();
  if (additive == nullptr) {
    throw InvalidArgument("linearity check needs an additive model, got '" +
                          std::string(model.kind()) + "'");
  }
  return VerifyLinearity(method, additive->components(), baseline, x, tol, settings);
}

std::string AttributionToCsv(const Attribution& a) {
  std::ostringstream out;
  out.precision(17);
  out << "feature";
  for (Index k = 0; k < a.scores.cols(); ++k) out << ",output_" << k;
  out << '\n';
  for (Index j = 0; j < a.scores.rows(); ++j) {
    out << j;
    for (Index k = 0; k < a.scores.cols(); ++k) out << ',' << a.scores(j, k);
    out << '\n';
  }
  return out.str();
}

}  // namespace attrib
