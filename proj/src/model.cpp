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

#include "attrib/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "attrib/error.hpp"

namespace attrib {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool AllFinite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(),
                     [](double d) { return std::isfinite(d); });
}

}  // namespace

// ---------------------------------------------------------------------------
// PiecewiseLinear1D

PiecewiseLinear1D::PiecewiseLinear1D(std::vector<double> breakpoints,
                                     std::vector<double> values,
                                     double left_slope, double right_slope)
    : breakpoints_(std::move(breakpoints)),
      values_(std::move(values)),
      left_slope_(left_slope),
      right_slope_(right_slope) {
  if (breakpoints_.empty()) {
    throw InvalidArgument("piecewise linear function needs a breakpoint");
  }
  if (breakpoints_.size() != values_.size()) {
    throw InvalidArgument("breakpoints and values differ in length");
  }
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i - 1] < breakpoints_[i])) {
      throw InvalidArgument("breakpoints must be strictly increasing");
    }
  }
  if (!AllFinite(breakpoints_) || !std::isfinite(left_slope_) ||
      !std::isfinite(right_slope_)) {
    throw InvalidArgument("piecewise linear function has non-finite geometry");
  }
}

PiecewiseLinear1D PiecewiseLinear1D::Constant(double value) {
  return PiecewiseLinear1D({0.0}, {value}, 0.0, 0.0);
}

PiecewiseLinear1D PiecewiseLinear1D::Affine(double slope, double anchor,
                                            double value) {
  return PiecewiseLinear1D({anchor}, {value}, slope, slope);
}

std::ptrdiff_t PiecewiseLinear1D::Segment(double t) const {
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  return (it - breakpoints_.begin()) - 1;
}

double PiecewiseLinear1D::SegmentSlope(std::size_t i) const {
  return (values_[i + 1] - values_[i]) / (breakpoints_[i + 1] - breakpoints_[i]);
}

double PiecewiseLinear1D::operator()(double t) const {
  const std::ptrdiff_t s = Segment(t);
  if (s < 0) return values_.front() + left_slope_ * (t - breakpoints_.front());
  const auto i = static_cast<std::size_t>(s);
  if (i + 1 == breakpoints_.size()) {
    return values_.back() + right_slope_ * (t - breakpoints_.back());
  }
  return values_[i] + (values_[i + 1] - values_[i]) * (t - breakpoints_[i]) /
                          (breakpoints_[i + 1] - breakpoints_[i]);
}

double PiecewiseLinear1D::Derivative(double t) const {
  const std::ptrdiff_t s = Segment(t);
  if (s < 0) return left_slope_;
  const auto i = static_cast<std::size_t>(s);
  if (i + 1 == breakpoints_.size()) return right_slope_;
  return SegmentSlope(i);
}

double PiecewiseLinear1D::MaxAbsSlope(double lo, double hi) const {
  double best = 0.0;
  if (lo < breakpoints_.front()) best = std::abs(left_slope_);
  if (hi >= breakpoints_.back()) best = std::max(best, std::abs(right_slope_));
  for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i) {
    if (lo < breakpoints_[i + 1] && hi >= breakpoints_[i]) {
      best = std::max(best, std::abs(SegmentSlope(i)));
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Polynomial1D

Polynomial1D::Polynomial1D(std::vector<double> coefficients)
    : coefficients_(std::move(coefficients)) {
  if (!AllFinite(coefficients_)) {
    throw InvalidArgument("polynomial has non-finite coefficients");
  }
}

double Polynomial1D::operator()(double t) const {
  double acc = 0.0;
  for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) {
    acc = acc * t + *it;
  }
  return acc;
}

Polynomial1D Polynomial1D::DerivativePolynomial() const {
  std::vector<double> d;
  for (std::size_t k = 1; k < coefficients_.size(); ++k) {
    d.push_back(static_cast<double>(k) * coefficients_[k]);
  }
  return Polynomial1D(std::move(d));
}

double Polynomial1D::Derivative(double t) const {
  double acc = 0.0;
  for (std::size_t k = coefficients_.size(); k-- > 1;) {
    acc = acc * t + static_cast<double>(k) * coefficients_[k];
  }
  return acc;
}

double Polynomial1D::LipschitzBound(double lo, double hi) const {
  const double m = std::max(std::abs(lo), std::abs(hi));
  double bound = 0.0;
  double power = 1.0;  // m^(k-1)
  for (std::size_t k = 1; k < coefficients_.size(); ++k) {
    bound += static_cast<double>(k) * std::abs(coefficients_[k]) * power;
    power *= m;
  }
  return bound;
}

// ---------------------------------------------------------------------------
// StitchedComponent

StitchedComponent::StitchedComponent(PiecewiseLinear1D inner, double lo,
                                     double hi, PiecewiseLinear1D outer)
    : inner_(std::move(inner)), lo_(lo), hi_(hi), outer_(std::move(outer)) {
  if (!(lo_ <= hi_) || !std::isfinite(lo_) || !std::isfinite(hi_)) {
    throw InvalidArgument("stitched component needs a finite interval");
  }
}

double StitchedComponent::operator()(double t) const {
  return (t >= lo_ && t <= hi_) ? inner_(t) : outer_(t);
}

double StitchedComponent::Derivative(double t) const {
  return (t >= lo_ && t < hi_) ? inner_.Derivative(t) : outer_.Derivative(t);
}

double StitchedComponent::LipschitzBound(double lo, double hi) const {
  double bound = 0.0;
  if (lo <= hi_ && hi >= lo_) {
    bound = inner_.MaxAbsSlope(std::max(lo, lo_), std::min(hi, hi_));
  }
  if (lo < lo_) bound = std::max(bound, outer_.MaxAbsSlope(lo, std::min(hi, lo_)));
  if (hi > hi_) bound = std::max(bound, outer_.MaxAbsSlope(std::max(lo, hi_), hi));
  return bound;
}

double EvaluateComponent(const Component1D& c, double t) {
  return std::visit([t](const auto& f) { return f(t); }, c);
}

double DerivativeComponent(const Component1D& c, double t) {
  return std::visit([t](const auto& f) { return f.Derivative(t); }, c);
}

double LipschitzComponent(const Component1D& c, double lo, double hi) {
  return std::visit(
      Overloaded{
          [&](const PiecewiseLinear1D& f) { return f.MaxAbsSlope(lo, hi); },
          [&](const Polynomial1D& f) { return f.LipschitzBound(lo, hi); },
          [&](const StitchedComponent& f) { return f.LipschitzBound(lo, hi); },
      },
      c);
}

// ---------------------------------------------------------------------------
// AdditiveModel

AdditiveModel::AdditiveModel(std::vector<Component1D> components)
    : components_(std::move(components)) {
  if (components_.empty()) {
    throw InvalidArgument("additive model needs at least one component");
  }
}

double AdditiveModel::operator()(std::span<const double> x) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < components_.size(); ++j) {
    acc += EvaluateComponent(components_[j], x[j]);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// MlpModel

MlpModel::MlpModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw InvalidArgument("MLP needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.weights.rows() != layer.bias.size() || layer.weights.rows() == 0 ||
        layer.weights.cols() == 0) {
      throw InvalidArgument("MLP layer " + std::to_string(l) +
                            " has inconsistent shape");
    }
    if (l > 0 && layer.weights.cols() != layers_[l - 1].weights.rows()) {
      throw InvalidArgument("MLP layer " + std::to_string(l) +
                            " does not chain with its predecessor");
    }
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
      throw InvalidArgument("MLP has non-finite parameters");
    }
  }
}

std::size_t MlpModel::input_dim() const {
  return static_cast<std::size_t>(layers_.front().weights.cols());
}

std::size_t MlpModel::output_dim() const {
  return static_cast<std::size_t>(layers_.back().weights.rows());
}

std::size_t MlpModel::hidden_units() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    n += static_cast<std::size_t>(layers_[l].weights.rows());
  }
  return n;
}

Eigen::VectorXd MlpModel::Forward(std::span<const double> x) const {
  Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(
      x.data(), static_cast<Eigen::Index>(x.size()));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::VectorXd z = layers_[l].weights * h + layers_[l].bias;
    if (l + 1 < layers_.size()) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  return h;
}

Eigen::MatrixXd MlpModel::Gradient(std::span<const double> x) const {
  Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(
      x.data(), static_cast<Eigen::Index>(x.size()));
  // jac = d(h)/d(x), starting from the identity.
  Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(h.size(), h.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::VectorXd z = layers_[l].weights * h + layers_[l].bias;
    jac = layers_[l].weights * jac;
    if (l + 1 < layers_.size()) {
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        // Right-derivative of ReLU at 0 is 1.
        if (z[i] < 0.0) {
          z[i] = 0.0;
          jac.row(i).setZero();
        }
      }
    }
    h = std::move(z);
  }
  return jac.transpose();
}

double MlpModel::LipschitzBound() const {
  double inner = 1.0;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    inner *= layers_[l].weights.cwiseAbs().rowwise().sum().maxCoeff();
  }
  return inner * layers_.back().weights.cwiseAbs().rowwise().sum().maxCoeff();
}

// ---------------------------------------------------------------------------
// Model

Model::Model(Variant v, std::optional<double> lipschitz)
    : variant_(std::move(v)), lipschitz_(lipschitz) {
  if (lipschitz_ && !(*lipschitz_ >= 0.0)) {
    throw InvalidArgument("Lipschitz bound must be non-negative");
  }
}

std::size_t Model::input_dim() const {
  return std::visit(Overloaded{
                        [](const AdditiveModel& m) { return m.input_dim(); },
                        [](const MlpModel& m) { return m.input_dim(); },
                        [](const auto&) { return std::size_t{1}; },
                    },
                    variant_);
}

std::size_t Model::output_dim() const {
  if (const auto* m = std::get_if<MlpModel>(&variant_)) return m->output_dim();
  return 1;
}

std::string_view Model::kind() const {
  return std::visit(Overloaded{
                        [](const PiecewiseLinear1D&) { return "pwl1d"; },
                        [](const Polynomial1D&) { return "poly"; },
                        [](const AdditiveModel&) { return "additive"; },
                        [](const MlpModel&) { return "mlp"; },
                    },
                    variant_);
}

void Model::CheckInput(std::span<const double> x) const {
  if (x.size() != input_dim()) {
    throw InvalidArgument("input has dimension " + std::to_string(x.size()) +
                          ", model expects " + std::to_string(input_dim()));
  }
}

std::vector<double> Model::Evaluate(std::span<const double> x) const {
  CheckInput(x);
  return std::visit(
      Overloaded{
          [&](const PiecewiseLinear1D& f) { return std::vector<double>{f(x[0])}; },
          [&](const Polynomial1D& f) { return std::vector<double>{f(x[0])}; },
          [&](const AdditiveModel& f) { return std::vector<double>{f(x)}; },
          [&](const MlpModel& f) {
            Eigen::VectorXd y = f.Forward(x);
            return std::vector<double>(y.data(), y.data() + y.size());
          },
      },
      variant_);
}

double Model::EvaluateOutput(std::span<const double> x, std::size_t k) const {
  CheckInput(x);
  if (k >= output_dim()) throw InvalidArgument("output index out of range");
  return std::visit(Overloaded{
                        [&](const PiecewiseLinear1D& f) { return f(x[0]); },
                        [&](const Polynomial1D& f) { return f(x[0]); },
                        [&](const AdditiveModel& f) { return f(x); },
                        [&](const MlpModel& f) {
                          return f.Forward(x)[static_cast<Eigen::Index>(k)];
                        },
                    },
                    variant_);
}

Eigen::MatrixXd Model::Gradient(std::span<const double> x) const {
  CheckInput(x);
  return std::visit(
      Overloaded{
          [&](const PiecewiseLinear1D& f) {
            Eigen::MatrixXd g(1, 1);
            g(0, 0) = f.Derivative(x[0]);
            return g;
          },
          [&](const Polynomial1D& f) {
            Eigen::MatrixXd g(1, 1);
            g(0, 0) = f.Derivative(x[0]);
            return g;
          },
          [&](const AdditiveModel& f) {
            Eigen::MatrixXd g(static_cast<Eigen::Index>(x.size()), 1);
            for (std::size_t j = 0; j < x.size(); ++j) {
              g(static_cast<Eigen::Index>(j), 0) =
                  DerivativeComponent(f.components()[j], x[j]);
            }
            return g;
          },
          [&](const MlpModel& f) { return f.Gradient(x); },
      },
      variant_);
}

double Model::LipschitzBound(const Box& box) const {
  if (lipschitz_) return *lipschitz_;
  if (box.size() != input_dim()) {
    throw InvalidArgument("box dimension does not match model input");
  }
  for (const auto& r : box) {
    if (!(r.lo < r.hi)) throw InvalidArgument("box must be non-degenerate");
  }
  return std::visit(
      Overloaded{
          [&](const PiecewiseLinear1D& f) {
            return f.MaxAbsSlope(box[0].lo, box[0].hi);
          },
          [&](const Polynomial1D& f) {
            return f.LipschitzBound(box[0].lo, box[0].hi);
          },
          [&](const AdditiveModel& f) {
            // |f(x) - f(x')| <= sum_j L_j |x_j - x'_j| <= (sum_j L_j) |x - x'|_inf
            double total = 0.0;
            for (std::size_t j = 0; j < box.size(); ++j) {
              total += LipschitzComponent(f.components()[j], box[j].lo,
                                          box[j].hi);
            }
            return total;
          },
          [&](const MlpModel& f) { return f.LipschitzBound(); },
      },
      variant_);
}

Model SingleFeatureModel(std::size_t p, std::size_t j, Component1D component) {
  if (j >= p) throw InvalidArgument("feature index out of range");
  std::vector<Component1D> comps(p, Component1D{Polynomial1D{}});
  comps[j] = std::move(component);
  return Model(AdditiveModel(std::move(comps)));
}

}  // namespace attrib
