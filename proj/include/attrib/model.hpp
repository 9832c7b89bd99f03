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

// Model classes evaluated by the attribution methods: 1-D piecewise-linear
// and polynomial functions, additive combinations of them, and small ReLU
// MLPs. All models are immutable after construction and every operation is
// safe to call concurrently.
//
// Gradients use the right-derivative at kinks (breakpoints of piecewise
// linear functions, zero pre-activations of ReLU units).

#ifndef ATTRIB_MODEL_HPP_
#define ATTRIB_MODEL_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace attrib {

// Closed interval [lo, hi].
struct Range {
  double lo = 0.0;
  double hi = 0.0;
};
using Box = std::vector<Range>;

class PiecewiseLinear1D {
 public:
  // Continuous function interpolating (breakpoints[i], values[i]) and
  // extrapolating linearly with the given outer slopes. Breakpoints must be
  // strictly increasing and non-empty.
  PiecewiseLinear1D(std::vector<double> breakpoints, std::vector<double> values,
                    double left_slope, double right_slope);

  static PiecewiseLinear1D Constant(double value);
  // t -> value + slope * (t - anchor).
  static PiecewiseLinear1D Affine(double slope, double anchor, double value);

  double operator()(double t) const;
  double Derivative(double t) const;
  // Largest |slope| among the pieces that intersect [lo, hi].
  double MaxAbsSlope(double lo, double hi) const;

  std::size_t piece_count() const { return breakpoints_.size() + 1; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }
  double left_slope() const { return left_slope_; }
  double right_slope() const { return right_slope_; }

  friend bool operator==(const PiecewiseLinear1D&,
                         const PiecewiseLinear1D&) = default;

 private:
  // Index of the last breakpoint <= t, or -1 when t precedes all of them.
  std::ptrdiff_t Segment(double t) const;
  double SegmentSlope(std::size_t i) const;

  std::vector<double> breakpoints_;
  std::vector<double> values_;
  double left_slope_ = 0.0;
  double right_slope_ = 0.0;
};

class Polynomial1D {
 public:
  Polynomial1D() = default;
  // Degree-ascending coefficients; an empty list is the zero polynomial.
  explicit Polynomial1D(std::vector<double> coefficients);

  double operator()(double t) const;
  double Derivative(double t) const;
  Polynomial1D DerivativePolynomial() const;
  // Sound bound on sup |p'| over [lo, hi].
  double LipschitzBound(double lo, double hi) const;

  const std::vector<double>& coefficients() const { return coefficients_; }

  friend bool operator==(const Polynomial1D&, const Polynomial1D&) = default;

 private:
  std::vector<double> coefficients_;
};

// A 1-D function that equals `inner` on [lo, hi] and `outer` elsewhere. The
// counterexample forge emits these so that the forged model reproduces the
// requested local behaviour with the identical arithmetic path.
class StitchedComponent {
 public:
  StitchedComponent(PiecewiseLinear1D inner, double lo, double hi,
                    PiecewiseLinear1D outer);

  double operator()(double t) const;
  double Derivative(double t) const;
  double LipschitzBound(double lo, double hi) const;

  const PiecewiseLinear1D& inner() const { return inner_; }
  const PiecewiseLinear1D& outer() const { return outer_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  friend bool operator==(const StitchedComponent&,
                         const StitchedComponent&) = default;

 private:
  PiecewiseLinear1D inner_;
  double lo_;
  double hi_;
  PiecewiseLinear1D outer_;
};

using Component1D =
    std::variant<PiecewiseLinear1D, Polynomial1D, StitchedComponent>;

double EvaluateComponent(const Component1D& c, double t);
double DerivativeComponent(const Component1D& c, double t);
double LipschitzComponent(const Component1D& c, double lo, double hi);

// f(x) = sum_j components[j](x_j), scalar output.
class AdditiveModel {
 public:
  explicit AdditiveModel(std::vector<Component1D> components);

  double operator()(std::span<const double> x) const;
  std::size_t input_dim() const { return components_.size(); }
  const std::vector<Component1D>& components() const { return components_; }

 private:
  std::vector<Component1D> components_;
};

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

// ReLU on hidden layers, identity on the output layer.
class MlpModel {
 public:
  explicit MlpModel(std::vector<DenseLayer> layers);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t hidden_units() const;
  const std::vector<DenseLayer>& layers() const { return layers_; }

  Eigen::VectorXd Forward(std::span<const double> x) const;
  // p x q Jacobian transpose (column k is the gradient of output k).
  Eigen::MatrixXd Gradient(std::span<const double> x) const;
  // Product of infinity-norms of the weight matrices, per output row of the
  // last layer; the maximum over outputs is returned.
  double LipschitzBound() const;

 private:
  std::vector<DenseLayer> layers_;
};

class Model {
 public:
  using Variant =
      std::variant<PiecewiseLinear1D, Polynomial1D, AdditiveModel, MlpModel>;

  Model(Variant v, std::optional<double> lipschitz = std::nullopt);  // NOLINT

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::string_view kind() const;

  // Throws InvalidArgument when x.size() != input_dim().
  std::vector<double> Evaluate(std::span<const double> x) const;
  double EvaluateOutput(std::span<const double> x, std::size_t k) const;
  // p x q matrix of partial derivatives.
  Eigen::MatrixXd Gradient(std::span<const double> x) const;
  // Upper bound on the sup-norm Lipschitz constant over `box` (one Range per
  // input). Returns the cached bound when one was supplied.
  double LipschitzBound(const Box& box) const;

  const Variant& variant() const { return variant_; }
  const std::optional<double>& cached_lipschitz() const { return lipschitz_; }
  const AdditiveModel* additive() const {
    return std::get_if<AdditiveModel>(&variant_);
  }

 private:
  void CheckInput(std::span<const double> x) const;

  Variant variant_;
  std::optional<double> lipschitz_;
};

// Additive model whose only non-zero component is `component` on feature j.
Model SingleFeatureModel(std::size_t p, std::size_t j, Component1D component);

}  // namespace attrib

#endif  // ATTRIB_MODEL_HPP_
