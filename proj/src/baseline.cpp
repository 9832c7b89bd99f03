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

#include "attrib/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "attrib/error.hpp"
#include "attrib/rng.hpp"

namespace attrib {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Mass outside the domain tolerated before a baseline counts as
// misconfigured; Gaussian tails always leak a little.
constexpr double kOutsideDomainTolerance = 1e-9;

bool Finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); });
}

// [a, b] after clipping iv to [lo, hi]; returns false when empty.
bool Clip(const Interval& iv, double lo, double hi, double* a, double* b) {
  *a = std::max(iv.lo, lo);
  *b = std::min(iv.hi, hi);
  return *a < *b;
}

double DiscreteSum(std::span<const std::vector<double>> pts, std::size_t j,
                   const Interval& iv, bool first_moment) {
  double acc = 0.0;
  for (const auto& p : pts) {
    if (iv.Contains(p[j])) acc += first_moment ? p[j] : 1.0;
  }
  return acc / static_cast<double>(pts.size());
}

}  // namespace

double NormalCdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double NormalPdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

Baseline::Baseline(Variant v) : variant_(std::move(v)) {
  std::visit(
      Overloaded{
          [&](const Pointmass& b) {
            if (b.point.empty() || !Finite(b.point)) {
              throw InvalidArgument("pointmass needs a finite, non-empty point");
            }
            point_support_.push_back(b.point);
          },
          [&](const Empirical& b) {
            if (b.samples.empty()) {
              throw InvalidArgument("empirical baseline needs samples");
            }
            for (const auto& s : b.samples) {
              if (s.size() != b.samples.front().size() || s.empty() || !Finite(s)) {
                throw InvalidArgument("empirical samples must share a finite dimension");
              }
            }
          },
          [&](const UniformBox& b) {
            if (b.lo.empty() || b.lo.size() != b.hi.size()) {
              throw InvalidArgument("uniform box bounds differ in length");
            }
            for (std::size_t j = 0; j < b.lo.size(); ++j) {
              if (!(b.lo[j] < b.hi[j]) || !std::isfinite(b.lo[j]) ||
                  !std::isfinite(b.hi[j])) {
                throw InvalidArgument("uniform box needs lo < hi componentwise");
              }
            }
          },
          [&](const GaussianIso& b) {
            if (b.center.empty() || !Finite(b.center) || !(b.sigma > 0.0) ||
                !std::isfinite(b.sigma)) {
              throw InvalidArgument("gaussian baseline needs a center and sigma > 0");
            }
          },
      },
      variant_);
}

std::size_t Baseline::dim() const {
  return std::visit(Overloaded{
                        [](const Pointmass& b) { return b.point.size(); },
                        [](const Empirical& b) { return b.samples.front().size(); },
                        [](const UniformBox& b) { return b.lo.size(); },
                        [](const GaussianIso& b) { return b.center.size(); },
                    },
                    variant_);
}

std::string_view Baseline::kind() const {
  return std::visit(Overloaded{
                        [](const Pointmass&) { return "pointmass"; },
                        [](const Empirical&) { return "empirical"; },
                        [](const UniformBox&) { return "uniform_box"; },
                        [](const GaussianIso&) { return "gaussian_iso"; },
                    },
                    variant_);
}

bool Baseline::is_discrete() const {
  return std::holds_alternative<Pointmass>(variant_) ||
         std::holds_alternative<Empirical>(variant_);
}

std::span<const std::vector<double>> Baseline::support() const {
  if (const auto* e = std::get_if<Empirical>(&variant_)) return e->samples;
  if (std::holds_alternative<Pointmass>(variant_)) return point_support_;
  throw InvalidArgument("baseline '" + std::string(kind()) +
                        "' has no finite support");
}

void Baseline::CheckFeature(std::size_t j) const {
  if (j >= dim()) {
    throw InvalidArgument("feature index " + std::to_string(j) +
                          " out of range for baseline of dimension " +
                          std::to_string(dim()));
  }
}

std::vector<std::vector<double>> Baseline::Sample(std::uint64_t seed,
                                                  std::size_t count) const {
  Rng rng = MakeRng(seed, 0xBA5E);
  std::vector<std::vector<double>> out;
  out.reserve(count);
  std::visit(
      Overloaded{
          [&](const Pointmass& b) { out.assign(count, b.point); },
          [&](const Empirical& b) {
            std::uniform_int_distribution<std::size_t> pick(0, b.samples.size() - 1);
            for (std::size_t i = 0; i < count; ++i) out.push_back(b.samples[pick(rng)]);
          },
          [&](const UniformBox& b) {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            for (std::size_t i = 0; i < count; ++i) {
              std::vector<double> s(b.lo.size());
              for (std::size_t j = 0; j < s.size(); ++j) {
                s[j] = b.lo[j] + (b.hi[j] - b.lo[j]) * u(rng);
              }
              out.push_back(std::move(s));
            }
          },
          [&](const GaussianIso& b) {
            std::normal_distribution<double> n(0.0, 1.0);
            for (std::size_t i = 0; i < count; ++i) {
              std::vector<double> s(b.center.size());
              for (std::size_t j = 0; j < s.size(); ++j) {
                s[j] = b.center[j] + b.sigma * n(rng);
              }
              out.push_back(std::move(s));
            }
          },
      },
      variant_);
  return out;
}

Baseline Baseline::Marginal(std::size_t j) const {
  CheckFeature(j);
  return std::visit(
      Overloaded{
          [&](const Pointmass& b) { return Baseline(Pointmass{{b.point[j]}}); },
          [&](const Empirical& b) {
            Empirical m;
            m.samples.reserve(b.samples.size());
            for (const auto& s : b.samples) m.samples.push_back({s[j]});
            return Baseline(std::move(m));
          },
          [&](const UniformBox& b) { return Baseline(UniformBox{{b.lo[j]}, {b.hi[j]}}); },
          [&](const GaussianIso& b) {
            return Baseline(GaussianIso{{b.center[j]}, b.sigma});
          },
      },
      variant_);
}

double Baseline::Mean(std::size_t j) const { return RawMoment(j, 1); }

double Baseline::IntervalMass(std::size_t j, const Interval& iv) const {
  CheckFeature(j);
  if (iv.Empty()) return 0.0;
  return std::visit(
      Overloaded{
          [&](const UniformBox& b) {
            double a, c;
            if (!Clip(iv, b.lo[j], b.hi[j], &a, &c)) return 0.0;
            return (c - a) / (b.hi[j] - b.lo[j]);
          },
          [&](const GaussianIso& b) {
            const double za = (iv.lo - b.center[j]) / b.sigma;
            const double zb = (iv.hi - b.center[j]) / b.sigma;
            // Upper tail via erfc of the mirrored argument keeps precision
            // when both endpoints sit far to the right.
            if (za > 0.0) return NormalCdf(-za) - NormalCdf(-zb);
            return NormalCdf(zb) - NormalCdf(za);
          },
          [&](const auto&) { return DiscreteSum(support(), j, iv, false); },
      },
      variant_);
}

double Baseline::TruncatedFirstMoment(std::size_t j, const Interval& iv) const {
  CheckFeature(j);
  if (iv.Empty()) return 0.0;
  return std::visit(
      Overloaded{
          [&](const UniformBox& b) {
            double a, c;
            if (!Clip(iv, b.lo[j], b.hi[j], &a, &c)) return 0.0;
            return (c - a) * (c + a) / (2.0 * (b.hi[j] - b.lo[j]));
          },
          [&](const GaussianIso& b) {
            const double za = (iv.lo - b.center[j]) / b.sigma;
            const double zb = (iv.hi - b.center[j]) / b.sigma;
            const double pa = std::isfinite(za) ? NormalPdf(za) : 0.0;
            const double pb = std::isfinite(zb) ? NormalPdf(zb) : 0.0;
            return b.center[j] * IntervalMass(j, iv) + b.sigma * (pa - pb);
          },
          [&](const auto&) { return DiscreteSum(support(), j, iv, true); },
      },
      variant_);
}

double Baseline::RawMoment(std::size_t j, int order) const {
  CheckFeature(j);
  if (order < 0) throw InvalidArgument("moment order must be non-negative");
  return std::visit(
      Overloaded{
          [&](const UniformBox& b) {
            const double lo = b.lo[j], hi = b.hi[j];
            return (std::pow(hi, order + 1) - std::pow(lo, order + 1)) /
                   ((order + 1) * (hi - lo));
          },
          [&](const GaussianIso& b) {
            // E[(c + s Z)^n] = sum_k C(n,k) c^(n-k) s^k E[Z^k], E[Z^k] = (k-1)!!
            double total = 0.0;
            double binom = 1.0;
            double z_moment = 1.0;  // E[Z^k] for even k
            for (int k = 0; k <= order; ++k) {
              if (k > 0) binom = binom * (order - k + 1) / k;
              if (k % 2 == 0) {
                if (k > 0) z_moment *= (k - 1);
                total += binom * std::pow(b.center[j], order - k) *
                         std::pow(b.sigma, k) * z_moment;
              }
            }
            return total;
          },
          [&](const auto&) {
            const auto pts = support();
            double acc = 0.0;
            for (const auto& p : pts) acc += std::pow(p[j], order);
            return acc / static_cast<double>(pts.size());
          },
      },
      variant_);
}

BaselineSupportCheck CheckBaselineSupport(const Baseline& b, std::span<const double> x,
                                  std::size_t j, double delta,
                                  const Range& domain) {
  if (!(delta > 0.0)) throw InvalidArgument("delta must be positive");
  if (j >= x.size()) throw InvalidArgument("feature index out of range");
  if (!(domain.lo < domain.hi)) {
    throw InvalidArgument("feature domain must be non-degenerate");
  }
  const double inside = b.IntervalMass(j, Interval::Closed(domain.lo, domain.hi));
  if (1.0 - inside > kOutsideDomainTolerance) {
    throw InvalidArgument("baseline places mass " + std::to_string(1.0 - inside) +
                          " outside the domain of feature " + std::to_string(j));
  }
  BaselineSupportCheck out;
  out.witness_lo = domain.lo;
  out.witness_hi = domain.hi;
  const double left_edge = x[j] - delta;
  const double right_edge = x[j] + delta;
  if (!(domain.lo < left_edge && right_edge < domain.hi)) return out;
  out.outside_mass = b.IntervalMass(j, Interval::Open(domain.lo, left_edge)) +
                     b.IntervalMass(j, Interval::Open(right_edge, domain.hi));
  out.holds = out.outside_mass > 0.0;
  return out;
}

}  // namespace attrib
