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

#include "attrib/serialize.hpp"

#include <fstream>
#include <sstream>

#include "attrib/error.hpp"

namespace attrib {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

const Json& Field(const Json& j, const char* key) {
  if (!j.is_object()) throw ParseError("expected a JSON object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field '") + key + "'");
  return *it;
}

double Number(const Json& j, const char* what) {
  if (!j.is_number()) throw ParseError(std::string("field '") + what + "' must be a number");
  return j.get<double>();
}

std::vector<double> Vector(const Json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string("field '") + what + "' must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(Number(v, what));
  return out;
}

std::vector<std::vector<double>> Matrix(const Json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string("field '") + what + "' must be an array");
  std::vector<std::vector<double>> out;
  for (const auto& row : j) out.push_back(Vector(row, what));
  return out;
}

std::string Kind(const Json& j) {
  const Json& k = Field(j, "kind");
  if (!k.is_string()) throw ParseError("field 'kind' must be a string");
  return k.get<std::string>();
}

Json PwlToJson(const PiecewiseLinear1D& f) {
  Json j;
  j["kind"] = "pwl1d";
  j["breakpoints"] = f.breakpoints();
  j["values"] = f.values();
  j["left_slope"] = f.left_slope();
  j["right_slope"] = f.right_slope();
  return j;
}

PiecewiseLinear1D PwlFromJson(const Json& j) {
  return PiecewiseLinear1D(Vector(Field(j, "breakpoints"), "breakpoints"),
                           Vector(Field(j, "values"), "values"),
                           Number(Field(j, "left_slope"), "left_slope"),
                           Number(Field(j, "right_slope"), "right_slope"));
}

Json PolyToJson(const Polynomial1D& f) {
  Json j;
  j["kind"] = "poly";
  j["coefficients"] = f.coefficients();
  return j;
}

Json MlpToJson(const MlpModel& m) {
  Json layers = Json::array();
  for (const auto& layer : m.layers()) {
    Json weights = Json::array();
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      Json row = Json::array();
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) row.push_back(layer.weights(r, c));
      weights.push_back(std::move(row));
    }
    Json bias = Json::array();
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) bias.push_back(layer.bias(r));
    layers.push_back(Json{{"weights", std::move(weights)}, {"bias", std::move(bias)}});
  }
  Json j;
  j["kind"] = "mlp";
  j["layers"] = std::move(layers);
  return j;
}

MlpModel MlpFromJson(const Json& j) {
  const Json& layers = Field(j, "layers");
  if (!layers.is_array()) throw ParseError("field 'layers' must be an array");
  std::vector<DenseLayer> out;
  for (const auto& lj : layers) {
    const auto rows = Matrix(Field(lj, "weights"), "weights");
    const auto bias = Vector(Field(lj, "bias"), "bias");
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    DenseLayer layer{Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()),
                                     static_cast<Eigen::Index>(cols)),
                     Eigen::VectorXd(static_cast<Eigen::Index>(bias.size()))};
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != cols) throw ParseError("ragged weight matrix");
      for (std::size_t c = 0; c < cols; ++c) {
        layer.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      }
    }
    for (std::size_t r = 0; r < bias.size(); ++r) layer.bias(static_cast<Eigen::Index>(r)) = bias[r];
    out.push_back(std::move(layer));
  }
  return MlpModel(std::move(out));
}

}  // namespace

Json ComponentToJson(const Component1D& c) {
  return std::visit(Overloaded{
                        [](const PiecewiseLinear1D& f) { return PwlToJson(f); },
                        [](const Polynomial1D& f) { return PolyToJson(f); },
                        [](const StitchedComponent& f) {
                          Json j;
                          j["kind"] = "stitched";
                          j["inner"] = PwlToJson(f.inner());
                          j["lo"] = f.lo();
                          j["hi"] = f.hi();
                          j["outer"] = PwlToJson(f.outer());
                          return j;
                        },
                    },
                    c);
}

Component1D ComponentFromJson(const Json& j) {
  const std::string kind = Kind(j);
  if (kind == "pwl1d") return PwlFromJson(j);
  if (kind == "poly") return Polynomial1D(Vector(Field(j, "coefficients"), "coefficients"));
  if (kind == "stitched") {
    return StitchedComponent(PwlFromJson(Field(j, "inner")), Number(Field(j, "lo"), "lo"),
                             Number(Field(j, "hi"), "hi"), PwlFromJson(Field(j, "outer")));
  }
  throw ParseError("unknown component kind '" + kind + "'");
}

Json ModelToJson(const Model& m) {
  Json j = std::visit(Overloaded{
                          [](const PiecewiseLinear1D& f) { return PwlToJson(f); },
                          [](const Polynomial1D& f) { return PolyToJson(f); },
                          [](const AdditiveModel& f) {
                            Json comps = Json::array();
                            for (const auto& c : f.components()) comps.push_back(ComponentToJson(c));
                            Json out;
                            out["kind"] = "additive";
                            out["components"] = std::move(comps);
                            return out;
                          },
                          [](const MlpModel& f) { return MlpToJson(f); },
                      },
                      m.variant());
  if (m.cached_lipschitz()) j["lipschitz"] = *m.cached_lipschitz();
  return j;
}

Model ModelFromJson(const Json& j) {
  std::optional<double> lipschitz;
  if (j.is_object() && j.contains("lipschitz")) {
    lipschitz = Number(j.at("lipschitz"), "lipschitz");
  }
  const std::string kind = Kind(j);
  if (kind == "pwl1d") return Model(PwlFromJson(j), lipschitz);
  if (kind == "poly") {
    return Model(Polynomial1D(Vector(Field(j, "coefficients"), "coefficients")), lipschitz);
  }
  if (kind == "additive") {
    const Json& comps = Field(j, "components");
    if (!comps.is_array()) throw ParseError("field 'components' must be an array");
    std::vector<Component1D> out;
    for (const auto& c : comps) out.push_back(ComponentFromJson(c));
    return Model(AdditiveModel(std::move(out)), lipschitz);
  }
  if (kind == "mlp") return Model(MlpFromJson(j), lipschitz);
  throw ParseError("unknown model kind '" + kind + "'");
}

Json BaselineToJson(const Baseline& b) {
  return std::visit(
      Overloaded{
          [](const Pointmass& v) { return Json{{"kind", "pointmass"}, {"point", v.point}}; },
          [](const Empirical& v) { return Json{{"kind", "empirical"}, {"samples", v.samples}}; },
          [](const UniformBox& v) {
            return Json{{"kind", "uniform_box"}, {"lo", v.lo}, {"hi", v.hi}};
          },
          [](const GaussianIso& v) {
            return Json{{"kind", "gaussian_iso"}, {"center", v.center}, {"sigma", v.sigma}};
          },
      },
      b.variant());
}

Baseline BaselineFromJson(const Json& j) {
  const std::string kind = Kind(j);
  if (kind == "pointmass") return Baseline(Pointmass{Vector(Field(j, "point"), "point")});
  if (kind == "empirical") return Baseline(Empirical{Matrix(Field(j, "samples"), "samples")});
  if (kind == "uniform_box") {
    return Baseline(UniformBox{Vector(Field(j, "lo"), "lo"), Vector(Field(j, "hi"), "hi")});
  }
  if (kind == "gaussian_iso") {
    return Baseline(GaussianIso{Vector(Field(j, "center"), "center"),
                                Number(Field(j, "sigma"), "sigma")});
  }
  throw ParseError("unknown baseline kind '" + kind + "'");
}

Json SettingsToJson(const MethodSettings& s) {
  Json j;
  j["ig_steps"] = s.ig_steps;
  j["shap_baseline_samples"] = s.shap_baseline_samples;
  j["shap_subset_samples"] = s.shap_subset_samples;
  j["smoothgrad_sigma"] = s.smoothgrad_sigma;
  j["smoothgrad_samples"] = s.smoothgrad_samples;
  j["lime_lambda"] = s.lime_lambda;
  j["lime_sigma"] = s.lime_sigma;
  j["lime_samples"] = s.lime_samples;
  j["rng_seed"] = s.rng_seed;
  return j;
}

MethodSettings SettingsFromJson(const Json& j) {
  if (!j.is_object()) throw ParseError("method settings must be an object");
  MethodSettings s;
  auto get_int = [&](const char* key, int& dst) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number_integer()) throw ParseError(std::string(key) + " must be an integer");
    dst = j.at(key).get<int>();
  };
  auto get_real = [&](const char* key, double& dst) {
    if (j.contains(key)) dst = Number(j.at(key), key);
  };
  get_int("ig_steps", s.ig_steps);
  get_int("shap_baseline_samples", s.shap_baseline_samples);
  get_int("shap_subset_samples", s.shap_subset_samples);
  get_real("smoothgrad_sigma", s.smoothgrad_sigma);
  get_int("smoothgrad_samples", s.smoothgrad_samples);
  get_real("lime_lambda", s.lime_lambda);
  get_real("lime_sigma", s.lime_sigma);
  get_int("lime_samples", s.lime_samples);
  if (j.contains("rng_seed")) {
    if (!j.at("rng_seed").is_number_unsigned() && !j.at("rng_seed").is_number_integer()) {
      throw ParseError("rng_seed must be an integer");
    }
    s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  }
  s.Validate();
  return s;
}

Json AttributionToJson(const Attribution& a) {
  Json scores = Json::array();
  for (Eigen::Index r = 0; r < a.scores.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < a.scores.cols(); ++c) row.push_back(a.scores(r, c));
    scores.push_back(std::move(row));
  }
  Json j;
  j["method_tag"] = std::string(MethodTag(a.method));
  j["settings"] = SettingsToJson(a.settings);
  j["scores"] = std::move(scores);
  return j;
}

Json ForgedModelToJson(const ForgedModel& f) {
  Json j = ModelToJson(f.model);
  j["forge_provenance"] = Json{
      {"phi", f.target_phi},
      {"delta", f.delta},
      {"feature", f.feature},
      {"witness", Json::array({f.witness_lo, f.witness_hi})},
      {"beta_left", f.beta_left},
      {"beta_right", f.beta_right},
  };
  return j;
}

Json ParseJson(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

Json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseJson(ss.str());
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
}

}  // namespace attrib
