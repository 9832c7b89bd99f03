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

#include <cmath>
#include <filesystem>

#include "doctest.h"

#include "attrib/error.hpp"
#include "attrib/forge.hpp"
#include "attrib/rng.hpp"
#include "attrib/serialize.hpp"
#include "attrib/suites.hpp"

using namespace attrib;

namespace {

Model RoundTrip(const Model& m) { return ModelFromJson(ParseJson(ModelToJson(m).dump())); }

Baseline RoundTrip(const Baseline& b) {
  return BaselineFromJson(ParseJson(BaselineToJson(b).dump()));
}

}  // namespace

TEST_CASE("models survive a text round trip bit for bit") {
  Rng rng = MakeRng(13, 0);
  for (int c = 0; c < 20; ++c) {
    const std::size_t p = 1 + c % 4;
    const Model m = c % 2 ? RandomMlp(rng, p, 7, 2) : RandomAdditiveModel(rng, p, false);
    const Model back = RoundTrip(m);
    CHECK(back.kind() == m.kind());
    CHECK(ModelToJson(back).dump() == ModelToJson(m).dump());
    for (int i = 0; i < 20; ++i) {
      const auto x = RandomPoint(rng, p, -3.0, 3.0);
      CHECK(back.Evaluate(x) == m.Evaluate(x));
    }
    if (const auto* mlp = std::get_if<MlpModel>(&m.variant())) {
      const auto& other = std::get<MlpModel>(back.variant());
      for (std::size_t l = 0; l < mlp->layers().size(); ++l) {
        CHECK(mlp->layers()[l].weights == other.layers()[l].weights);
        CHECK(mlp->layers()[l].bias == other.layers()[l].bias);
      }
    } else {
      CHECK(m.additive()->components() == back.additive()->components());
    }
  }
  const Model pwl(PiecewiseLinear1D({0.1, 0.30000000000000004}, {1.0 / 3.0, -2e-300}, 1e300, -0.0),
                  2.5);
  const Model back = RoundTrip(pwl);
  CHECK(std::get<PiecewiseLinear1D>(back.variant()) == std::get<PiecewiseLinear1D>(pwl.variant()));
  CHECK(back.cached_lipschitz() == 2.5);
  const Model poly(Polynomial1D({0.1, -0.2, 1e-17}));
  CHECK(std::get<Polynomial1D>(RoundTrip(poly).variant()) == std::get<Polynomial1D>(poly.variant()));
}

TEST_CASE("forged models round trip with provenance") {
  const Baseline b(UniformBox{{-1.0}, {1.0}});
  const LocalBehaviour beh{PiecewiseLinear1D({0.0, 0.2}, {0.1, -0.3}, 1.0, 0.5), {0.1}, 0, 0.2};
  const ForgedModel f = ForgeCounterexample(beh, b, {-1.0, 1.0}, 1.0);
  const Json doc = ForgedModelToJson(f);
  REQUIRE(doc.contains("forge_provenance"));
  const Json& prov = doc["forge_provenance"];
  CHECK(prov["phi"].get<double>() == 1.0);
  CHECK(prov["delta"].get<double>() == 0.2);
  CHECK(prov["beta_left"].get<double>() == f.beta_left);
  CHECK(prov["beta_right"].get<double>() == f.beta_right);
  CHECK(prov["witness"][0].get<double>() == -1.0);
  const Model back = ModelFromJson(ParseJson(doc.dump()));
  for (double t = -1.2; t <= 1.2; t += 0.01) {
    CHECK(back.EvaluateOutput(std::vector<double>{t}, 0) ==
          f.model.EvaluateOutput(std::vector<double>{t}, 0));
  }
}

TEST_CASE("baselines round trip") {
  Rng rng = MakeRng(3, 0);
  const std::vector<Baseline> all{Baseline(Pointmass{{0.1, -0.7}}), RandomEmpirical(rng, 2, 9),
                                  Baseline(UniformBox{{-1.0, 0.1}, {1.0, 0.3}}),
                                  Baseline(GaussianIso{{0.3, 0.0}, 0.123456789})};
  for (const auto& b : all) {
    const Baseline back = RoundTrip(b);
    CHECK(back.kind() == b.kind());
    CHECK(BaselineToJson(back).dump() == BaselineToJson(b).dump());
    CHECK(back.Sample(4, 5) == b.Sample(4, 5));
  }
}

TEST_CASE("settings keep defaults for missing keys") {
  MethodSettings s;
  s.ig_steps = 7;
  s.lime_lambda = 0.25;
  s.rng_seed = 12345678901234ULL;
  const MethodSettings back = SettingsFromJson(ParseJson(SettingsToJson(s).dump()));
  CHECK(back.ig_steps == 7);
  CHECK(back.lime_lambda == 0.25);
  CHECK(back.rng_seed == 12345678901234ULL);
  const MethodSettings partial = SettingsFromJson(ParseJson(R"({"ig_steps": 3})"));
  CHECK(partial.ig_steps == 3);
  CHECK(partial.shap_subset_samples == 500);
  CHECK_THROWS_AS(SettingsFromJson(ParseJson(R"({"ig_steps": 0})")), InvalidArgument);
  CHECK_THROWS_AS(SettingsFromJson(ParseJson(R"({"ig_steps": "many"})")), ParseError);
}

TEST_CASE("attribution documents carry provenance") {
  Attribution a;
  a.scores = Eigen::MatrixXd::Constant(2, 1, 0.5);
  a.method = Method::kLime;
  const Json doc = AttributionToJson(a);
  CHECK(doc["method_tag"] == "lime");
  CHECK(doc["settings"]["lime_samples"] == 100);
  CHECK(doc["scores"][1][0].get<double>() == 0.5);
}

TEST_CASE("malformed documents are rejected") {
  CHECK_THROWS_AS(ParseJson("{\"kind\": "), ParseError);
  CHECK_THROWS_AS(ModelFromJson(ParseJson(R"({"kind": "spline"})")), ParseError);
  CHECK_THROWS_AS(ModelFromJson(ParseJson(R"({"kind": "poly"})")), ParseError);
  CHECK_THROWS_AS(ModelFromJson(ParseJson(R"({"kind": "poly", "coefficients": [1, "x"]})")),
                  ParseError);
  CHECK_THROWS_AS(ModelFromJson(ParseJson(R"([1, 2])")), ParseError);
  CHECK_THROWS_AS(ModelFromJson(ParseJson(
                      R"({"kind": "pwl1d", "breakpoints": [1, 0], "values": [0, 0],
                          "left_slope": 0, "right_slope": 0})")),
                  InvalidArgument);
  CHECK_THROWS_AS(ModelFromJson(ParseJson(
                      R"({"kind": "mlp", "layers": [{"weights": [[1, 2], [3]], "bias": [0, 0]}]})")),
                  InvalidArgument);
  CHECK_THROWS_AS(BaselineFromJson(ParseJson(R"({"kind": "uniform_box", "lo": [1], "hi": [0]})")),
                  InvalidArgument);
  CHECK_THROWS_AS(BaselineFromJson(ParseJson(R"({"kind": "dirac"})")), ParseError);
  CHECK_THROWS_AS(ReadJsonFile("/nonexistent/path.json"), InvalidArgument);
}

TEST_CASE("text files are written with parent directories") {
  const auto dir = std::filesystem::temp_directory_path() / "attrib_serialize_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  WriteTextFile(dir / "doc.json", R"({"a": 1})");
  CHECK(ReadJsonFile(dir / "doc.json")["a"] == 1);
  std::filesystem::remove_all(dir.parent_path());
}
