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

// JSON documents for models, baselines, method settings, attributions and
// forged models. Doubles are written in shortest round-trip form, so finite
// values survive a write/read cycle bit for bit.
//
// Model:     {"kind": "pwl1d", "breakpoints": [..], "values": [..],
//             "left_slope": s, "right_slope": s}
//            {"kind": "poly", "coefficients": [..]}
//            {"kind": "stitched", "inner": pwl1d, "lo": a, "hi": b,
//             "outer": pwl1d}                      (additive components only)
//            {"kind": "additive", "components": [..]}
//            {"kind": "mlp", "layers": [{"weights": [[..], ..], "bias": [..]}]}
//            plus an optional "lipschitz" number on the top-level model.
// Baseline:  {"kind": "pointmass", "point": [..]}
//            {"kind": "empirical", "samples": [[..], ..]}
//            {"kind": "uniform_box", "lo": [..], "hi": [..]}
//            {"kind": "gaussian_iso", "center": [..], "sigma": s}

#ifndef ATTRIB_SERIALIZE_HPP_
#define ATTRIB_SERIALIZE_HPP_

#include <filesystem>
#include <string>

#include "json.hpp"

#include "attrib/attribution.hpp"
#include "attrib/baseline.hpp"
#include "attrib/forge.hpp"
#include "attrib/model.hpp"

namespace attrib {

using Json = nlohmann::ordered_json;

Json ComponentToJson(const Component1D& c);
Component1D ComponentFromJson(const Json& j);

Json ModelToJson(const Model& m);
// Throws ParseError on a malformed document and InvalidArgument when the
// decoded model violates an invariant.
Model ModelFromJson(const Json& j);

Json BaselineToJson(const Baseline& b);
Baseline BaselineFromJson(const Json& j);

Json SettingsToJson(const MethodSettings& s);
// Missing keys keep their defaults.
MethodSettings SettingsFromJson(const Json& j);

Json AttributionToJson(const Attribution& a);

// Model document with a "forge_provenance" block holding phi, delta, the
// witness interval, the feature, and both outer slopes.
Json ForgedModelToJson(const ForgedModel& f);

// Parses text; ParseError on syntax errors.
Json ParseJson(const std::string& text);
Json ReadJsonFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, const std::string& text);

}  // namespace attrib

#endif  // ATTRIB_SERIALIZE_HPP_
