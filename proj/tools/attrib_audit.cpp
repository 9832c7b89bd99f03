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

// attrib-audit: command-line entry point.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 a hypothesis of
// the counterexample construction does not hold, 4 verification failed.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "attrib/attribution.hpp"
#include "attrib/baseline.hpp"
#include "attrib/error.hpp"
#include "attrib/experiments.hpp"
#include "attrib/forge.hpp"
#include "attrib/hyptest.hpp"
#include "attrib/model.hpp"
#include "attrib/parallel.hpp"
#include "attrib/querytest.hpp"
#include "attrib/serialize.hpp"
#include "attrib/suites.hpp"

namespace fs = std::filesystem;
using namespace attrib;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitAssumption = 3;
constexpr int kExitVerify = 4;

struct Global {
  std::uint64_t seed = 0;
  std::string out = "out";
  std::string config;
  int jobs = 0;
  std::string format = "csv";
};

struct AttributeArgs {
  std::string model, baseline, x, method = "shap_exact";
  MethodSettings settings;
};

struct ForgeArgs {
  std::vector<std::string> g_specs;
  std::string x, baseline, domain;
  std::size_t j = 0;
  double delta = 0.0;
  std::vector<double> phi;
  bool pair = false;
};

struct QueryArgs {
  std::string preset;
  QueryPlan plan;
  std::int64_t trials = 1000;
  bool adversary = false;
};

struct SignArgs {
  int degree = 2;
  std::int64_t samples = 1000000;
  std::string baseline;
};

struct SweepArgs {
  std::string data, schema, synthetic;
  std::size_t rows = 600;
  bool injection = false;
  int models = 0, examples = 0;
};

struct VerifyArgs {
  std::string suite = "all";
};

struct SynthArgs {
  std::string kind = "additive";
  std::size_t rows = 600;
};

std::vector<double> ParseReals(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument("'" + item + "' is not a number");
    }
  }
  if (out.empty()) throw InvalidArgument("expected a comma-separated list of numbers");
  return out;
}

// const:C | slope:S (t -> S (t - x_j)) | points:t=v,t=v,...
PiecewiseLinear1D ParseGSpec(const std::string& spec, double xj) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw InvalidArgument("g-spec needs the form kind:args");
  const std::string kind = spec.substr(0, colon);
  const std::string args = spec.substr(colon + 1);
  if (kind == "const") return PiecewiseLinear1D::Constant(ParseReals(args).at(0));
  if (kind == "slope") return PiecewiseLinear1D::Affine(ParseReals(args).at(0), xj, 0.0);
  if (kind == "points") {
    std::vector<std::pair<double, double>> pts;
    std::stringstream ss(args);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw InvalidArgument("points entries need t=v");
      pts.emplace_back(ParseReals(item.substr(0, eq)).at(0), ParseReals(item.substr(eq + 1)).at(0));
    }
    std::sort(pts.begin(), pts.end());
    std::vector<double> t, v;
    for (const auto& [a, b] : pts) {
      t.push_back(a);
      v.push_back(b);
    }
    return PiecewiseLinear1D(t, v, 0.0, 0.0);
  }
  throw InvalidArgument("unknown g-spec kind '" + kind + "'");
}

Range DefaultDomain(const Baseline& b, std::size_t j, double lo, double hi) {
  double a = lo, c = hi;
  const auto& v = b.variant();
  if (b.is_discrete()) {
    for (const auto& s : b.support()) {
      a = std::min(a, s[j]);
      c = std::max(c, s[j]);
    }
  } else if (const auto* u = std::get_if<UniformBox>(&v)) {
    a = std::min(a, u->lo[j]);
    c = std::max(c, u->hi[j]);
  } else if (const auto* g = std::get_if<GaussianIso>(&v)) {
    a = std::min(a, g->center[j] - 10.0 * g->sigma);
    c = std::max(c, g->center[j] + 10.0 * g->sigma);
  }
  const double pad = 0.5 * (hi - lo);
  return Range{a - pad, c + pad};
}

void WriteRunJson(const Global& g, const std::string& command, const Json& resolved) {
  Json run;
  run["command"] = command;
  run["seed"] = g.seed;
  run["out"] = g.out;
  run["config"] = g.config;
  run["jobs"] = g.jobs;
  run["format"] = g.format;
  run["resolved"] = resolved;
  WriteTextFile(fs::path(g.out) / "run.json", run.dump(2) + "\n");
}

Json LoadConfig(const Global& g) {
  if (g.config.empty()) return Json::object();
  Json j = ReadJsonFile(g.config);
  if (!j.is_object()) throw ParseError("config file must hold a JSON object");
  return j;
}

void PrintCsv(const std::string& csv) { std::cout << csv; }

int CmdAttribute(const Global& g, AttributeArgs a, CLI::App& sub) {
  const Json cfg = LoadConfig(g);
  if (cfg.contains("settings")) {
    MethodSettings from_file = SettingsFromJson(cfg.at("settings"));
    // Flags given explicitly win over the file.
    MethodSettings flags = a.settings;
    a.settings = from_file;
    if (sub.count("--ig-steps")) a.settings.ig_steps = flags.ig_steps;
    if (sub.count("--shap-baseline-samples")) a.settings.shap_baseline_samples = flags.shap_baseline_samples;
    if (sub.count("--shap-subset-samples")) a.settings.shap_subset_samples = flags.shap_subset_samples;
    if (sub.count("--smoothgrad-sigma")) a.settings.smoothgrad_sigma = flags.smoothgrad_sigma;
    if (sub.count("--smoothgrad-samples")) a.settings.smoothgrad_samples = flags.smoothgrad_samples;
    if (sub.count("--lime-lambda")) a.settings.lime_lambda = flags.lime_lambda;
    if (sub.count("--lime-sigma")) a.settings.lime_sigma = flags.lime_sigma;
    if (sub.count("--lime-samples")) a.settings.lime_samples = flags.lime_samples;
  }
  a.settings.rng_seed = g.seed;
  a.settings.Validate();
  const Method method = ParseMethod(a.method);
  const Model model = ModelFromJson(ReadJsonFile(a.model));
  const auto x = ParseReals(a.x);
  const bool needs_baseline =
      method == Method::kShapExact || method == Method::kShapSampled ||
      method == Method::kIntegratedGradients;
  if (needs_baseline && a.baseline.empty()) {
    throw InvalidArgument("method '" + a.method + "' needs --baseline");
  }
  const Baseline baseline = a.baseline.empty()
                                ? Baseline(Pointmass{std::vector<double>(x.size(), 0.0)})
                                : BaselineFromJson(ReadJsonFile(a.baseline));
  Json resolved{{"model", a.model},   {"baseline", a.baseline}, {"x", x},
                {"method", a.method}, {"settings", SettingsToJson(a.settings)}};
  WriteRunJson(g, "attribute", resolved);
  const Attribution attr = Attribute(method, model, baseline, x, a.settings);
  const std::string csv = AttributionToCsv(attr);
  if (g.format == "json") {
    WriteTextFile(fs::path(g.out) / "attribution.json", AttributionToJson(attr).dump(2) + "\n");
  } else {
    WriteTextFile(fs::path(g.out) / "attribution.csv", csv);
  }
  PrintCsv(csv);
  return kExitOk;
}

int CmdForge(const Global& g, ForgeArgs a) {
  const auto x = ParseReals(a.x);
  if (a.j >= x.size()) throw InvalidArgument("--j is out of range for --x");
  const std::size_t expected = a.pair ? 2 : 1;
  if (a.g_specs.size() != expected) {
    throw InvalidArgument(a.pair ? "--pair needs exactly two --g-spec values"
                                 : "give one --g-spec (or use --pair with two)");
  }
  if (a.phi.empty()) a.phi.push_back(0.0);
  if (a.pair && a.phi.size() != 1) throw InvalidArgument("--pair shares a single --phi");
  const Baseline baseline = BaselineFromJson(ReadJsonFile(a.baseline));
  const double lo = x[a.j] - a.delta, hi = x[a.j] + a.delta;
  const Range domain = a.domain.empty()
                           ? DefaultDomain(baseline, a.j, lo, hi)
                           : [&] {
                               const auto d = ParseReals(a.domain);
                               if (d.size() != 2) throw InvalidArgument("--domain needs lo,hi");
                               return Range{d[0], d[1]};
                             }();
  Json resolved{{"g_specs", a.g_specs}, {"x", x},           {"j", a.j},
                {"delta", a.delta},     {"phi", a.phi},     {"baseline", a.baseline},
                {"domain", Json::array({domain.lo, domain.hi})}, {"pair", a.pair}};
  WriteRunJson(g, "forge", resolved);

  std::vector<ForgedModel> forged;
  if (a.pair) {
    auto pr = ForgePair(LocalBehaviour{ParseGSpec(a.g_specs[0], x[a.j]), x, a.j, a.delta},
                        LocalBehaviour{ParseGSpec(a.g_specs[1], x[a.j]), x, a.j, a.delta},
                        baseline, domain, a.phi[0]);
    forged.push_back(std::move(pr.first));
    forged.push_back(std::move(pr.second));
  } else {
    const LocalBehaviour b{ParseGSpec(a.g_specs[0], x[a.j]), x, a.j, a.delta};
    for (double phi : a.phi) forged.push_back(ForgeCounterexample(b, baseline, domain, phi));
  }
  // Neighbourhood grid spanning (x_j - delta, x_j + delta) for the recourse label.
  const Neighbourhood nb{x, a.j, 1.0, a.delta};
  std::cout << "index,file,phi,beta_left,beta_right,shap,recourse_truth\n";
  for (std::size_t i = 0; i < forged.size(); ++i) {
    const std::string name = forged.size() == 1 ? "forged.json" : "forged_" + std::to_string(i) + ".json";
    WriteTextFile(fs::path(g.out) / name, ForgedModelToJson(forged[i]).dump(2) + "\n");
    std::cout << std::setprecision(17) << i << ',' << name << ',' << forged[i].target_phi << ','
              << forged[i].beta_left << ',' << forged[i].beta_right << ',';
    if (baseline.is_discrete() && x.size() <= 20) {
      std::cout << ShapExact(forged[i].model, baseline, x)(a.j);
    } else {
      std::cout << "NA";
    }
    std::cout << ',' << RecourseGroundTruth(forged[i].model, nb, 0) << '\n';
  }
  return kExitOk;
}

int CmdQuery(const Global& g, QueryArgs a, CLI::App& sub) {
  QueryPlan plan = a.plan;
  if (a.preset == "sec5") {
    const QueryPlan preset = QueryBudgetPreset();
    if (!sub.count("--p")) plan.p = preset.p;
    if (!sub.count("--n")) plan.n = preset.n;
    if (!sub.count("--L")) plan.lipschitz = preset.lipschitz;
    if (!sub.count("--delta")) plan.delta = preset.delta;
    if (!sub.count("--epsilon")) plan.epsilon = preset.epsilon;
    if (!sub.count("--tau")) plan.tau = preset.tau;
  } else if (!a.preset.empty()) {
    throw InvalidArgument("unknown preset '" + a.preset + "'");
  }
  plan.rng_seed = g.seed;
  if (a.trials < 0) throw InvalidArgument("--trials must be >= 0");
  plan.Validate();
  Json resolved{{"preset", a.preset}, {"p", plan.p},           {"n", plan.n},
                {"tau", plan.tau},    {"epsilon", plan.epsilon}, {"lipschitz", plan.lipschitz},
                {"delta", plan.delta}, {"trials", a.trials},    {"adversary", a.adversary}};
  WriteRunJson(g, "query-test", resolved);
  const Rates theory = TheoreticalRates(plan);
  std::optional<EmpiricalResult> emp;
  if (a.trials > 0) emp = EmpiricalRates(plan, a.trials);
  std::string csv = QueryCsvHeader() + QueryCsvRow(plan, theory, emp ? &*emp : nullptr);
  Json out{{"plan", resolved}, {"spec_theory", theory.spec}, {"sens_theory", theory.sens}};
  if (emp) {
    out["spec_hat"] = emp->empirical.spec;
    out["sens_hat"] = emp->empirical.sens;
    out["spec_ci_halfwidth"] = 4.0 * emp->spec_se;
    out["sens_ci_halfwidth"] = 4.0 * emp->sens_se;
  }
  if (a.adversary) {
    const auto adv = AdversaryBoundCheck(plan, std::max<std::int64_t>(a.trials, 1));
    out["adversary"] = Json{{"detection", adv.detection}, {"bound", adv.bound},
                            {"standard_error", adv.standard_error},
                            {"cells_per_axis", adv.cells_per_axis}, {"passed", adv.passed}};
    std::ostringstream os;
    os << std::setprecision(17) << "# adversary detection=" << adv.detection
       << " bound=" << adv.bound << " se=" << adv.standard_error
       << " passed=" << (adv.passed ? 1 : 0) << "\n";
    std::cerr << os.str();
  }
  if (g.format == "json") {
    WriteTextFile(fs::path(g.out) / "query_rates.json", out.dump(2) + "\n");
  } else {
    WriteTextFile(fs::path(g.out) / "query_rates.csv", csv);
  }
  PrintCsv(csv);
  return kExitOk;
}

int CmdSignDisagreement(const Global& g, SignArgs a) {
  const Baseline baseline = a.baseline.empty() ? Baseline(UniformBox{{-1.5}, {1.5}})
                                               : BaselineFromJson(ReadJsonFile(a.baseline));
  if (baseline.dim() != 1) throw InvalidArgument("prop4 needs a one-dimensional baseline");
  Json resolved{{"degree", a.degree}, {"samples", a.samples}, {"baseline", BaselineToJson(baseline)}};
  WriteRunJson(g, "prop4", resolved);
  const auto est = RandomPolynomialMc(a.degree, baseline, a.samples, g.seed);
  std::ostringstream csv;
  csv << std::setprecision(17) << "degree,samples,estimate,standard_error,closed_form,disagreements\n"
      << a.degree << ',' << est.samples << ',' << est.estimate << ',' << est.standard_error << ','
      << est.closed_form << ',' << est.disagreements << '\n';
  if (g.format == "json") {
    Json out{{"degree", a.degree},          {"samples", est.samples},
             {"estimate", est.estimate},    {"standard_error", est.standard_error},
             {"closed_form", est.closed_form}, {"disagreements", est.disagreements}};
    WriteTextFile(fs::path(g.out) / "prop4.json", out.dump(2) + "\n");
  } else {
    WriteTextFile(fs::path(g.out) / "prop4.csv", csv.str());
  }
  PrintCsv(csv.str());
  return kExitOk;
}

int CmdSweep(const Global& g, SweepArgs a) {
  const Json cfg = LoadConfig(g);
  ExperimentConfig exp =
      cfg.contains("experiment") ? ExperimentConfigFromJson(cfg.at("experiment")) : ExperimentConfig{};
  TrainConfig train = cfg.contains("train") ? TrainConfigFromJson(cfg.at("train")) : TrainConfig{};
  exp.seed = g.seed;
  if (a.injection) exp.injection = true;
  if (a.models > 0) exp.n_models = a.models;
  if (a.examples > 0) exp.n_examples = a.examples;
  exp.Validate();

  Dataset data;
  std::string source;
  if (!a.data.empty()) {
    if (a.schema.empty()) {
      // Default to the schema file `synth` writes next to the CSV.
      std::filesystem::path guess = a.data;
      guess.replace_extension(".schema.json");
      if (!std::filesystem::exists(guess)) throw InvalidArgument("--data needs --schema");
      a.schema = guess.string();
    }
    data = IngestCsv(a.data, SchemaFromJson(ReadJsonFile(a.schema)));
    source = a.data;
  } else {
    const std::string kind = a.synthetic.empty() ? "additive" : a.synthetic;
    data = IngestCsvText(SyntheticCsv(kind, a.rows, g.seed), SyntheticSchema(kind),
                         "synthetic_" + kind);
    source = "synthetic:" + kind;
  }
  if (data.is_classification()) train.loss = Loss::kSoftmaxCrossEntropy;
  for (const auto& w : data.warnings) std::cerr << "warning: " << w << "\n";
  Json resolved{{"source", source}, {"schema", a.schema}, {"rows", a.rows},
                {"experiment", ExperimentConfigToJson(exp)}, {"train", TrainConfigToJson(train)}};
  WriteRunJson(g, "roc-sweep", resolved);
  const SweepResult result = RunSweep(data, exp, train);
  for (const auto& path : WriteSweep(result, g.out, g.format == "json")) {
    std::cout << path.string() << "\n";
  }
  return kExitOk;
}

int CmdVerify(const Global& g, VerifyArgs a) {
  SuiteOptions opt;
  opt.seed = g.seed;
  const Json cfg = LoadConfig(g);
  if (cfg.contains("verify")) {
    const Json& v = cfg.at("verify");
    if (!v.is_object()) throw ParseError("'verify' must be a JSON object");
    for (const auto& [key, value] : v.items()) {
      if (key == "completeness_cases") opt.completeness_cases = value.get<int>();
      else if (key == "linearity_cases") opt.linearity_cases = value.get<int>();
      else if (key == "forge_cases") opt.forge_cases = value.get<int>();
      else if (key == "roc_cases") opt.roc_cases = value.get<int>();
      else if (key == "ig_steps") opt.ig_steps = value.get<int>();
      else if (key == "exact_tol") opt.exact_tol = value.get<double>();
      else if (key == "ig_tol") opt.ig_tol = value.get<double>();
      else if (key == "sign_samples") opt.sign_samples = value.get<std::int64_t>();
      else if (key == "query_trials") opt.query_trials = value.get<std::int64_t>();
      else throw InvalidArgument("unknown verify option '" + key + "'");
    }
    if (opt.completeness_cases < 0 || opt.linearity_cases < 0 || opt.forge_cases < 0 ||
        opt.roc_cases < 0 || opt.ig_steps < 1 || opt.sign_samples < 1 || opt.query_trials < 1 ||
        !(opt.exact_tol >= 0.0) || !(opt.ig_tol >= 0.0)) {
      throw InvalidArgument("verify options out of range");
    }
  }
  WriteRunJson(g, "verify",
               Json{{"suite", a.suite},
                    {"options",
                     {{"completeness_cases", opt.completeness_cases},
                      {"linearity_cases", opt.linearity_cases},
                      {"forge_cases", opt.forge_cases},
                      {"roc_cases", opt.roc_cases},
                      {"ig_steps", opt.ig_steps},
                      {"exact_tol", opt.exact_tol},
                      {"ig_tol", opt.ig_tol},
                      {"sign_samples", opt.sign_samples},
                      {"query_trials", opt.query_trials}}}});
  const auto reports = RunSuites(a.suite, opt);
  bool all = true;
  Json out = Json::array();
  for (const auto& r : reports) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.cases - r.failures << "/"
              << r.cases << ", " << std::fixed << std::setprecision(2) << r.seconds << " s)\n"
              << std::defaultfloat << r.detail;
    all = all && r.passed;
    out.push_back(Json{{"suite", r.name}, {"passed", r.passed}, {"cases", r.cases},
                       {"failures", r.failures}, {"detail", r.detail}});
  }
  WriteTextFile(fs::path(g.out) / (g.format == "json" ? "verify.json" : "verify.csv"),
                g.format == "json" ? out.dump(2) + "\n" : [&] {
                  std::ostringstream os;
                  os << "suite,passed,cases,failures\n";
                  for (const auto& r : reports) {
                    os << r.name << ',' << (r.passed ? 1 : 0) << ',' << r.cases << ',' << r.failures << '\n';
                  }
                  return os.str();
                }());
  return all ? kExitOk : kExitVerify;
}

int CmdSynth(const Global& g, SynthArgs a) {
  WriteRunJson(g, "synth", Json{{"kind", a.kind}, {"rows", a.rows}});
  const auto csv = SyntheticCsv(a.kind, a.rows, g.seed);
  const auto path = fs::path(g.out) / ("synthetic_" + a.kind + ".csv");
  WriteTextFile(path, csv);
  Json schema{{"targets", {"y"}}, {"categorical", Json::array()}, {"task", "regression"}};
  WriteTextFile(fs::path(g.out) / ("synthetic_" + a.kind + ".schema.json"), schema.dump(2) + "\n");
  std::cout << path.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attrib-audit: feature attribution auditing toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--seed", g.seed, "Master random seed")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--config", g.config, "JSON configuration file");
  app.add_option("--jobs", g.jobs, "Worker threads (default: all cores)");
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  AttributeArgs attr;
  auto* attribute = app.add_subcommand("attribute", "Attribute a model at an example");
  attribute->add_option("--model", attr.model, "Model JSON")->required();
  attribute->add_option("--baseline", attr.baseline, "Baseline JSON");
  attribute->add_option("--x", attr.x, "Example, comma-separated")->required();
  attribute->add_option("--method", attr.method,
                        "shap_exact | shap | ig | gradient | smoothgrad | lime")
      ->capture_default_str();
  attribute->add_option("--ig-steps", attr.settings.ig_steps);
  attribute->add_option("--shap-baseline-samples", attr.settings.shap_baseline_samples);
  attribute->add_option("--shap-subset-samples", attr.settings.shap_subset_samples);
  attribute->add_option("--smoothgrad-sigma", attr.settings.smoothgrad_sigma);
  attribute->add_option("--smoothgrad-samples", attr.settings.smoothgrad_samples);
  attribute->add_option("--lime-lambda", attr.settings.lime_lambda);
  attribute->add_option("--lime-sigma", attr.settings.lime_sigma);
  attribute->add_option("--lime-samples", attr.settings.lime_samples);

  ForgeArgs forge;
  auto* forge_cmd = app.add_subcommand("forge", "Build models with a prescribed attribution");
  forge_cmd->add_option("--g-spec", forge.g_specs,
                        "Local behaviour: const:C | slope:S | points:t=v,...")
      ->required();
  forge_cmd->add_option("--x", forge.x, "Example, comma-separated")->required();
  forge_cmd->add_option("--j", forge.j, "Feature index (0-based)")->required();
  forge_cmd->add_option("--delta", forge.delta, "Neighbourhood radius")->required();
  forge_cmd->add_option("--phi", forge.phi, "Target attribution(s)");
  forge_cmd->add_option("--baseline", forge.baseline, "Baseline JSON")->required();
  forge_cmd->add_option("--domain", forge.domain, "Feature domain lo,hi");
  forge_cmd->add_flag("--pair", forge.pair, "Forge two models sharing one attribution");

  QueryArgs query;
  auto* query_cmd = app.add_subcommand("query-test", "Brute-force query test rates");
  query_cmd->add_option("--preset", query.preset, "sec5");
  query_cmd->add_option("--p", query.plan.p);
  query_cmd->add_option("--n", query.plan.n);
  query_cmd->add_option("--tau", query.plan.tau);
  query_cmd->add_option("--epsilon", query.plan.epsilon);
  query_cmd->add_option("--L", query.plan.lipschitz);
  query_cmd->add_option("--delta", query.plan.delta);
  query_cmd->add_option("--trials", query.trials, "0 prints theoretical rates only")
      ->capture_default_str();
  query_cmd->add_flag("--adversary", query.adversary, "Also run the single-cell bump check");

  SignArgs prop4;
  auto* sign_cmd = app.add_subcommand("prop4", "Random polynomial sign-disagreement estimate");
  sign_cmd->add_option("--degree", prop4.degree)->capture_default_str();
  sign_cmd->add_option("--samples", prop4.samples)->capture_default_str();
  sign_cmd->add_option("--baseline", prop4.baseline, "1-D baseline JSON (default Unif(-1.5, 1.5))");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("roc-sweep", "ROC sweep over models, examples and methods");
  sweep_cmd->add_option("--data", sweep.data, "CSV file");
  sweep_cmd->add_option("--schema", sweep.schema, "Schema JSON for --data");
  sweep_cmd->add_option("--synthetic", sweep.synthetic, "additive | spurious");
  sweep_cmd->add_option("--rows", sweep.rows, "Rows for --synthetic")->capture_default_str();
  sweep_cmd->add_flag("--injection", sweep.injection, "Replace models by forged pairs");
  sweep_cmd->add_option("--models", sweep.models, "Override the number of models");
  sweep_cmd->add_option("--examples", sweep.examples, "Override the number of examples");

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Run invariant batteries");
  verify_cmd->add_option("--suite", verify.suite,
                         "completeness | linearity | forge | roc | query | prop4 | all")
      ->capture_default_str();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic dataset and its schema");
  synth_cmd->add_option("--kind", synth.kind, "additive | spurious")->capture_default_str();
  synth_cmd->add_option("--rows", synth.rows)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (g.jobs < 0) throw InvalidArgument("--jobs must be positive");
    if (g.jobs > 0) SetThreads(g.jobs);
    g.jobs = MaxThreads();
    if (*attribute) return CmdAttribute(g, attr, *attribute);
    if (*forge_cmd) return CmdForge(g, forge);
    if (*query_cmd) return CmdQuery(g, query, *query_cmd);
    if (*sign_cmd) return CmdSignDisagreement(g, prop4);
    if (*sweep_cmd) return CmdSweep(g, sweep);
    if (*verify_cmd) return CmdVerify(g, verify);
    if (*synth_cmd) return CmdSynth(g, synth);
  } catch (const AssumptionViolated& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAssumption;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DegenerateBehaviour& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Json::exception& e) {
    std::cerr << "error: malformed configuration: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
