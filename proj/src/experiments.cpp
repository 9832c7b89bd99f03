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

#include "attrib/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include "attrib/error.hpp"
#include "attrib/forge.hpp"
#include "attrib/parallel.hpp"
#include "attrib/rng.hpp"

namespace attrib {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(Trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool IsMissing(const std::string& v) {
  return v.empty() || v == "NA" || v == "NaN" || v == "nan" || v == "?" || v == "null";
}

double ParseNumber(const std::string& v, std::size_t row, const std::string& column) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
    throw ParseError("row " + std::to_string(row) + ", column '" + column +
                     "': '" + v + "' is not a finite number");
  }
  return out;
}

bool Contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

Dataset SubsetRows(const Dataset& data, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.name = data.name;
  out.feature_names = data.feature_names;
  out.stats = data.stats;
  out.categorical = data.categorical;
  out.num_classes = data.num_classes;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), data.features.cols());
  if (data.targets.size() > 0) {
    out.targets.resize(static_cast<Eigen::Index>(rows.size()), data.targets.cols());
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    out.features.row(static_cast<Eigen::Index>(i)) = data.features.row(r);
    if (data.targets.size() > 0) {
      out.targets.row(static_cast<Eigen::Index>(i)) = data.targets.row(r);
    }
    if (data.is_classification()) out.labels.push_back(data.labels[rows[i]]);
  }
  return out;
}

// Target matrix used by the loss: regression targets, or class indices.
int OutputWidth(const Dataset& data) {
  return data.is_classification() ? data.num_classes
                                  : static_cast<int>(data.targets.cols());
}

struct BatchLoss {
  double loss = 0.0;
  Eigen::MatrixXd grad_out;  // q x B, d(sum loss)/d(output)
};

BatchLoss OutputLoss(const Eigen::MatrixXd& out, const Dataset& data,
                     const std::vector<std::size_t>& rows, Loss loss) {
  BatchLoss r;
  r.grad_out.resizeLike(out);
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const std::size_t row = rows[static_cast<std::size_t>(c)];
    if (loss == Loss::kSquared) {
      const Eigen::VectorXd diff =
          out.col(c) - data.targets.row(static_cast<Eigen::Index>(row)).transpose();
      r.loss += 0.5 * diff.squaredNorm();
      r.grad_out.col(c) = diff;
    } else {
      const double mx = out.col(c).maxCoeff();
      Eigen::VectorXd e = (out.col(c).array() - mx).exp().matrix();
      const double z = e.sum();
      const int label = data.labels[row];
      r.loss += -(out(label, c) - mx - std::log(z));
      e /= z;
      e(label) -= 1.0;
      r.grad_out.col(c) = e;
    }
  }
  return r;
}

Eigen::MatrixXd BatchInputs(const Dataset& data, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd x(data.features.cols(), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x.col(static_cast<Eigen::Index>(i)) =
        data.features.row(static_cast<Eigen::Index>(rows[i])).transpose();
  }
  return x;
}

Eigen::MatrixXd ForwardBatch(const std::vector<DenseLayer>& layers, const Eigen::MatrixXd& x,
                             std::vector<Eigen::MatrixXd>* pre,
                             std::vector<Eigen::MatrixXd>* act) {
  Eigen::MatrixXd a = x;
  if (act) act->push_back(a);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd z = (layers[l].weights * a).colwise() + layers[l].bias;
    if (pre) pre->push_back(z);
    a = l + 1 < layers.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
    if (act) act->push_back(a);
  }
  return a;
}

std::string MethodList(const std::vector<Method>& methods) {
  std::string out;
  for (auto m : methods) out += std::string(out.empty() ? "" : ",") + std::string(MethodTag(m));
  return out;
}

}  // namespace

std::vector<double> Dataset::Row(std::size_t i) const {
  std::vector<double> out(dim());
  for (std::size_t j = 0; j < dim(); ++j) {
    out[j] = features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  return out;
}

CsvSchema SchemaFromJson(const Json& j) {
  if (!j.is_object()) throw ParseError("schema must be a JSON object");
  CsvSchema s;
  auto strings = [&](const char* key, std::vector<std::string>& dst) {
    if (!j.contains(key)) return;
    for (const auto& v : j.at(key)) {
      if (!v.is_string()) throw ParseError(std::string(key) + " must list column names");
      dst.push_back(v.get<std::string>());
    }
  };
  strings("targets", s.targets);
  strings("categorical", s.categorical);
  if (j.contains("task")) {
    const auto task = j.at("task").get<std::string>();
    if (task != "regression" && task != "classification") {
      throw ParseError("schema task must be 'regression' or 'classification'");
    }
    s.classification = task == "classification";
  }
  if (s.targets.empty()) throw ParseError("schema declares no target column");
  return s;
}

Dataset MakeDataset(std::string name, const Eigen::MatrixXd& raw,
                    std::vector<std::string> feature_names,
                    const Eigen::MatrixXd& targets,
                    const std::vector<std::string>& class_labels,
                    std::vector<bool> categorical) {
  const auto n = raw.rows();
  if (n < 1) throw InvalidArgument("dataset has no rows");
  if (static_cast<std::size_t>(raw.cols()) != feature_names.size()) {
    throw InvalidArgument("feature names do not match the column count");
  }
  if (categorical.empty()) categorical.assign(feature_names.size(), false);
  Dataset d;
  d.name = std::move(name);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    const auto col = raw.col(c);
    if (col.maxCoeff() == col.minCoeff()) {
      d.warnings.push_back("dropped constant feature '" +
                           feature_names[static_cast<std::size_t>(c)] + "'");
      continue;
    }
    keep.push_back(c);
  }
  if (keep.empty()) throw InvalidArgument("every feature is constant");
  d.features.resize(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto c = keep[k];
    const auto kc = static_cast<Eigen::Index>(k);
    d.feature_names.push_back(feature_names[static_cast<std::size_t>(c)]);
    d.categorical.push_back(categorical[static_cast<std::size_t>(c)]);
    if (d.categorical.back()) {
      d.stats.push_back({0.0, 1.0});
      d.features.col(kc) = raw.col(c);
      continue;
    }
    const double mean = raw.col(c).mean();
    const double var = (raw.col(c).array() - mean).square().mean();
    const double sd = std::sqrt(var);
    d.stats.push_back({mean, sd});
    d.features.col(kc) = ((raw.col(c).array() - mean) / sd).matrix();
  }
  if (!class_labels.empty()) {
    if (static_cast<Eigen::Index>(class_labels.size()) != n) {
      throw InvalidArgument("class labels do not match the row count");
    }
    std::set<std::string> uniq(class_labels.begin(), class_labels.end());
    std::vector<std::string> ordered(uniq.begin(), uniq.end());
    for (const auto& l : class_labels) {
      d.labels.push_back(static_cast<int>(
          std::lower_bound(ordered.begin(), ordered.end(), l) - ordered.begin()));
    }
    d.num_classes = static_cast<int>(ordered.size());
    if (d.num_classes < 2) throw InvalidArgument("classification needs two classes");
  } else {
    if (targets.rows() != n || targets.cols() < 1) {
      throw InvalidArgument("regression targets do not match the row count");
    }
    d.targets = targets;
  }
  return d;
}

Dataset IngestCsvText(const std::string& text, const CsvSchema& schema, std::string name) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("CSV is empty");
  const auto header = SplitCsvLine(line);
  for (const auto& t : schema.targets) {
    if (!Contains(header, t)) throw ParseError("target column '" + t + "' not in header");
  }
  for (const auto& c : schema.categorical) {
    if (!Contains(header, c)) throw ParseError("categorical column '" + c + "' not in header");
  }
  if (schema.classification && schema.targets.size() != 1) {
    throw ParseError("classification needs exactly one target column");
  }
  std::vector<std::vector<std::string>> rows;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (Trim(line).empty()) continue;
    auto fields = SplitCsvLine(line);
    if (fields.size() != header.size()) {
      throw ParseError("row " + std::to_string(row_no) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (IsMissing(fields[c])) {
        throw ParseError("missing value at row " + std::to_string(row_no) + ", column '" +
                         header[c] + "'");
      }
    }
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw ParseError("CSV has no data rows");
  const auto n = static_cast<Eigen::Index>(rows.size());

  // Feature columns in header order; categoricals expand to sorted one-hot.
  std::vector<std::string> names;
  std::vector<bool> categorical;
  std::vector<std::vector<double>> columns;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (Contains(schema.targets, header[c])) continue;
    if (Contains(schema.categorical, header[c])) {
      std::set<std::string> levels;
      for (const auto& r : rows) levels.insert(r[c]);
      for (const auto& level : levels) {
        std::vector<double> col;
        for (const auto& r : rows) col.push_back(r[c] == level ? 1.0 : 0.0);
        names.push_back(header[c] + "=" + level);
        categorical.push_back(true);
        columns.push_back(std::move(col));
      }
      continue;
    }
    std::vector<double> col;
    for (std::size_t i = 0; i < rows.size(); ++i) col.push_back(ParseNumber(rows[i][c], i + 2, header[c]));
    names.push_back(header[c]);
    categorical.push_back(false);
    columns.push_back(std::move(col));
  }
  if (columns.empty()) throw ParseError("CSV has no feature columns");
  Eigen::MatrixXd raw(n, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    for (Eigen::Index i = 0; i < n; ++i) raw(i, static_cast<Eigen::Index>(c)) = columns[c][static_cast<std::size_t>(i)];
  }

  Eigen::MatrixXd targets;
  std::vector<std::string> labels;
  if (schema.classification) {
    const auto tc = static_cast<std::size_t>(
        std::find(header.begin(), header.end(), schema.targets[0]) - header.begin());
    for (const auto& r : rows) labels.push_back(r[tc]);
  } else {
    targets.resize(n, static_cast<Eigen::Index>(schema.targets.size()));
    for (std::size_t t = 0; t < schema.targets.size(); ++t) {
      const auto tc = static_cast<std::size_t>(
          std::find(header.begin(), header.end(), schema.targets[t]) - header.begin());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        targets(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) =
            ParseNumber(rows[i][tc], i + 2, header[tc]);
      }
    }
  }
  return MakeDataset(std::move(name), raw, std::move(names), targets, labels,
                     std::move(categorical));
}

Dataset IngestCsv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return IngestCsvText(ss.str(), schema, path.stem().string());
}

std::string SyntheticCsv(const std::string& kind, std::size_t rows, std::uint64_t seed) {
  Rng rng = MakeRng(seed, 0xDA7A);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::ostringstream os;
  os << std::setprecision(17);
  if (kind == "additive") {
    os << "x0,x1,x2,x3,x4,y\n";
    for (std::size_t i = 0; i < rows; ++i) {
      double x[5];
      for (double& v : x) v = normal(rng);
      const double y = 2.0 * x[0] - x[1] + std::sin(2.0 * x[2]) + 0.5 * x[3] * x[3] +
                       0.1 * normal(rng);
      os << x[0] << ',' << x[1] << ',' << x[2] << ',' << x[3] << ',' << x[4] << ',' << y << '\n';
    }
  } else if (kind == "spurious") {
    os << "x0,x1,x2,x3,y\n";
    for (std::size_t i = 0; i < rows; ++i) {
      const double x0 = normal(rng);
      const double x1 = normal(rng);
      const double x2 = x0 + 0.5 * normal(rng);
      const double x3 = normal(rng);
      const double y = x0 + x1 + 0.1 * normal(rng);
      os << x0 << ',' << x1 << ',' << x2 << ',' << x3 << ',' << y << '\n';
    }
  } else {
    throw InvalidArgument("unknown synthetic dataset '" + kind + "'");
  }
  return os.str();
}

CsvSchema SyntheticSchema(const std::string& kind) {
  if (kind != "additive" && kind != "spurious") {
    throw InvalidArgument("unknown synthetic dataset '" + kind + "'");
  }
  return CsvSchema{{"y"}, {}, false};
}

void TrainConfig::Validate() const {
  if (hidden_sizes.empty()) throw InvalidArgument("need at least one hidden layer");
  for (int h : hidden_sizes) {
    if (h < 1) throw InvalidArgument("hidden layer sizes must be positive");
  }
  if (epochs < 0) throw InvalidArgument("epochs must be non-negative");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("learning rate must be positive");
  }
  if (batch_size < 1) throw InvalidArgument("batch size must be positive");
}

Json TrainConfigToJson(const TrainConfig& c) {
  Json j;
  j["hidden_sizes"] = c.hidden_sizes;
  j["epochs"] = c.epochs;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["loss"] = c.loss == Loss::kSquared ? "squared" : "softmax";
  return j;
}

TrainConfig TrainConfigFromJson(const Json& j, TrainConfig c) {
  if (!j.is_object()) throw ParseError("train config must be an object");
  try {
    if (j.contains("hidden_sizes")) c.hidden_sizes = j.at("hidden_sizes").get<std::vector<int>>();
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
    if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("loss")) {
      const auto loss = j.at("loss").get<std::string>();
      if (loss == "squared") {
        c.loss = Loss::kSquared;
      } else if (loss == "softmax") {
        c.loss = Loss::kSoftmaxCrossEntropy;
      } else {
        throw ParseError("loss must be 'squared' or 'softmax'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("train config: ") + e.what());
  }
  c.Validate();
  return c;
}

double DatasetLoss(const MlpModel& model, const Dataset& data, Loss loss) {
  std::vector<std::size_t> rows(data.rows());
  std::iota(rows.begin(), rows.end(), 0);
  const Eigen::MatrixXd out = ForwardBatch(model.layers(), BatchInputs(data, rows), nullptr, nullptr);
  return OutputLoss(out, data, rows, loss).loss / static_cast<double>(rows.size());
}

double DatasetMetric(const MlpModel& model, const Dataset& data) {
  std::vector<std::size_t> rows(data.rows());
  std::iota(rows.begin(), rows.end(), 0);
  const Eigen::MatrixXd out = ForwardBatch(model.layers(), BatchInputs(data, rows), nullptr, nullptr);
  if (data.is_classification()) {
    std::size_t correct = 0;
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      Eigen::Index arg = 0;
      out.col(c).maxCoeff(&arg);
      correct += static_cast<int>(arg) == data.labels[static_cast<std::size_t>(c)];
    }
    return static_cast<double>(correct) / static_cast<double>(rows.size());
  }
  return (out - data.targets.transpose()).array().square().mean();
}

TrainResult TrainMlp(const Dataset& data, const TrainConfig& config) {
  config.Validate();
  if (data.is_classification() != (config.loss == Loss::kSoftmaxCrossEntropy)) {
    throw InvalidArgument("softmax loss pairs with classification, squared with regression");
  }
  Rng init = MakeRng(config.seed, 0x1417);
  std::vector<DenseLayer> layers;
  int fan_in = static_cast<int>(data.dim());
  std::vector<int> sizes = config.hidden_sizes;
  sizes.push_back(OutputWidth(data));
  for (int width : sizes) {
    std::normal_distribution<double> he(0.0, std::sqrt(2.0 / fan_in));
    DenseLayer layer{Eigen::MatrixXd(width, fan_in), Eigen::VectorXd::Zero(width)};
    for (Eigen::Index r = 0; r < width; ++r) {
      for (Eigen::Index c = 0; c < fan_in; ++c) layer.weights(r, c) = he(init);
    }
    layers.push_back(std::move(layer));
    fan_in = width;
  }

  TrainResult result{MlpModel(layers), 0.0, 0.0};
  result.initial_loss = DatasetLoss(result.model, data, config.loss);
  if (!std::isfinite(result.initial_loss)) throw TrainingDiverged("initial loss is not finite");

  Rng shuffle = MakeRng(config.seed, 0x5F1E);
  std::vector<std::size_t> order(data.rows());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(stop));
      std::vector<Eigen::MatrixXd> pre, act;
      const Eigen::MatrixXd out = ForwardBatch(layers, BatchInputs(data, batch), &pre, &act);
      BatchLoss bl = OutputLoss(out, data, batch, config.loss);
      if (!std::isfinite(bl.loss)) {
        throw TrainingDiverged("loss became non-finite in epoch " + std::to_string(epoch));
      }
      const double scale = config.learning_rate / static_cast<double>(batch.size());
      Eigen::MatrixXd delta = bl.grad_out;
      for (std::size_t l = layers.size(); l-- > 0;) {
        Eigen::MatrixXd back;
        if (l > 0) {
          back = layers[l].weights.transpose() * delta;
          back = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
        }
        layers[l].weights -= scale * delta * act[l].transpose();
        layers[l].bias -= scale * delta.rowwise().sum();
        delta = std::move(back);
      }
    }
  }
  result.model = MlpModel(std::move(layers));
  result.final_loss = config.epochs == 0 ? result.initial_loss
                                         : DatasetLoss(result.model, data, config.loss);
  if (!std::isfinite(result.final_loss)) throw TrainingDiverged("final loss is not finite");
  return result;
}

void ExperimentConfig::Validate() const {
  if (n_models < 1 || n_examples < 1) throw InvalidArgument("need at least one model and example");
  if (n_thresholds < 2) throw InvalidArgument("need at least two thresholds");
  if (!(neighbourhood_fraction > 0.0 && neighbourhood_fraction <= 1.0)) {
    throw InvalidArgument("neighbourhood fraction must lie in (0, 1]");
  }
  if (calibration_examples < 1) throw InvalidArgument("need at least one calibration example");
  if (!(spurious_quantile >= 0.0 && spurious_quantile <= 1.0)) {
    throw InvalidArgument("spurious quantile must lie in [0, 1]");
  }
  if (methods.empty() || end_tasks.empty()) throw InvalidArgument("no methods or end tasks");
  if (!(injection_epsilon > 0.0)) throw InvalidArgument("injection epsilon must be positive");
  settings.Validate();
}

Json ExperimentConfigToJson(const ExperimentConfig& c) {
  Json j;
  j["n_models"] = c.n_models;
  j["n_examples"] = c.n_examples;
  j["n_thresholds"] = c.n_thresholds;
  j["neighbourhood_fraction"] = c.neighbourhood_fraction;
  j["calibration_examples"] = c.calibration_examples;
  j["spurious_quantile"] = c.spurious_quantile;
  Json methods = Json::array();
  for (auto m : c.methods) methods.push_back(std::string(MethodTag(m)));
  j["methods"] = methods;
  Json tasks = Json::array();
  for (auto t : c.end_tasks) tasks.push_back(std::string(TestKindTag(t)));
  j["end_tasks"] = tasks;
  j["settings"] = SettingsToJson(c.settings);
  j["seed"] = c.seed;
  j["injection"] = c.injection;
  j["injection_epsilon"] = c.injection_epsilon;
  return j;
}

ExperimentConfig ExperimentConfigFromJson(const Json& j, ExperimentConfig c) {
  if (!j.is_object()) throw ParseError("experiment config must be an object");
  try {
    if (j.contains("n_models")) c.n_models = j.at("n_models").get<int>();
    if (j.contains("n_examples")) c.n_examples = j.at("n_examples").get<int>();
    if (j.contains("n_thresholds")) c.n_thresholds = j.at("n_thresholds").get<int>();
    if (j.contains("neighbourhood_fraction")) {
      c.neighbourhood_fraction = j.at("neighbourhood_fraction").get<double>();
    }
    if (j.contains("calibration_examples")) {
      c.calibration_examples = j.at("calibration_examples").get<int>();
    }
    if (j.contains("spurious_quantile")) c.spurious_quantile = j.at("spurious_quantile").get<double>();
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(ParseMethod(m.get<std::string>()));
    }
    if (j.contains("end_tasks")) {
      c.end_tasks.clear();
      for (const auto& t : j.at("end_tasks")) {
        const auto tag = t.get<std::string>();
        if (tag == "recourse") {
          c.end_tasks.push_back(TestKind::kRecourseSign);
        } else if (tag == "spurious") {
          c.end_tasks.push_back(TestKind::kSpuriousMagnitude);
        } else {
          throw ParseError("unknown end task '" + tag + "'");
        }
      }
    }
    if (j.contains("settings")) c.settings = SettingsFromJson(j.at("settings"));
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("injection")) c.injection = j.at("injection").get<bool>();
    if (j.contains("injection_epsilon")) c.injection_epsilon = j.at("injection_epsilon").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
  c.Validate();
  return c;
}

namespace {

// Scores and labels for one (method, task, model) cell, flattened over
// (example, feature) in index order.
struct CellPredictions {
  std::vector<Prediction> items;
};

constexpr double kInjectionTieBand = 1e-6;

std::size_t Slot(std::size_t method, std::size_t task, std::size_t model,
                 std::size_t n_tasks, std::size_t n_models) {
  return (method * n_tasks + task) * n_models + model;
}

}  // namespace

SweepResult RunSweep(const Dataset& data, const ExperimentConfig& exp,
                     const TrainConfig& train, Exec exec) {
  exp.Validate();
  train.Validate();
  const std::size_t p = data.dim();
  const std::size_t n_rows = data.rows();
  const auto n_models = static_cast<std::size_t>(exp.n_models);
  const auto n_examples = static_cast<std::size_t>(exp.n_examples);
  const auto n_calib = static_cast<std::size_t>(exp.calibration_examples);
  if (n_rows < n_examples + n_calib + 2) {
    throw InvalidArgument("dataset has too few rows for the requested examples and calibration set");
  }
  std::vector<bool> include(p);
  for (std::size_t j = 0; j < p; ++j) include[j] = !data.categorical[j];
  std::vector<std::size_t> tested;
  for (std::size_t j = 0; j < p; ++j) {
    if (include[j]) tested.push_back(j);
  }
  if (tested.empty()) throw InvalidArgument("dataset has no non-categorical features");

  std::vector<double> ranges(p);
  for (std::size_t j = 0; j < p; ++j) {
    const auto col = data.features.col(static_cast<Eigen::Index>(j));
    ranges[j] = col.maxCoeff() - col.minCoeff();
  }

  // Shared split: test examples, calibration examples, training rows.
  std::vector<std::size_t> perm(n_rows);
  std::iota(perm.begin(), perm.end(), 0);
  Rng split = MakeRng(exp.seed, 0xE1);
  std::shuffle(perm.begin(), perm.end(), split);
  std::vector<std::vector<double>> examples, calibration;
  for (std::size_t i = 0; i < n_examples; ++i) examples.push_back(data.Row(perm[i]));
  for (std::size_t i = 0; i < n_calib; ++i) calibration.push_back(data.Row(perm[n_examples + i]));
  const std::vector<std::size_t> train_rows(perm.begin() + static_cast<std::ptrdiff_t>(n_examples + n_calib),
                                            perm.end());
  const Dataset train_set = SubsetRows(data, train_rows);

  // Baselines: the training distribution (first 100 shuffled training rows)
  // for SHAP, and the per-feature training minimum for IG.
  std::vector<std::vector<double>> background_rows;
  for (std::size_t i = 0; i < std::min<std::size_t>(100, train_rows.size()); ++i) {
    background_rows.push_back(train_set.Row(i));
  }
  const Baseline background(Empirical{background_rows});
  std::vector<double> minimum(p);
  for (std::size_t j = 0; j < p; ++j) minimum[j] = train_set.features.col(static_cast<Eigen::Index>(j)).minCoeff();
  const Baseline min_point(Pointmass{minimum});

  std::vector<Method> methods = exp.methods;
  if (exp.injection) {
    for (auto& m : methods) {
      if (m == Method::kShapSampled) m = Method::kShapExact;
    }
  }
  auto baseline_for = [&](Method m) -> const Baseline& {
    if (exp.injection) return background;
    return m == Method::kIntegratedGradients ? min_point : background;
  };
  const std::size_t output_k =
      data.is_classification() ? static_cast<std::size_t>(data.num_classes - 1) : 0;

  const std::size_t n_methods = methods.size();
  const std::size_t n_tasks = exp.end_tasks.size();
  std::vector<CellPredictions> cells(n_methods * n_tasks * n_models);

  Json model_meta = Json::array();
  long skipped_pairs = 0;

  if (!exp.injection) {
    TrainConfig model_train = train;
    if (data.is_classification()) model_train.loss = Loss::kSoftmaxCrossEntropy;
    std::vector<std::optional<TrainResult>> models(n_models);
    ForEachIndex(exec, static_cast<std::int64_t>(n_models), [&](std::int64_t m) {
      TrainConfig cfg = model_train;
      cfg.seed = DeriveSeed(exp.seed, train.seed, static_cast<std::uint64_t>(m));
      models[static_cast<std::size_t>(m)] = TrainMlp(train_set, cfg);
    });
    std::vector<Model> handles;
    for (std::size_t m = 0; m < n_models; ++m) {
      handles.emplace_back(models[m]->model);
      model_meta.push_back(Json{{"model_index", m},
                                {"initial_loss", models[m]->initial_loss},
                                {"final_loss", models[m]->final_loss},
                                {"train_metric", DatasetMetric(models[m]->model, train_set)}});
    }
    std::vector<double> spurious_eps(n_models, 0.0);
    ForEachIndex(exec, static_cast<std::int64_t>(n_models), [&](std::int64_t m) {
      spurious_eps[static_cast<std::size_t>(m)] =
          SpuriousThreshold(handles[static_cast<std::size_t>(m)], calibration, ranges, include,
                            exp.neighbourhood_fraction, output_k, exp.spurious_quantile);
    });
    for (std::size_t m = 0; m < n_models; ++m) model_meta[m]["spurious_epsilon"] = spurious_eps[m];

    // scores[m][e][method] (p values), truth[m][e][task] (p values)
    const std::size_t n_cells = n_models * n_examples;
    std::vector<std::vector<std::vector<double>>> scores(n_cells), truth(n_cells);
    ForEachIndex(exec, static_cast<std::int64_t>(n_cells), [&](std::int64_t cell) {
      const auto c = static_cast<std::size_t>(cell);
      const std::size_t m = c / n_examples, e = c % n_examples;
      const Model& model = handles[m];
      MethodSettings settings = exp.settings;
      settings.rng_seed = DeriveSeed(exp.settings.rng_seed ^ exp.seed, m, e);
      for (std::size_t mi = 0; mi < n_methods; ++mi) {
        const Attribution a = Attribute(methods[mi], model, baseline_for(methods[mi]),
                                        examples[e], settings, Exec::kSerial);
        std::vector<double> row(p);
        for (std::size_t j = 0; j < p; ++j) row[j] = a(j, output_k);
        scores[c].push_back(std::move(row));
      }
      for (std::size_t ti = 0; ti < n_tasks; ++ti) {
        std::vector<double> row(p, 0.0);
        for (std::size_t j : tested) {
          const Neighbourhood nb{examples[e], j, exp.neighbourhood_fraction, ranges[j]};
          row[j] = exp.end_tasks[ti] == TestKind::kRecourseSign
                       ? RecourseGroundTruth(model, nb, output_k)
                       : SpuriousGroundTruth(model, nb, output_k, spurious_eps[m]);
        }
        truth[c].push_back(std::move(row));
      }
    });
    for (std::size_t c = 0; c < n_cells; ++c) {
      const std::size_t m = c / n_examples;
      for (std::size_t mi = 0; mi < n_methods; ++mi) {
        for (std::size_t ti = 0; ti < n_tasks; ++ti) {
          auto& cp = cells[Slot(mi, ti, m, n_tasks, n_models)];
          for (std::size_t j : tested) {
            cp.items.push_back({scores[c][mi][j], static_cast<int>(truth[c][ti][j])});
          }
        }
      }
    }
  } else {
    // One forged (null, alternate) pair per (model, example, feature, task).
    const std::size_t n_feat = tested.size();
    const std::size_t n_items = n_models * n_examples * n_feat * n_tasks;
    struct Item {
      bool ok = false;
      std::vector<double> null_scores, alt_scores;  // per method
      int null_truth = 0, alt_truth = 0;
    };
    std::vector<Item> items(n_items);
    ForEachIndex(exec, static_cast<std::int64_t>(n_items), [&](std::int64_t idx) {
      auto rest = static_cast<std::size_t>(idx);
      const std::size_t ti = rest % n_tasks;
      rest /= n_tasks;
      const std::size_t j = tested[rest % n_feat];
      rest /= n_feat;
      const std::size_t e = rest % n_examples;
      const std::size_t m = rest / n_examples;
      const std::vector<double>& x = examples[e];
      const double delta = exp.neighbourhood_fraction * ranges[j];
      Rng rng(DeriveSeed(exp.seed, 0x1A, static_cast<std::uint64_t>(idx)));
      const double phi = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
      const bool recourse = exp.end_tasks[ti] == TestKind::kRecourseSign;
      const double slope = recourse ? 1.0 : exp.injection_epsilon / delta;
      const PiecewiseLinear1D g0 = recourse ? PiecewiseLinear1D::Affine(-1.0, x[j], 0.0)
                                            : PiecewiseLinear1D::Constant(0.0);
      const PiecewiseLinear1D g1 = PiecewiseLinear1D::Affine(slope, x[j], 0.0);
      double lo = x[j] - delta, hi = x[j] + delta;
      for (const auto& s : background.support()) {
        lo = std::min(lo, s[j]);
        hi = std::max(hi, s[j]);
      }
      const Range domain{lo - 1.0, hi + 1.0};
      Item& item = items[static_cast<std::size_t>(idx)];
      std::optional<std::pair<ForgedModel, ForgedModel>> pair;
      try {
        pair = ForgePair(LocalBehaviour{g0, x, j, delta}, LocalBehaviour{g1, x, j, delta},
                         background, domain, phi);
      } catch (const AssumptionViolated&) {
        return;
      }
      item.ok = true;
      const Neighbourhood nb{x, j, exp.neighbourhood_fraction, ranges[j]};
      auto label = [&](const Model& f) {
        return recourse ? RecourseGroundTruth(f, nb, 0)
                        : SpuriousGroundTruthSup(f, nb, 0, 0.5 * exp.injection_epsilon);
      };
      item.null_truth = label(pair->first.model);
      item.alt_truth = label(pair->second.model);
      MethodSettings settings = exp.settings;
      settings.rng_seed = DeriveSeed(exp.settings.rng_seed ^ exp.seed, m, e);
      for (Method method : methods) {
        item.null_scores.push_back(
            Attribute(method, pair->first.model, background, x, settings, Exec::kSerial)(j));
        item.alt_scores.push_back(
            Attribute(method, pair->second.model, background, x, settings, Exec::kSerial)(j));
      }
    });
    for (std::size_t idx = 0; idx < n_items; ++idx) {
      const Item& item = items[idx];
      if (!item.ok) {
        ++skipped_pairs;
        continue;
      }
      const std::size_t ti = idx % n_tasks;
      const std::size_t m = idx / (n_tasks * n_feat * n_examples);
      for (std::size_t mi = 0; mi < n_methods; ++mi) {
        auto& cp = cells[Slot(mi, ti, m, n_tasks, n_models)];
        cp.items.push_back({item.null_scores[mi], item.null_truth});
        cp.items.push_back({item.alt_scores[mi], item.alt_truth});
      }
    }
  }

  SweepResult result;
  result.dataset = data.name;
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    for (std::size_t ti = 0; ti < n_tasks; ++ti) {
      SweepCurve curve;
      curve.method = methods[mi];
      curve.task = exp.end_tasks[ti];
      std::vector<double> all_scores;
      std::vector<Prediction> pooled;
      for (std::size_t m = 0; m < n_models; ++m) {
        for (const auto& pr : cells[Slot(mi, ti, m, n_tasks, n_models)].items) {
          all_scores.push_back(pr.score);
          pooled.push_back(pr);
        }
      }
      if (all_scores.empty()) throw InvalidArgument("sweep produced no predictions");
      // Forged pairs agree only to rounding, so keep thresholds off their scores.
      double band = 0.0;
      if (exp.injection) {
        for (double v : all_scores) band = std::max(band, std::abs(v));
        band = kInjectionTieBand * std::max(1.0, band);
      }
      curve.thresholds = ThresholdGrid(all_scores, curve.task, exp.n_thresholds, band);
      for (std::size_t m = 0; m < n_models; ++m) {
        RocCurve rc = BuildRocCurve(cells[Slot(mi, ti, m, n_tasks, n_models)].items, curve.task,
                                    curve.thresholds);
        rc.method_tag = std::string(MethodTag(curve.method));
        rc.dataset = data.name;
        curve.per_model.push_back(std::move(rc));
      }
      curve.pooled = BuildRocCurve(pooled, curve.task, curve.thresholds);
      curve.pooled.method_tag = std::string(MethodTag(curve.method));
      curve.pooled.dataset = data.name;
      result.curves.push_back(std::move(curve));
    }
  }

  Json meta;
  meta["dataset"] = data.name;
  meta["rows"] = n_rows;
  meta["features"] = data.feature_names;
  meta["tested_features"] = tested;
  meta["output_index"] = output_k;
  meta["experiment"] = ExperimentConfigToJson(exp);
  meta["train"] = TrainConfigToJson(train);
  meta["methods_run"] = MethodList(methods);
  meta["averaging"] = "micro: confusion counts pooled over (example, feature) per model";
  meta["baselines"] = exp.injection
                          ? Json{{"all", "empirical: 100 training rows"}}
                          : Json{{"shap", "empirical: 100 training rows"},
                                 {"ig", "pointmass: per-feature training minimum"}};
  meta["spurious_ground_truth"] =
      exp.injection ? "sup over positive offsets >= epsilon / 2"
                    : "neighbourhood variance > pooled calibration quantile";
  meta["models"] = model_meta;
  meta["skipped_pairs"] = skipped_pairs;
  meta["warnings"] = data.warnings;
  result.metadata = std::move(meta);
  return result;
}

std::string SweepCurveCsv(const SweepCurve& curve) {
  std::ostringstream os;
  os << std::setprecision(17) << "model_index,threshold,fpr,tpr\n";
  for (std::size_t m = 0; m < curve.per_model.size(); ++m) {
    for (const auto& pt : curve.per_model[m].points) {
      os << m << ',' << pt.threshold << ',' << pt.fpr << ',' << pt.tpr << '\n';
    }
  }
  return os.str();
}

std::vector<std::filesystem::path> WriteSweep(const SweepResult& result,
                                              const std::filesystem::path& dir,
                                              bool json_format) {
  std::vector<std::filesystem::path> written;
  std::map<TestKind, std::vector<PlotSeries>> plots;
  for (const auto& curve : result.curves) {
    const std::string stem = result.dataset + "_" + std::string(MethodTag(curve.method)) + "_" +
                             std::string(TestKindTag(curve.task));
    std::filesystem::path path = dir / (stem + (json_format ? ".json" : ".csv"));
    if (json_format) {
      Json rows = Json::array();
      for (std::size_t m = 0; m < curve.per_model.size(); ++m) {
        for (const auto& pt : curve.per_model[m].points) {
          rows.push_back(Json{{"model_index", m}, {"threshold", pt.threshold},
                              {"fpr", pt.fpr}, {"tpr", pt.tpr}});
        }
      }
      WriteTextFile(path, rows.dump(1) + "\n");
    } else {
      WriteTextFile(path, SweepCurveCsv(curve));
    }
    written.push_back(path);
    PlotSeries series{std::string(MethodTag(curve.method)), {}};
    for (const auto& pt : curve.pooled.points) series.points.emplace_back(pt.fpr, pt.tpr);
    plots[curve.task].push_back(std::move(series));
  }
  for (const auto& [task, series] : plots) {
    const std::string title = result.dataset + " " + std::string(TestKindTag(task));
    const auto path = dir / (result.dataset + "_" + std::string(TestKindTag(task)) + ".svg");
    WriteTextFile(path, RocPlotSvg(title, series));
    written.push_back(path);
  }
  const auto meta = dir / (result.dataset + "_metadata.json");
  WriteTextFile(meta, result.metadata.dump(2) + "\n");
  written.push_back(meta);
  return written;
}

}  // namespace attrib
