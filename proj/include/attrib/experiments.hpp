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

// Tabular experiment pipeline: CSV ingestion and z-scoring, small ReLU
// networks trained with seeded mini-batch SGD, and the ROC sweep over
// (model, example, feature, method, end task).

#ifndef ATTRIB_EXPERIMENTS_HPP_
#define ATTRIB_EXPERIMENTS_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "attrib/attribution.hpp"
#include "attrib/hyptest.hpp"
#include "attrib/model.hpp"
#include "attrib/serialize.hpp"

namespace attrib {

struct FeatureStats {
  double mean = 0.0;
  double std = 1.0;
};

struct CsvSchema {
  std::vector<std::string> targets;
  std::vector<std::string> categorical;
  bool classification = false;
};

CsvSchema SchemaFromJson(const Json& j);

struct Dataset {
  std::string name;
  Eigen::MatrixXd features;  // N x p, normalized
  Eigen::MatrixXd targets;   // N x q regression targets (empty for classification)
  std::vector<int> labels;   // class index per row (classification only)
  int num_classes = 0;       // 0 for regression
  std::vector<std::string> feature_names;
  std::vector<FeatureStats> stats;
  // One-hot columns from categorical inputs; excluded from per-feature tests.
  std::vector<bool> categorical;
  std::vector<std::string> warnings;

  std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  bool is_classification() const { return num_classes > 0; }
  std::vector<double> Row(std::size_t i) const;
};

// Builds a normalized dataset from raw numeric columns. Constant columns are
// dropped with a warning. `class_labels` is used when non-empty.
Dataset MakeDataset(std::string name, const Eigen::MatrixXd& raw,
                    std::vector<std::string> feature_names,
                    const Eigen::MatrixXd& targets,
                    const std::vector<std::string>& class_labels = {},
                    std::vector<bool> categorical = {});

// Parses CSV text with a header row. Throws ParseError on malformed rows,
// non-numeric values in numeric columns, and missing values.
Dataset IngestCsvText(const std::string& text, const CsvSchema& schema,
                      std::string name);
Dataset IngestCsv(const std::filesystem::path& path, const CsvSchema& schema);

// Synthetic CSV sources (header included, 17 significant digits).
//   "additive": y = 2 x0 - x1 + sin(2 x2) + 0.5 x3^2 + noise, x4 unused.
//   "spurious": y = x0 + x1 + noise; x2 = x0 + 0.5 z is a planted feature
//               the target does not depend on; x3 is pure noise.
std::string SyntheticCsv(const std::string& kind, std::size_t rows,
                         std::uint64_t seed);
CsvSchema SyntheticSchema(const std::string& kind);

enum class Loss { kSquared, kSoftmaxCrossEntropy };

struct TrainConfig {
  std::vector<int> hidden_sizes{16};
  int epochs = 40;
  double learning_rate = 0.05;
  int batch_size = 32;
  std::uint64_t seed = 0;
  Loss loss = Loss::kSquared;

  void Validate() const;
};

Json TrainConfigToJson(const TrainConfig& c);
TrainConfig TrainConfigFromJson(const Json& j, TrainConfig base = {});

struct TrainResult {
  MlpModel model;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

// He-initialized ReLU network trained by plain mini-batch SGD; rows are
// reshuffled every epoch from a stream derived from config.seed. Squared
// loss is 0.5 * ||out - y||^2 averaged over rows. Throws TrainingDiverged
// when the loss becomes non-finite.
TrainResult TrainMlp(const Dataset& data, const TrainConfig& config);

double DatasetLoss(const MlpModel& model, const Dataset& data, Loss loss);
// Accuracy for classification, mean squared error for regression.
double DatasetMetric(const MlpModel& model, const Dataset& data);

struct ExperimentConfig {
  int n_models = 10;
  int n_examples = 20;
  int n_thresholds = 40;
  double neighbourhood_fraction = 0.1;
  int calibration_examples = 100;
  double spurious_quantile = 0.8;
  std::vector<Method> methods{Method::kShapSampled, Method::kIntegratedGradients,
                              Method::kGradient, Method::kSmoothGrad, Method::kLime};
  std::vector<TestKind> end_tasks{TestKind::kRecourseSign, TestKind::kSpuriousMagnitude};
  MethodSettings settings;
  std::uint64_t seed = 0;
  // Replace trained models by forged pairs (one pair per example and feature).
  bool injection = false;
  // Height of the spurious bump in injection mode.
  double injection_epsilon = 0.1;

  void Validate() const;
};

Json ExperimentConfigToJson(const ExperimentConfig& c);
ExperimentConfig ExperimentConfigFromJson(const Json& j, ExperimentConfig base = {});

struct SweepCurve {
  Method method = Method::kGradient;
  TestKind task = TestKind::kRecourseSign;
  std::vector<double> thresholds;
  std::vector<RocCurve> per_model;
  RocCurve pooled;  // micro-averaged over models
};

struct SweepResult {
  std::string dataset;
  std::vector<SweepCurve> curves;
  Json metadata;
};

SweepResult RunSweep(const Dataset& data, const ExperimentConfig& exp,
                     const TrainConfig& train, Exec exec = Exec::kParallel);

// {dataset}_{method}_{task}.csv (model_index, threshold, fpr, tpr), one
// {dataset}_{task}.svg per task, and {dataset}_metadata.json. Returns the
// written paths.
std::vector<std::filesystem::path> WriteSweep(const SweepResult& result,
                                              const std::filesystem::path& dir,
                                              bool json_format = false);

std::string SweepCurveCsv(const SweepCurve& curve);

}  // namespace attrib

#endif  // ATTRIB_EXPERIMENTS_HPP_
