#pragma once

#include <optional>

#include "ve/dataset.hpp"
#include "ve/eval.hpp"

namespace ve {

struct TrainOptions {
  ModelKind kind = ModelKind::Rgb2Depth;
  uint64_t seed = 1;
  int epochs = 10;
  int batch = 8;
  double lr = 1e-3;
  // when set, encoder weights are loaded from this pretext checkpoint
  std::optional<std::filesystem::path> init_checkpoint;
  bool quiet = false;
};

struct LogRow {
  int epoch = 0;
  std::string split;
  double loss = 0;
  double metric = 0;  // accuracy for classifiers, val loss otherwise
};

struct TrainResult {
  std::filesystem::path checkpoint;
  std::vector<LogRow> log;
};

// Mini-batch Adam training; deterministic given (dataset, options).
// Writes checkpoint.ckpt and log.csv under out_dir.
TrainResult train_model(const Dataset& data, const ModelConfig& model_cfg,
                        const TrainOptions& opt,
                        const std::filesystem::path& out_dir);

DepthMetrics eval_depth_model(Model& model, const Dataset& data,
                              const std::string& split);
NormalMetrics eval_normals_model(Model& model, const Dataset& data,
                                 const std::string& split);
double eval_classification_model(Model& model, const Dataset& data,
                                 const std::string& split);
// Average-depth predictor fit on the train split, scored on eval_split.
DepthMetrics eval_average_baseline(const Dataset& data,
                                   const std::string& eval_split);

// Experiment names: case_study, pretext, transfer_depth, transfer_normals,
// ablations. Returns the JSON summary that is also written to out_dir.
std::string run_experiment(const std::string& name, const Dataset& data,
                           const ExperimentConfig& cfg,
                           const std::filesystem::path& out_dir);

}  // namespace ve
