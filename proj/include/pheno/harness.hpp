#pragma once

// Training orchestration for every model kind, ensembling, and end-to-end
// model-comparison experiments on synthetic data.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pheno/baselines.hpp"
#include "pheno/checkpoint.hpp"
#include "pheno/model.hpp"
#include "pheno/synth.hpp"
#include "pheno/training.hpp"

namespace pheno {

struct TrainConfig {
  ModelKind model = ModelKind::lstm;
  InputKind input = InputKind::sequence;
  std::vector<int> layers = {64, 64};  // LSTM cells or MLP hidden widths
  double dropout = 0.0;
  ObjectiveConfig objective;  // primary_label_count 0 means "all non-auxiliary labels"
  SgdConfig sgd;
  int epochs = 100;
  int batch_size = 16;
  std::uint64_t seed = 1;
  int k = 10;
  std::optional<int> truncate_last_hours;
  int threads = 1;
  std::vector<double> lambda_grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
};

// Defaults for a model kind: 100 epochs for the LSTM, 1000 with 3x300
// hidden units and dropout 0.5 for the MLP.
TrainConfig default_train_config(ModelKind kind);

void validate_train_config(const TrainConfig& config);

struct TrainOutcome {
  Model selected;  // parameters at the validation-selected epoch
  Model final_model;
  int selected_epoch = 0;
  RunHistory history;  // empty for models fitted in closed form
  SgdConfig sgd;
  std::optional<ModelParams> velocity;
};

// Trains on data.train and records validation metrics on data.validation.
// With `checkpoint_dir`, every epoch is saved as epoch_NNNN.json and the
// directory is pruned to the per-metric bests plus the last epoch afterward.
TrainOutcome train(const Dataset& data, const TrainConfig& config,
                   const std::optional<std::filesystem::path>& checkpoint_dir = std::nullopt);

Checkpoint make_checkpoint(const TrainOutcome& outcome, const TrainConfig& config, bool selected);

enum class EnsembleMode { mean, max };
EnsembleMode ensemble_mode_from_string(const std::string& name);

PredictionMatrix ensemble(const PredictionMatrix& a, const PredictionMatrix& b, EnsembleMode mode);

struct LabeledPredictions {
  std::vector<std::string> episode_ids;
  PredictionMatrix pm;
};

// {"episode_ids": [...], "scores": [[...]], "labels": [[...]]}
std::string predictions_to_json(const LabeledPredictions& p);
LabeledPredictions predictions_from_json(const std::string& text);

// t,label_id,probability rows for a T x L trajectory (t counts hours from 0).
std::string trajectory_csv(const Eigen::MatrixXd& per_step);

struct SuiteModel {
  std::string name;
  TrainConfig config;
};

// Constituents are model names, or "best_lstm" / "best_mlp" for the model
// of that kind with the highest validation micro AUC.
struct SuiteEnsemble {
  std::string name;
  std::string a;
  std::string b;
  EnsembleMode mode = EnsembleMode::mean;
};

struct SuiteConfig {
  SynthConfig synth;
  int primary_label_count = 16;
  std::uint64_t seed = 1;
  int k = 10;
  int threads = 1;
  std::vector<SuiteModel> models;
  std::vector<SuiteEnsemble> ensembles;
};

// The full comparison grid: base rate, logistic and MLP on both flat inputs,
// LSTM {plain, AO, TR, TR+AO} x {64 cells, 128 cells with dropout}, linear
// gain, and mean/max ensembles of the best LSTM and MLP.
SuiteConfig default_suite_config(std::uint64_t seed);

struct SuiteRow {
  std::string name;
  ModelKind kind = ModelKind::base_rate;
  MetricReport test;           // test-set metrics, thresholds tuned on validation
  double validation_micro_auc = 0.0;
  int selected_epoch = 0;
  RunHistory history;
  PredictionMatrix validation_predictions;
  PredictionMatrix test_predictions;
};

struct SuiteResult {
  std::vector<SuiteRow> rows;

  const SuiteRow* find(const std::string& name) const;
};

SuiteResult run_experiment(const SuiteConfig& config);
SuiteResult run_experiment(const SuiteConfig& config, const Dataset& data);

// model,micro_auc,macro_auc,micro_f1,macro_f1,precision_at_<k>
std::string comparison_csv(const SuiteResult& result, int k);

}  // namespace pheno
