#pragma once

// Trained models of every kind behind one value type, and the dataset view
// they consume.

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "pheno/baselines.hpp"
#include "pheno/dense.hpp"
#include "pheno/episode.hpp"
#include "pheno/lstm.hpp"
#include "pheno/metrics.hpp"
#include "pheno/objectives.hpp"

namespace pheno {

enum class ModelKind { base_rate, logistic, mlp, lstm };
// sequence: hourly grid as a channels x T sequence; features: summary
// statistics; window: first and last hours flattened.
enum class InputKind { sequence, features, window };

std::string to_string(ModelKind kind);
std::string to_string(InputKind kind);
ModelKind model_kind_from_string(const std::string& name);
InputKind input_kind_from_string(const std::string& name);

using ModelParams = std::variant<BaseRateModel, LogisticModel, MlpParams, LstmParams>;

struct Model {
  ModelKind kind = ModelKind::lstm;
  InputKind input = InputKind::sequence;
  ObjectiveConfig objective;  // output width and the primary-label mask
  ModelParams params;
  std::vector<ChannelSpec> specs = default_channel_specs();
  std::optional<int> truncate_last_hours;
};

struct Dataset {
  std::vector<std::string> ids;
  std::vector<RegularGrid> grids;
  std::vector<Eigen::MatrixXd> sequences;  // channels x T, optionally truncated
  Eigen::MatrixXd features;                // feature dim x N
  Eigen::MatrixXd windows;                 // window dim x N
  LabelMatrix labels;                      // N x (primary + aux)
  int primary_label_count = 0;
  int aux_label_count = 0;
  std::optional<int> truncate_last_hours;
  std::vector<int> train, validation, test;  // indices into the rows above

  int size() const { return static_cast<int>(ids.size()); }
  LabelMatrix primary_labels(std::span<const int> rows) const;
  LabelMatrix all_labels(std::span<const int> rows) const;
};

// Channels x T input, keeping only the last `hours` rows when set.
Eigen::MatrixXd sequence_input(const RegularGrid& grid, std::optional<int> truncate_last_hours);

// Builds every input representation. Label vectors must hold at least
// primary + aux entries; extra entries are ignored.
Dataset build_dataset(std::vector<RegularGrid> grids, const std::vector<std::vector<int>>& labels,
                      int primary_label_count, int aux_label_count,
                      std::optional<int> truncate_last_hours = std::nullopt);

Dataset build_dataset(const std::vector<RawEpisode>& episodes, const std::vector<ChannelSpec>& specs,
                      int primary_label_count, int aux_label_count,
                      std::optional<int> truncate_last_hours = std::nullopt, int threads = 1);

// Train/validation/test indices from split_dataset over the ids.
void assign_split(Dataset& data, std::uint64_t seed);

std::vector<int> all_rows(const Dataset& data);

// Primary-label probabilities, one row per requested example.
Eigen::MatrixXd predict(const Model& model, const Dataset& data, std::span<const int> rows,
                        int threads = 1);

PredictionMatrix predictions_for(const Model& model, const Dataset& data, std::span<const int> rows,
                                 int threads = 1);

// Per-step primary-label probabilities for one LSTM input, T x primary.
Eigen::MatrixXd predict_per_step(const Model& model, const RegularGrid& grid);

}  // namespace pheno
