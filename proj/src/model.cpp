#include "pheno/model.hpp"

#include "pheno/features.hpp"
#include "pheno/kernels.hpp"

namespace pheno {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::base_rate: return "base_rate";
    case ModelKind::logistic: return "logistic";
    case ModelKind::mlp: return "mlp";
    case ModelKind::lstm: return "lstm";
  }
  return "?";
}

std::string to_string(InputKind kind) {
  switch (kind) {
    case InputKind::sequence: return "sequence";
    case InputKind::features: return "features";
    case InputKind::window: return "window";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
  for (auto k : {ModelKind::base_rate, ModelKind::logistic, ModelKind::mlp, ModelKind::lstm})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown model kind '" + name + "'");
}

InputKind input_kind_from_string(const std::string& name) {
  for (auto k : {InputKind::sequence, InputKind::features, InputKind::window})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown input kind '" + name + "'");
}

LabelMatrix Dataset::primary_labels(std::span<const int> rows) const {
  LabelMatrix out(static_cast<Eigen::Index>(rows.size()), primary_label_count);
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = labels.row(rows[i]).head(primary_label_count);
  return out;
}

LabelMatrix Dataset::all_labels(std::span<const int> rows) const {
  LabelMatrix out(static_cast<Eigen::Index>(rows.size()), labels.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = labels.row(rows[i]);
  return out;
}

Eigen::MatrixXd sequence_input(const RegularGrid& grid, std::optional<int> truncate_last_hours) {
  int T = grid.length();
  if (truncate_last_hours) {
    if (*truncate_last_hours < 1) throw ConfigError("truncate_last_hours must be >= 1");
    T = std::min(T, *truncate_last_hours);
  }
  return grid.values.bottomRows(T).transpose();
}

Dataset build_dataset(std::vector<RegularGrid> grids, const std::vector<std::vector<int>>& labels,
                      int primary_label_count, int aux_label_count,
                      std::optional<int> truncate_last_hours) {
  if (grids.size() != labels.size()) throw InputError("dataset: one label vector per grid required");
  if (grids.empty()) throw InputError("dataset: no episodes");
  if (primary_label_count < 1) throw ConfigError("primary_label_count must be >= 1");
  if (aux_label_count < 0) throw ConfigError("aux_label_count must be >= 0");
  const int width = primary_label_count + aux_label_count;
  Dataset d;
  d.primary_label_count = primary_label_count;
  d.aux_label_count = aux_label_count;
  d.truncate_last_hours = truncate_last_hours;
  const auto n = static_cast<Eigen::Index>(grids.size());
  d.labels.resize(n, width);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& y = labels[i];
    if (static_cast<int>(y.size()) < primary_label_count)
      throw InputError("episode " + grids[i].episode_id + " has " + std::to_string(y.size()) +
                       " labels, expected at least " + std::to_string(primary_label_count));
    if (static_cast<int>(y.size()) < width)
      throw InputError("auxiliary labels configured but absent from episode " + grids[i].episode_id);
    for (int l = 0; l < width; ++l) d.labels(i, l) = y[l];
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& g = grids[i];
    d.ids.push_back(g.episode_id);
    d.sequences.push_back(sequence_input(g, truncate_last_hours));
    const FeatureVector fv = extract_features(g);
    const FixedWindow fw = first_last_window(g);
    if (i == 0) {
      d.features.resize(fv.values.size(), n);
      d.windows.resize(fw.values.size(), n);
    }
    if (fv.values.size() != d.features.rows())
      throw InputError("episode " + g.episode_id + " has a different channel count");
    d.features.col(i) = fv.values;
    d.windows.col(i) = fw.values;
  }
  d.grids = std::move(grids);
  return d;
}

Dataset build_dataset(const std::vector<RawEpisode>& episodes, const std::vector<ChannelSpec>& specs,
                      int primary_label_count, int aux_label_count,
                      std::optional<int> truncate_last_hours, int threads) {
  std::vector<std::vector<int>> labels;
  for (const auto& ep : episodes) labels.push_back(ep.labels);
  return build_dataset(kernels::preprocess_all(episodes, specs, threads), labels,
                       primary_label_count, aux_label_count, truncate_last_hours);
}

void assign_split(Dataset& data, std::uint64_t seed) {
  const DatasetSplit split = split_dataset(data.ids, seed);
  std::map<std::string, int> index;
  for (int i = 0; i < data.size(); ++i)
    if (!index.emplace(data.ids[i], i).second) throw InputError("duplicate episode id " + data.ids[i]);
  auto lookup = [&](const std::vector<std::string>& ids) {
    std::vector<int> rows;
    for (const auto& id : ids) rows.push_back(index.at(id));
    return rows;
  };
  data.train = lookup(split.train);
  data.validation = lookup(split.validation);
  data.test = lookup(split.test);
}

std::vector<int> all_rows(const Dataset& data) {
  std::vector<int> rows(data.size());
  for (int i = 0; i < data.size(); ++i) rows[i] = i;
  return rows;
}

namespace {

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& m, std::span<const int> rows) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(rows[i]);
  return out;
}

const Eigen::MatrixXd& flat_inputs(const Model& model, const Dataset& data) {
  switch (model.input) {
    case InputKind::features: return data.features;
    case InputKind::window: return data.windows;
    case InputKind::sequence: break;
  }
  throw InputError(to_string(model.kind) + " model cannot take sequence inputs");
}

}  // namespace

Eigen::MatrixXd predict(const Model& model, const Dataset& data, std::span<const int> rows,
                        int threads) {
  const int primary = model.objective.primary_label_count;
  if (primary != data.primary_label_count)
    throw InputError("model predicts " + std::to_string(primary) + " labels, data has " +
                     std::to_string(data.primary_label_count));
  Eigen::MatrixXd scores;
  switch (model.kind) {
    case ModelKind::base_rate:
      scores = predict_base_rate(std::get<BaseRateModel>(model.params), static_cast<int>(rows.size()));
      break;
    case ModelKind::logistic:
      scores = predict_logistic(std::get<LogisticModel>(model.params),
                                gather_columns(flat_inputs(model, data), rows));
      break;
    case ModelKind::mlp:
      scores = mlp_predict(std::get<MlpParams>(model.params),
                           gather_columns(flat_inputs(model, data), rows))
                   .transpose();
      break;
    case ModelKind::lstm: {
      if (model.input != InputKind::sequence) throw InputError("LSTM models take sequence inputs");
      if (model.truncate_last_hours != data.truncate_last_hours)
        throw InputError("dataset truncation differs from the model's");
      std::vector<const Eigen::MatrixXd*> inputs;
      for (int r : rows) inputs.push_back(&data.sequences[r]);
      scores = kernels::lstm_predict_final(std::get<LstmParams>(model.params), inputs, threads);
      break;
    }
  }
  return mask_predictions(scores, model.objective);
}

PredictionMatrix predictions_for(const Model& model, const Dataset& data, std::span<const int> rows,
                                 int threads) {
  return {predict(model, data, rows, threads), data.primary_labels(rows)};
}

Eigen::MatrixXd predict_per_step(const Model& model, const RegularGrid& grid) {
  if (model.kind != ModelKind::lstm) throw InputError("per-step predictions need an LSTM model");
  const auto& params = std::get<LstmParams>(model.params);
  const Eigen::MatrixXd x = sequence_input(grid, model.truncate_last_hours);
  if (x.rows() != params.input_dim())
    throw InputError("episode has " + std::to_string(x.rows()) + " channels, model expects " +
                     std::to_string(params.input_dim()));
  return mask_predictions(predict_sequence(x, params).transpose(), model.objective);
}

}  // namespace pheno
