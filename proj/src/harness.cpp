#include "pheno/harness.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pheno/config.hpp"
#include "pheno/io.hpp"
#include "pheno/kernels.hpp"

namespace pheno {

TrainConfig default_train_config(ModelKind kind) {
  TrainConfig c;
  c.model = kind;
  if (kind == ModelKind::mlp) {
    c.input = InputKind::features;
    c.layers = {300, 300, 300};
    c.dropout = 0.5;
    c.epochs = 1000;
  } else if (kind != ModelKind::lstm) {
    c.input = InputKind::features;
    c.layers.clear();
  }
  return c;
}

void validate_train_config(const TrainConfig& c) {
  if (c.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (c.k < 1) throw ConfigError("k must be >= 1");
  if (c.threads < 1) throw ConfigError("threads must be >= 1");
  validate_dropout(c.dropout);
  validate_sgd(c.sgd);
  if (c.objective.primary_label_count < 0) throw ConfigError("primary_label_count must be >= 0");
  if (c.objective.aux_label_count < 0) throw ConfigError("aux_label_count must be >= 0");
  if (!(c.objective.alpha >= 0.0 && c.objective.alpha <= 1.0)) throw ConfigError("alpha must be in [0, 1]");
  if (c.truncate_last_hours && *c.truncate_last_hours < 1)
    throw ConfigError("truncate_last_hours must be >= 1");
  const bool sequence = c.input == InputKind::sequence;
  if ((c.model == ModelKind::lstm) != sequence && c.model != ModelKind::base_rate)
    throw ConfigError(to_string(c.model) + " models cannot take '" + to_string(c.input) + "' inputs");
  if (c.model == ModelKind::lstm || c.model == ModelKind::mlp) {
    if (c.layers.empty()) throw ConfigError("layers must not be empty");
    for (int w : c.layers)
      if (w < 1) throw ConfigError("layer sizes must be >= 1");
  }
  if (c.model != ModelKind::lstm && c.objective.aux_label_count > 0)
    throw ConfigError("auxiliary outputs are only supported by the LSTM");
  if (c.model == ModelKind::logistic) {
    if (c.lambda_grid.empty()) throw ConfigError("lambda_grid must not be empty");
    for (double l : c.lambda_grid)
      if (!(l >= 0.0)) throw ConfigError("lambda_grid entries must be >= 0");
  }
}

namespace {

std::string epoch_file(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%04d.json", epoch);
  return buf;
}

ObjectiveConfig resolve_objective(const Dataset& data, const TrainConfig& config) {
  ObjectiveConfig obj = config.objective;
  if (obj.primary_label_count == 0) obj.primary_label_count = data.primary_label_count;
  if (obj.primary_label_count != data.primary_label_count)
    throw ConfigError("config has " + std::to_string(obj.primary_label_count) +
                      " primary labels, data has " + std::to_string(data.primary_label_count));
  if (config.model != ModelKind::lstm) {
    obj.aux_label_count = 0;
    obj.mode = ObjectiveMode::final_only;
  }
  if (obj.aux_label_count > data.aux_label_count)
    throw InputError("auxiliary labels configured but absent from the data");
  validate_objective(obj);
  return obj;
}

Dataset with_truncation(const Dataset& data, std::optional<int> truncate) {
  Dataset d = data;
  d.truncate_last_hours = truncate;
  for (int i = 0; i < d.size(); ++i) d.sequences[i] = sequence_input(d.grids[i], truncate);
  return d;
}

void prune_checkpoints(const std::filesystem::path& dir, const RunHistory& history) {
  std::set<int> keep = {history.epochs.back().epoch};
  for (auto m : {SelectionMetric::micro_auc, SelectionMetric::micro_f1, SelectionMetric::precision_at_k})
    keep.insert(best_epoch(history, m));
  for (const auto& rec : history.epochs)
    if (!keep.count(rec.epoch)) std::filesystem::remove(dir / epoch_file(rec.epoch));
}

template <class P>
std::function<std::string(int, const P&, const OptimizerState<P>&)> checkpoint_hook(
    const std::optional<std::filesystem::path>& dir, const Model& prototype, const std::string& digest) {
  if (!dir) return {};
  return [dir = *dir, prototype, digest](int epoch, const P& params, const OptimizerState<P>& opt) {
    Checkpoint c;
    c.epoch = epoch;
    c.config_digest = digest;
    c.model = prototype;
    c.model.params = params;
    c.sgd = opt.config;
    c.velocity = opt.velocity;
    const auto path = dir / epoch_file(epoch);
    save_checkpoint(path, c);
    return path.string();
  };
}

template <class P>
void adopt(TrainOutcome& out, TrainResult<P>&& result) {
  out.selected_epoch = result.selected_epoch;
  out.history = std::move(result.history);
  out.selected.params = std::move(result.selected);
  out.final_model.params = std::move(result.final_params);
  out.velocity = std::move(result.optimizer.velocity);
}

}  // namespace

TrainOutcome train(const Dataset& data, const TrainConfig& config,
                   const std::optional<std::filesystem::path>& checkpoint_dir) {
  validate_train_config(config);
  if (data.train.empty() || data.validation.empty())
    throw InputError("training needs non-empty train and validation splits");

  Model proto;
  proto.kind = config.model;
  proto.input = config.input;
  proto.objective = resolve_objective(data, config);
  if (config.model == ModelKind::lstm) proto.truncate_last_hours = config.truncate_last_hours;
  TrainOutcome out;
  out.sgd = config.sgd;
  out.history.k = config.k;
  const std::string digest = config_digest(config);
  out.history.config_digest = digest;

  const LabelMatrix y_train = data.primary_labels(data.train);
  const LabelMatrix y_val = data.primary_labels(data.validation);
  auto gather = [](const Eigen::MatrixXd& m, const std::vector<int>& rows) {
    Eigen::MatrixXd g(m.rows(), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) g.col(static_cast<Eigen::Index>(i)) = m.col(rows[i]);
    return g;
  };
  const Eigen::MatrixXd& flat = config.input == InputKind::window ? data.windows : data.features;

  switch (config.model) {
    case ModelKind::base_rate:
      proto.params = fit_base_rate(y_train);
      out.selected = out.final_model = proto;
      return out;
    case ModelKind::logistic: {
      LogisticConfig lc;
      lc.lambda_grid = config.lambda_grid;
      proto.params = fit_logistic(gather(flat, data.train), y_train, gather(flat, data.validation),
                                  y_val, lc, config.threads);
      out.selected = out.final_model = proto;
      return out;
    }
    case ModelKind::mlp: {
      MlpConfig mc;
      mc.hidden = config.layers;
      mc.dropout = config.dropout;
      mc.train = {config.epochs, config.batch_size, config.sgd, config.seed, config.k};
      proto.params = MlpParams{};
      out.selected = out.final_model = proto;
      if (checkpoint_dir) std::filesystem::create_directories(*checkpoint_dir);
      adopt(out, fit_mlp(gather(flat, data.train), y_train, gather(flat, data.validation), y_val, mc,
                         checkpoint_hook<MlpParams>(checkpoint_dir, proto, digest)));
      break;
    }
    case ModelKind::lstm: {
      std::optional<Dataset> local;
      if (config.truncate_last_hours != data.truncate_last_hours)
        local = with_truncation(data, config.truncate_last_hours);
      const Dataset& d = local ? *local : data;
      const ObjectiveConfig obj = proto.objective;
      const int input_dim = static_cast<int>(d.sequences[d.train.front()].rows());
      Rng init(stream_key(config.seed, "init"));
      LstmParams params = init_lstm_params({input_dim, config.layers, obj.output_width()}, init);

      std::vector<Eigen::VectorXd> targets(d.train.size());
      for (std::size_t i = 0; i < d.train.size(); ++i) {
        const auto row = d.labels.row(d.train[i]);
        std::vector<int> primary(obj.primary_label_count), aux(obj.aux_label_count);
        for (int l = 0; l < obj.primary_label_count; ++l) primary[l] = row(l);
        for (int l = 0; l < obj.aux_label_count; ++l) aux[l] = row(obj.primary_label_count + l);
        targets[i] = compose_targets(primary, aux, obj);
      }
      auto predict_rows = [&d, &obj, threads = config.threads](const LstmParams& p,
                                                               const std::vector<int>& rows) {
        std::vector<const Eigen::MatrixXd*> inputs;
        for (int r : rows) inputs.push_back(&d.sequences[r]);
        return mask_predictions(kernels::lstm_predict_final(p, inputs, threads), obj);
      };

      TrainHooks<LstmParams> hooks;
      hooks.batch_gradient = [&](const LstmParams& p, std::span<const int> members, int epoch, int,
                                 LstmParams& grads) {
        std::vector<kernels::SequenceItem> items;
        for (int pos : members) {
          const int row = d.train[pos];
          items.push_back({&d.sequences[row], &targets[pos],
                           DropoutPlan{config.dropout, true,
                                       stream_key(config.seed, "dropout",
                                                  static_cast<std::uint64_t>(epoch),
                                                  static_cast<std::uint64_t>(row))}});
        }
        return kernels::lstm_batch_gradient(p, items, obj, grads, config.threads);
      };
      hooks.predict_train = [&](const LstmParams& p) {
        return PredictionMatrix{predict_rows(p, d.train), y_train};
      };
      hooks.predict_validation = [&](const LstmParams& p) {
        return PredictionMatrix{predict_rows(p, d.validation), y_val};
      };
      proto.params = LstmParams{};
      out.selected = out.final_model = proto;
      if (checkpoint_dir) std::filesystem::create_directories(*checkpoint_dir);
      hooks.on_epoch = checkpoint_hook<LstmParams>(checkpoint_dir, proto, digest);
      const TrainSettings settings{config.epochs, config.batch_size, config.sgd, config.seed, config.k};
      adopt(out, run_training(std::move(params), static_cast<int>(d.train.size()), settings, hooks));
      break;
    }
  }
  out.history.config_digest = digest;
  if (checkpoint_dir) prune_checkpoints(*checkpoint_dir, out.history);
  return out;
}

Checkpoint make_checkpoint(const TrainOutcome& outcome, const TrainConfig& config, bool selected) {
  Checkpoint c;
  c.config_digest = config_digest(config);
  c.model = selected ? outcome.selected : outcome.final_model;
  c.epoch = selected ? outcome.selected_epoch : static_cast<int>(outcome.history.epochs.size());
  c.sgd = outcome.sgd;
  if (!selected) c.velocity = outcome.velocity;
  return c;
}

EnsembleMode ensemble_mode_from_string(const std::string& name) {
  if (name == "mean") return EnsembleMode::mean;
  if (name == "max") return EnsembleMode::max;
  throw ConfigError("ensemble mode must be 'mean' or 'max', got '" + name + "'");
}

PredictionMatrix ensemble(const PredictionMatrix& a, const PredictionMatrix& b, EnsembleMode mode) {
  if (a.scores.rows() != b.scores.rows() || a.scores.cols() != b.scores.cols())
    throw InputError("ensemble: prediction shapes differ");
  if (a.labels.rows() != b.labels.rows() || a.labels.cols() != b.labels.cols() || a.labels != b.labels)
    throw InputError("ensemble: label matrices differ");
  PredictionMatrix out{a.scores, a.labels};
  if (mode == EnsembleMode::mean)
    out.scores = 0.5 * (a.scores + b.scores);
  else
    out.scores = a.scores.cwiseMax(b.scores);
  return out;
}

std::string predictions_to_json(const LabeledPredictions& p) {
  validate_predictions(p.pm);
  if (static_cast<int>(p.episode_ids.size()) != p.pm.examples())
    throw InputError("predictions: one episode id per row required");
  nlohmann::json scores = nlohmann::json::array(), labels = nlohmann::json::array();
  for (int i = 0; i < p.pm.examples(); ++i) {
    nlohmann::json s = nlohmann::json::array(), y = nlohmann::json::array();
    for (int l = 0; l < p.pm.label_count(); ++l) {
      s.push_back(p.pm.scores(i, l));
      y.push_back(p.pm.labels(i, l));
    }
    scores.push_back(std::move(s));
    labels.push_back(std::move(y));
  }
  const nlohmann::json j = {{"episode_ids", p.episode_ids}, {"scores", scores}, {"labels", labels}};
  return j.dump() + "\n";
}

LabeledPredictions predictions_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    LabeledPredictions p;
    p.episode_ids = j.at("episode_ids").get<std::vector<std::string>>();
    const auto scores = j.at("scores").get<std::vector<std::vector<double>>>();
    const auto labels = j.at("labels").get<std::vector<std::vector<int>>>();
    const auto n = static_cast<Eigen::Index>(scores.size());
    if (labels.size() != scores.size() || p.episode_ids.size() != scores.size())
      throw InputError("predictions: ids, scores and labels disagree on the row count");
    const auto L = n ? static_cast<Eigen::Index>(scores[0].size()) : 0;
    p.pm.scores.resize(n, L);
    p.pm.labels.resize(n, L);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (static_cast<Eigen::Index>(scores[i].size()) != L || static_cast<Eigen::Index>(labels[i].size()) != L)
        throw InputError("predictions: ragged rows");
      for (Eigen::Index l = 0; l < L; ++l) {
        p.pm.scores(i, l) = scores[i][l];
        p.pm.labels(i, l) = labels[i][l];
      }
    }
    validate_predictions(p.pm);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("predictions: ") + e.what());
  }
}

std::string trajectory_csv(const Eigen::MatrixXd& per_step) {
  std::ostringstream out;
  out << "t,label_id,probability\n";
  for (Eigen::Index t = 0; t < per_step.rows(); ++t)
    for (Eigen::Index l = 0; l < per_step.cols(); ++l)
      out << t << "," << l << "," << format_real(per_step(t, l)) << "\n";
  return out.str();
}

SuiteConfig default_suite_config(std::uint64_t seed) {
  SuiteConfig s;
  s.seed = seed;
  s.synth.label_count = 24;
  s.primary_label_count = 16;
  const int aux = s.synth.label_count - s.primary_label_count;
  auto with = [seed](TrainConfig c) {
    c.seed = seed;
    return c;
  };
  s.models.push_back({"base_rate", with(default_train_config(ModelKind::base_rate))});
  for (auto input : {InputKind::features, InputKind::window}) {
    TrainConfig lr = default_train_config(ModelKind::logistic);
    lr.input = input;
    s.models.push_back({"logistic_" + to_string(input), with(lr)});
    TrainConfig mlp = default_train_config(ModelKind::mlp);
    mlp.input = input;
    s.models.push_back({"mlp_" + to_string(input), with(mlp)});
  }
  struct Variant {
    const char* name;
    ObjectiveMode mode;
    bool aux;
  };
  const Variant variants[] = {{"plain", ObjectiveMode::final_only, false},
                              {"ao", ObjectiveMode::final_only, true},
                              {"tr", ObjectiveMode::target_replication, false},
                              {"tr_ao", ObjectiveMode::target_replication, true}};
  for (bool big : {false, true}) {
    for (const auto& v : variants) {
      TrainConfig c = default_train_config(ModelKind::lstm);
      c.layers = big ? std::vector<int>{128, 128} : std::vector<int>{64, 64};
      c.dropout = big ? 0.5 : 0.0;
      c.objective.mode = v.mode;
      c.objective.aux_label_count = v.aux ? aux : 0;
      s.models.push_back({std::string("lstm_") + v.name + (big ? "_128_do" : "_64"), with(c)});
    }
  }
  TrainConfig lg = default_train_config(ModelKind::lstm);
  lg.objective.mode = ObjectiveMode::linear_gain;
  s.models.push_back({"lstm_linear_gain_64", with(lg)});
  s.ensembles.push_back({"ensemble_mean", "best_lstm", "best_mlp", EnsembleMode::mean});
  s.ensembles.push_back({"ensemble_max", "best_lstm", "best_mlp", EnsembleMode::max});
  return s;
}

const SuiteRow* SuiteResult::find(const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return &r;
  return nullptr;
}

namespace {

SuiteRow evaluate_row(std::string name, ModelKind kind, PredictionMatrix val, PredictionMatrix test,
                      int k) {
  SuiteRow row;
  row.name = std::move(name);
  row.kind = kind;
  const int kk = std::min(k, val.label_count());
  row.test = evaluate(test, select_thresholds(val), kk);
  row.validation_micro_auc = micro_auc(val).value_or(0.5);
  row.validation_predictions = std::move(val);
  row.test_predictions = std::move(test);
  return row;
}

const SuiteRow* resolve(const SuiteResult& result, const std::string& name) {
  ModelKind kind;
  if (name == "best_lstm")
    kind = ModelKind::lstm;
  else if (name == "best_mlp")
    kind = ModelKind::mlp;
  else
    return result.find(name);
  const SuiteRow* best = nullptr;
  for (const auto& r : result.rows)
    if (r.kind == kind && (!best || r.validation_micro_auc > best->validation_micro_auc)) best = &r;
  return best;
}

}  // namespace

SuiteResult run_experiment(const SuiteConfig& config, const Dataset& data) {
  SuiteResult result;
  for (const auto& m : config.models) {
    TrainConfig c = m.config;
    c.threads = config.threads;
    c.k = config.k;
    const TrainOutcome outcome = train(data, c);
    SuiteRow row = evaluate_row(m.name, c.model,
                                predictions_for(outcome.selected, data, data.validation, c.threads),
                                predictions_for(outcome.selected, data, data.test, c.threads), config.k);
    row.selected_epoch = outcome.selected_epoch;
    row.history = outcome.history;
    result.rows.push_back(std::move(row));
  }
  // Constituents resolve against trained models only, never other ensembles.
  std::vector<SuiteRow> combined;
  for (const auto& e : config.ensembles) {
    const SuiteRow* a = resolve(result, e.a);
    const SuiteRow* b = resolve(result, e.b);
    if (!a || !b) continue;
    combined.push_back(evaluate_row(e.name, a->kind,
                                    ensemble(a->validation_predictions, b->validation_predictions, e.mode),
                                    ensemble(a->test_predictions, b->test_predictions, e.mode), config.k));
  }
  for (auto& row : combined) result.rows.push_back(std::move(row));
  return result;
}

SuiteResult run_experiment(const SuiteConfig& config) {
  const std::vector<RawEpisode> episodes = generate_synthetic(config.synth, config.seed, config.threads);
  const int aux = config.synth.label_count - config.primary_label_count;
  if (config.primary_label_count < 1 || aux < 0)
    throw ConfigError("primary_label_count must be in [1, label_count]");
  Dataset data = build_dataset(episodes, config.synth.channels, config.primary_label_count, aux,
                               std::nullopt, config.threads);
  assign_split(data, config.seed);
  return run_experiment(config, data);
}

std::string comparison_csv(const SuiteResult& result, int k) {
  std::ostringstream out;
  out << "model,micro_auc,macro_auc,micro_f1,macro_f1,precision_at_" << k << "\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  for (const auto& r : result.rows)
    out << r.name << "," << opt(r.test.micro_auc) << "," << opt(r.test.macro_auc) << ","
        << format_real(r.test.micro_f1) << "," << format_real(r.test.macro_f1) << ","
        << format_real(r.test.precision_at_k) << "\n";
  return out.str();
}

}  // namespace pheno
