// pheno: command-line front end for data synthesis, preprocessing, training,
// evaluation and experiment suites.
//
// Exit codes: 0 success, 1 invalid arguments, input or configuration,
// 2 numeric failure during training or inference.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pheno/checkpoint.hpp"
#include "pheno/config.hpp"
#include "pheno/error.hpp"
#include "pheno/features.hpp"
#include "pheno/gradcheck.hpp"
#include "pheno/harness.hpp"
#include "pheno/io.hpp"
#include "pheno/kernels.hpp"
#include "pheno/synth.hpp"

namespace fs = std::filesystem;
using namespace pheno;

namespace {

struct Options {
  int threads = 1;
  std::uint64_t seed = 1;
  std::string config, data, out, in, specs, checkpoint, thresholds_from, episode, episode_id, a, b;
  std::string mode = "mean";
  int k = 10;
};

std::vector<ChannelSpec> specs_or_default(const std::string& path) {
  return path.empty() ? default_channel_specs() : read_channel_specs(path);
}

std::vector<std::string> label_names(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("label_" + std::to_string(i));
  return out;
}

int cmd_synth(const Options& o) {
  SynthConfig cfg;
  if (!o.config.empty()) cfg = synth_config_from_json(read_config_text(o.config));
  validate_synth_config(cfg);
  write_file_atomic(o.out, episodes_to_jsonl(generate_synthetic(cfg, o.seed, o.threads)));
  return 0;
}

int cmd_preprocess(const Options& o) {
  const auto specs = specs_or_default(o.specs);
  const auto episodes = read_episodes_jsonl(o.in);
  for (const auto& ep : episodes) validate_episode(ep);
  write_file_atomic(o.out, grids_to_jsonl(kernels::preprocess_all(episodes, specs, o.threads)));
  return 0;
}

int cmd_featurize(const Options& o) {
  const auto grids = read_grids_jsonl(o.in);
  std::vector<FeatureVector> features;
  for (const auto& g : grids) features.push_back(extract_features(g));
  std::vector<std::string> names;
  const auto specs = default_channel_specs();
  const int channels = grids.empty() ? static_cast<int>(specs.size()) : grids.front().channels();
  for (int c = 0; c < channels; ++c)
    names.push_back(c < static_cast<int>(specs.size()) && channels == static_cast<int>(specs.size())
                        ? specs[c].name
                        : "channel_" + std::to_string(c));
  write_file_atomic(o.out, features_to_csv(features, names));
  return 0;
}

// Label count of the first episode; every episode must agree.
int label_width(const std::vector<RawEpisode>& episodes) {
  if (episodes.empty()) throw InputError("no episodes in data file");
  const auto width = episodes.front().labels.size();
  for (const auto& ep : episodes)
    if (ep.labels.size() != width) throw InputError("episode " + ep.episode_id + " has a different label count");
  return static_cast<int>(width);
}

int cmd_train(const Options& o) {
  CliTrainConfig cfg = cli_train_config_from_json(read_config_text(o.config));
  cfg.train.threads = o.threads;
  const auto specs = cfg.channel_specs ? read_channel_specs(*cfg.channel_specs) : default_channel_specs();
  const auto episodes = read_episodes_jsonl(o.data);
  for (const auto& ep : episodes) validate_episode(ep);
  const int width = label_width(episodes);
  const int aux = cfg.train.model == ModelKind::lstm ? cfg.train.objective.aux_label_count : 0;
  const int primary = cfg.primary_label_count > 0 ? cfg.primary_label_count : width - aux;
  if (primary < 1 || primary + aux > width)
    throw ConfigError("label counts (" + std::to_string(primary) + " primary + " + std::to_string(aux) +
                      " auxiliary) exceed the " + std::to_string(width) + " labels in the data");
  Dataset data = build_dataset(episodes, specs, primary, aux, cfg.train.truncate_last_hours, o.threads);
  assign_split(data, cfg.train.seed);

  const fs::path out = o.out;
  const TrainOutcome outcome = train(data, cfg.train, out / "epochs");
  Checkpoint selected = make_checkpoint(outcome, cfg.train, true);
  selected.model.specs = specs;
  Checkpoint last = make_checkpoint(outcome, cfg.train, false);
  last.model.specs = specs;
  save_checkpoint(out / "checkpoint.json", selected);
  save_checkpoint(out / "final.json", last);
  write_file_atomic(out / "history.csv", history_to_csv(outcome.history));
  std::cout << "selected epoch " << outcome.selected_epoch << "\n";
  return 0;
}

Dataset dataset_for(const Model& model, const std::string& path, int threads) {
  const auto episodes = read_episodes_jsonl(path);
  for (const auto& ep : episodes) validate_episode(ep);
  const int width = label_width(episodes);
  const int primary = model.objective.primary_label_count;
  if (width < primary)
    throw InputError("data has " + std::to_string(width) + " labels, model predicts " + std::to_string(primary));
  return build_dataset(episodes, model.specs, primary, 0, model.truncate_last_hours, threads);
}

int cmd_evaluate(const Options& o) {
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const int L = ckpt.model.objective.primary_label_count;
  if (o.k < 1 || o.k > L)
    throw ConfigError("k must be in [1, " + std::to_string(L) + "], got " + std::to_string(o.k));
  const Dataset data = dataset_for(ckpt.model, o.data, o.threads);
  const auto rows = all_rows(data);
  const PredictionMatrix pm = predictions_for(ckpt.model, data, rows, o.threads);

  ThresholdSet thresholds{0.5, std::vector<double>(L, 0.5)};
  if (!o.thresholds_from.empty()) {
    const std::string text = read_text_file(o.thresholds_from);
    const auto first = text.find_first_not_of(" \t\r\n");
    bool is_json_object = false;
    if (first != std::string::npos && text[first] == '{') {
      // A thresholds/report document has no episode_id; an episode file does.
      is_json_object = text.find("\"episode_id\"") == std::string::npos;
    }
    if (is_json_object) {
      thresholds = thresholds_from_json(text);
    } else {
      const Dataset val = dataset_for(ckpt.model, o.thresholds_from, o.threads);
      thresholds = select_thresholds(predictions_for(ckpt.model, val, all_rows(val), o.threads));
    }
    if (static_cast<int>(thresholds.per_label_thresholds.size()) != L)
      throw InputError("thresholds cover " + std::to_string(thresholds.per_label_thresholds.size()) +
                       " labels, model predicts " + std::to_string(L));
  }
  const MetricReport report = evaluate(pm, thresholds, o.k);
  const fs::path out = o.out;
  const auto names = label_names(L);
  write_file_atomic(out / "report.json", report_to_json(report, names));
  write_file_atomic(out / "per_label.csv", per_label_csv(report, names));
  write_file_atomic(out / "predictions.json", predictions_to_json({data.ids, pm}));
  std::cout << "micro_auc " << (report.micro_auc ? format_real(*report.micro_auc) : "undefined") << "\n";
  return 0;
}

int cmd_predict_steps(const Options& o) {
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const auto episodes = read_episodes_jsonl(o.episode);
  const RawEpisode* chosen = nullptr;
  for (const auto& ep : episodes) {
    if (o.episode_id.empty() || ep.episode_id == o.episode_id) {
      chosen = &ep;
      break;
    }
  }
  if (!chosen) throw InputError("episode not found in " + o.episode);
  validate_episode(*chosen);
  const RegularGrid grid = preprocess(*chosen, ckpt.model.specs);
  write_file_atomic(o.out, trajectory_csv(predict_per_step(ckpt.model, grid)));
  return 0;
}

int cmd_ensemble(const Options& o) {
  const LabeledPredictions a = predictions_from_json(read_text_file(o.a));
  const LabeledPredictions b = predictions_from_json(read_text_file(o.b));
  if (a.episode_ids != b.episode_ids) throw InputError("ensemble: episode ids differ");
  write_file_atomic(o.out, predictions_to_json({a.episode_ids, ensemble(a.pm, b.pm, ensemble_mode_from_string(o.mode))}));
  return 0;
}

struct GradCheckConfig {
  std::string model = "lstm";
  std::vector<int> layers = {4, 4};
  int steps = 5;
  int batch = 2;
  int input_dim = 13;
  int primary = 3;
  int aux = 2;
  std::string mode = "target_replication";
  double alpha = 0.5;
  double weight_decay = 1e-6;
  double eps = 1e-5;
  double tolerance = 1e-5;
  std::uint64_t seed = 1;
};

GradCheckConfig gradcheck_config(const std::string& path) {
  GradCheckConfig c;
  if (path.empty()) return c;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_config_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("gradcheck config must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    try {
      if (key == "model") c.model = it->get<std::string>();
      else if (key == "layers") c.layers = it->get<std::vector<int>>();
      else if (key == "steps") c.steps = it->get<int>();
      else if (key == "batch") c.batch = it->get<int>();
      else if (key == "input_dim") c.input_dim = it->get<int>();
      else if (key == "primary_label_count") c.primary = it->get<int>();
      else if (key == "aux_label_count") c.aux = it->get<int>();
      else if (key == "mode") c.mode = it->get<std::string>();
      else if (key == "alpha") c.alpha = it->get<double>();
      else if (key == "weight_decay") c.weight_decay = it->get<double>();
      else if (key == "eps") c.eps = it->get<double>();
      else if (key == "tolerance") c.tolerance = it->get<double>();
      else if (key == "seed") c.seed = it->get<std::uint64_t>();
      else throw ConfigError("gradcheck config: unknown key '" + key + "'");
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("gradcheck config: wrong type for '" + key + "'");
    }
  }
  if (c.steps < 1 || c.batch < 1 || c.input_dim < 1 || c.primary < 1 || c.aux < 0)
    throw ConfigError("gradcheck config: sizes must be positive");
  if (!(c.eps > 0.0)) throw ConfigError("gradcheck config: eps must be > 0");
  return c;
}

int cmd_gradcheck(const Options& o) {
  const GradCheckConfig c = gradcheck_config(o.config);
  Rng rng(stream_key(c.seed, "init"));
  GradCheckResult r;
  if (c.model == "lstm") {
    ObjectiveConfig obj;
    obj.mode = objective_mode_from_string(c.mode);
    obj.alpha = c.alpha;
    obj.primary_label_count = c.primary;
    obj.aux_label_count = c.aux;
    validate_objective(obj);
    const LstmParams params = init_lstm_params({c.input_dim, c.layers, obj.output_width()}, rng);
    std::vector<SequenceExample> batch;
    for (int i = 0; i < c.batch; ++i) {
      SequenceExample ex{Eigen::MatrixXd(c.input_dim, c.steps), Eigen::VectorXd(obj.output_width())};
      for (Eigen::Index k = 0; k < ex.x.size(); ++k) ex.x.data()[k] = rng.uniform();
      for (Eigen::Index k = 0; k < ex.y.size(); ++k) ex.y(k) = rng.bernoulli(0.5) ? 1.0 : 0.0;
      batch.push_back(std::move(ex));
    }
    r = lstm_grad_check(params, batch, obj, c.weight_decay, {c.eps});
  } else if (c.model == "mlp") {
    const int out = c.primary + c.aux;
    const MlpParams params = init_mlp_params(c.input_dim, c.layers, out, rng);
    Eigen::MatrixXd x(c.input_dim, c.batch), y(out, c.batch);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = rng.uniform(-1.0, 1.0);
    for (Eigen::Index k = 0; k < y.size(); ++k) y.data()[k] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    r = mlp_grad_check(params, x, y, c.weight_decay, {c.eps});
  } else {
    throw ConfigError("gradcheck model must be 'lstm' or 'mlp'");
  }
  std::cout << "max_rel_error " << format_real(r.max_rel_error) << " (" << r.checked
            << " coordinates; worst " << r.worst_block << "[" << r.worst_index << "] analytic " << format_real(r.analytic) << " numeric " << format_real(r.numeric) << ")\n";
  return r.max_rel_error < c.tolerance ? 0 : 2;
}

int cmd_suite(const Options& o) {
  SuiteConfig cfg = suite_config_from_json(read_config_text(o.config));
  cfg.threads = o.threads;
  const int aux = cfg.synth.label_count - cfg.primary_label_count;
  const auto episodes = generate_synthetic(cfg.synth, cfg.seed, cfg.threads);
  Dataset data = build_dataset(episodes, cfg.synth.channels, cfg.primary_label_count, aux, std::nullopt,
                               cfg.threads);
  assign_split(data, cfg.seed);
  const SuiteResult result = run_experiment(cfg, data);
  const fs::path out = o.out;
  write_file_atomic(out / "comparison.csv", comparison_csv(result, cfg.k));
  for (const auto& row : result.rows)
    if (!row.history.epochs.empty())
      write_file_atomic(out / "history" / (row.name + ".csv"), history_to_csv(row.history));
  std::cout << comparison_csv(result, cfg.k);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilabel phenotype classification from clinical time series"};
  app.require_subcommand(1);
  Options o;

  auto threads = [&](CLI::App* c) {
    c->add_option("--threads", o.threads, "Worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber);
  };

  auto* synth = app.add_subcommand("synth", "Generate synthetic raw episodes as JSON Lines");
  synth->add_option("--config", o.config, "Synthetic generator config (JSON); defaults when omitted");
  synth->add_option("--seed", o.seed, "Seed for the 'synth' stream")->required();
  synth->add_option("--out", o.out, "Output JSONL path")->required();
  threads(synth);

  auto* pre = app.add_subcommand("preprocess", "Resample, impute and rescale raw episodes");
  pre->add_option("--in", o.in, "Raw episode JSONL")->required();
  pre->add_option("--specs", o.specs, "Channel spec JSON; the 13 default channels when omitted");
  pre->add_option("--out", o.out, "Output grid JSONL")->required();
  threads(pre);

  auto* feat = app.add_subcommand("featurize", "Summary-statistic features of preprocessed grids");
  feat->add_option("--in", o.in, "Grid JSONL from preprocess")->required();
  feat->add_option("--out", o.out, "Output CSV")->required();

  auto* tr = app.add_subcommand("train", "Train one model and record its epoch history");
  tr->add_option("--config", o.config, "Training config (JSON)")->required();
  tr->add_option("--data", o.data, "Raw episode JSONL, split 80/10/10 by seed")->required();
  tr->add_option("--out", o.out, "Output directory")->required();
  threads(tr);

  auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint on labelled episodes");
  ev->add_option("--checkpoint", o.checkpoint, "Checkpoint JSON")->required();
  ev->add_option("--data", o.data, "Raw episode JSONL to evaluate")->required();
  ev->add_option("--thresholds-from", o.thresholds_from,
                 "Thresholds JSON or report.json, or validation episode JSONL to tune on; 0.5 when omitted");
  ev->add_option("--k", o.k, "k for precision@k and recall@k")->capture_default_str();
  ev->add_option("--out", o.out, "Output directory")->required();
  threads(ev);

  auto* ps = app.add_subcommand("predict-steps", "Per-hour label probabilities for one episode");
  ps->add_option("--checkpoint", o.checkpoint, "LSTM checkpoint JSON")->required();
  ps->add_option("--episode", o.episode, "Raw episode JSONL; the first episode is used")->required();
  ps->add_option("--id", o.episode_id, "Pick this episode id from the file instead");
  ps->add_option("--out", o.out, "Output CSV (t,label_id,probability)")->required();

  auto* en = app.add_subcommand("ensemble", "Combine two prediction files");
  en->add_option("--a", o.a, "predictions.json from evaluate")->required();
  en->add_option("--b", o.b, "predictions.json from evaluate")->required();
  en->add_option("--mode", o.mode, "mean or max")->check(CLI::IsMember({"mean", "max"}))->capture_default_str();
  en->add_option("--out", o.out, "Output predictions JSON")->required();

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient check on a small network");
  gc->add_option("--config", o.config, "Gradcheck config (JSON); 2x4 LSTM, T=5, 3+2 labels when omitted");

  auto* su = app.add_subcommand("suite", "Run a model-comparison experiment on synthetic data");
  su->add_option("--config", o.config, "Suite config (JSON)")->required();
  su->add_option("--out", o.out, "Output directory")->required();
  threads(su);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    std::cerr << app.help();
    return 1;
  }

  try {
    if (*synth) return cmd_synth(o);
    if (*pre) return cmd_preprocess(o);
    if (*feat) return cmd_featurize(o);
    if (*tr) return cmd_train(o);
    if (*ev) return cmd_evaluate(o);
    if (*ps) return cmd_predict_steps(o);
    if (*en) return cmd_ensemble(o);
    if (*gc) return cmd_gradcheck(o);
    if (*su) return cmd_suite(o);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
