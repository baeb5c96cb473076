#include <doctest.h>

#include <filesystem>
#include <set>

#include "pheno/harness.hpp"
#include "pheno/io.hpp"
#include "pheno/synth.hpp"

using namespace pheno;

namespace {

PredictionMatrix pm_of(std::vector<double> s) {
  PredictionMatrix pm{Eigen::MatrixXd(1, s.size()), LabelMatrix::Zero(1, s.size())};
  for (std::size_t i = 0; i < s.size(); ++i) pm.scores(0, i) = s[i];
  return pm;
}

SuiteConfig tiny_suite() {
  SuiteConfig c;
  c.synth.episode_count = 40;
  c.synth.label_count = 6;
  c.synth.max_hours = 24;
  c.primary_label_count = 4;
  c.k = 3;
  return c;
}

}  // namespace

TEST_CASE("ensemble examples") {
  const auto a = pm_of({0.2, 0.8});
  const auto b = pm_of({0.4, 0.6});
  const auto mean = ensemble(a, b, EnsembleMode::mean);
  CHECK(mean.scores(0, 0) == doctest::Approx(0.3));
  CHECK(mean.scores(0, 1) == doctest::Approx(0.7));
  const auto mx = ensemble(a, b, EnsembleMode::max);
  CHECK(mx.scores(0, 0) == 0.4);
  CHECK(mx.scores(0, 1) == 0.8);
  CHECK(ensemble(a, a, EnsembleMode::mean).scores == a.scores);
  CHECK(ensemble(a, a, EnsembleMode::max).scores == a.scores);
  CHECK_THROWS(ensemble(a, pm_of({0.1}), EnsembleMode::mean));
  auto other = b;
  other.labels(0, 0) = 1;
  CHECK_THROWS(ensemble(a, other, EnsembleMode::mean));
  CHECK(ensemble_mode_from_string("max") == EnsembleMode::max);
  CHECK_THROWS(ensemble_mode_from_string("median"));
}

TEST_CASE("property: ensemble bounds") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(6), y(6);
    for (int i = 0; i < 6; ++i) {
      x[i] = rng.uniform();
      y[i] = rng.uniform();
    }
    const auto mean = ensemble(pm_of(x), pm_of(y), EnsembleMode::mean);
    const auto mx = ensemble(pm_of(x), pm_of(y), EnsembleMode::max);
    for (int i = 0; i < 6; ++i) {
      CHECK(mean.scores(0, i) >= std::min(x[i], y[i]));
      CHECK(mean.scores(0, i) <= std::max(x[i], y[i]));
      CHECK(mx.scores(0, i) >= x[i]);
      CHECK(mx.scores(0, i) >= y[i]);
    }
  }
}

TEST_CASE("per-step trajectory ends at the whole-episode prediction") {
  SynthConfig sc;
  sc.episode_count = 20;
  sc.label_count = 5;
  Dataset d = build_dataset(generate_synthetic(sc, 7), sc.channels, 3, 2);
  assign_split(d, 7);
  TrainConfig c;
  c.layers = {4};
  c.epochs = 1;
  c.objective.aux_label_count = 2;
  const auto out = train(d, c);
  const auto rows = all_rows(d);
  const Eigen::MatrixXd whole = predict(out.selected, d, rows);
  for (int i : rows) {
    const Eigen::MatrixXd traj = predict_per_step(out.selected, d.grids[i]);
    CHECK(traj.rows() == d.grids[i].length());
    CHECK(traj.cols() == 3);
    CHECK(traj.minCoeff() >= 0.0);
    CHECK(traj.maxCoeff() <= 1.0);
    CHECK(traj.row(traj.rows() - 1) == whole.row(i));
  }
  const auto csv = trajectory_csv(predict_per_step(out.selected, d.grids[0]));
  CHECK(csv.rfind("t,label_id,probability\n0,0,", 0) == 0);

  Model mlp = out.selected;
  mlp.kind = ModelKind::mlp;
  CHECK_THROWS(predict_per_step(mlp, d.grids[0]));
}

TEST_CASE("default per-step output width is the primary label count") {
  SynthConfig sc;
  sc.episode_count = 12;
  sc.label_count = 130;
  sc.max_hours = 14;
  Dataset d = build_dataset(generate_synthetic(sc, 1), sc.channels, 128, 2);
  assign_split(d, 1);
  TrainConfig c;
  c.layers = {2};
  c.epochs = 1;
  const auto out = train(d, c);
  CHECK(predict_per_step(out.selected, d.grids[0]).cols() == 128);
}

TEST_CASE("checkpoint directory is pruned to the metric leaders and the last epoch") {
  SynthConfig sc;
  sc.episode_count = 30;
  sc.label_count = 4;
  Dataset d = build_dataset(generate_synthetic(sc, 2), sc.channels, 4, 0);
  assign_split(d, 2);
  TrainConfig c;
  c.layers = {3};
  c.epochs = 6;
  const auto dir = std::filesystem::temp_directory_path() / "pheno_prune_test";
  std::filesystem::remove_all(dir);
  const auto out = train(d, c, dir);
  std::set<int> keep = {6};
  for (auto m : {SelectionMetric::micro_auc, SelectionMetric::micro_f1, SelectionMetric::precision_at_k})
    keep.insert(best_epoch(out.history, m));
  std::set<int> on_disk;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    on_disk.insert(std::stoi(e.path().stem().string().substr(6)));
  CHECK(on_disk == keep);
  char name[32];
  std::snprintf(name, sizeof name, "epoch_%04d.json", out.selected_epoch);
  const auto sel = load_checkpoint(dir / name);
  CHECK(sel.epoch == out.selected_epoch);
  const auto rows = all_rows(d);
  CHECK(predict(sel.model, d, rows) == predict(out.selected, d, rows));
  std::filesystem::remove_all(dir);
}

TEST_CASE("prediction JSON round trip") {
  LabeledPredictions p{{"a", "b"}, pm_of({0.25, 1.0 / 3.0})};
  p.pm.scores.conservativeResize(2, 2);
  p.pm.labels = LabelMatrix::Zero(2, 2);
  p.pm.scores.row(1) << 0.1, 0.7;
  p.pm.labels(1, 1) = 1;
  const auto back = predictions_from_json(predictions_to_json(p));
  CHECK(back.episode_ids == p.episode_ids);
  CHECK(back.pm.scores == p.pm.scores);
  CHECK(back.pm.labels == p.pm.labels);
}

TEST_CASE("suite with only the base rate") {
  SuiteConfig c = tiny_suite();
  c.models = {{"base_rate", default_train_config(ModelKind::base_rate)}};
  c.models[0].config.model = ModelKind::base_rate;
  c.ensembles = {{"ens", "best_lstm", "best_mlp", EnsembleMode::max}};
  const auto r = run_experiment(c);
  REQUIRE(r.rows.size() == 1);
  CHECK(*r.rows[0].test.macro_auc == 0.5);
  const auto csv = comparison_csv(r, 3);
  CHECK(csv.rfind("model,micro_auc,macro_auc,micro_f1,macro_f1,precision_at_3\nbase_rate,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}

TEST_CASE("ensemble rows appear once both constituents are trained") {
  SuiteConfig c = tiny_suite();
  TrainConfig lstm;
  lstm.layers = {3};
  lstm.epochs = 2;
  TrainConfig mlp = default_train_config(ModelKind::mlp);
  mlp.layers = {6};
  mlp.epochs = 2;
  mlp.input = InputKind::features;
  c.models = {{"lstm", lstm}, {"mlp", mlp}};
  c.ensembles = {{"max", "best_lstm", "best_mlp", EnsembleMode::max},
                 {"mean", "lstm", "mlp", EnsembleMode::mean},
                 {"missing", "lstm", "nope", EnsembleMode::mean}};
  const auto r = run_experiment(c);
  REQUIRE(r.find("max") != nullptr);
  REQUIRE(r.find("mean") != nullptr);
  CHECK(r.find("missing") == nullptr);
  const auto& mx = r.find("max")->test_predictions.scores;
  CHECK((mx.array() >= r.find("lstm")->test_predictions.scores.array()).all());
  CHECK((mx.array() >= r.find("mlp")->test_predictions.scores.array()).all());
}

TEST_CASE("default suite grid") {
  const auto c = default_suite_config(3);
  std::set<std::string> names;
  for (const auto& m : c.models) names.insert(m.name);
  CHECK(names.size() == c.models.size());
  CHECK(c.models.size() == 14);
  CHECK(c.synth.episode_count == 2000);
  CHECK(c.primary_label_count == 16);
  CHECK(c.synth.label_count == 24);
  CHECK(c.ensembles.size() == 2);
}
