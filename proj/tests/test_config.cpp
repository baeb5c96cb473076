#include <doctest.h>

#include "pheno/config.hpp"
#include "pheno/error.hpp"

using namespace pheno;

TEST_CASE("train config parsing") {
  const auto c = train_config_from_json(R"({
    "model": "lstm", "layers": [32, 32], "dropout": 0.25,
    "objective": {"mode": "target_replication", "alpha": 0.3, "aux_label_count": 8},
    "optimizer": {"learning_rate": 0.5, "momentum": 0.8, "weight_decay": 0, "clip_norm": 2},
    "epochs": 40, "batch_size": 8, "seed": 7, "k": 5, "truncate_last_hours": 48, "threads": 2})");
  CHECK(c.model == ModelKind::lstm);
  CHECK(c.layers == std::vector<int>{32, 32});
  CHECK(c.dropout == 0.25);
  CHECK(c.objective.mode == ObjectiveMode::target_replication);
  CHECK(c.objective.alpha == 0.3);
  CHECK(c.objective.aux_label_count == 8);
  CHECK(c.sgd.learning_rate == 0.5);
  CHECK(c.sgd.momentum == 0.8);
  CHECK(c.sgd.weight_decay == 0.0);
  CHECK(c.sgd.clip_norm == 2.0);
  CHECK(c.epochs == 40);
  CHECK(c.batch_size == 8);
  CHECK(c.seed == 7);
  CHECK(c.k == 5);
  CHECK(c.truncate_last_hours == 48);
  CHECK(c.threads == 2);
}

TEST_CASE("model kind selects its defaults") {
  const auto mlp = train_config_from_json(R"({"model": "mlp"})");
  CHECK(mlp.layers == std::vector<int>{300, 300, 300});
  CHECK(mlp.dropout == 0.5);
  CHECK(mlp.epochs == 1000);
  CHECK(train_config_from_json(R"({"model": "lstm"})").epochs == 100);
}

TEST_CASE("unknown keys, wrong types and bad values are rejected") {
  CHECK_THROWS_AS(train_config_from_json(R"({"modle": "lstm"})"), ConfigError);
  CHECK_THROWS_AS(train_config_from_json(R"({"objective": {"mode": "final_only", "beta": 1}})"), ConfigError);
  CHECK_THROWS_AS(train_config_from_json(R"({"optimizer": {"lr": 1}})"), ConfigError);
  CHECK_THROWS_AS(train_config_from_json(R"({"epochs": "ten"})"), ConfigError);
  CHECK_THROWS_AS(train_config_from_json(R"({"epochs": 0})"), ConfigError);
  CHECK_THROWS_AS(train_config_from_json(R"({"dropout": 1.0})"), ConfigError);
  CHECK_THROWS_AS(train_config_from_json(R"({"objective": {"alpha": 2}})"), ConfigError);
  CHECK_THROWS_AS(train_config_from_json(R"({"model": "transformer"})"), ConfigError);
  CHECK_THROWS_AS(train_config_from_json("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(train_config_from_json("{"), ConfigError);
  CHECK_THROWS_AS(synth_config_from_json(R"({"episodes": 10})"), ConfigError);
  CHECK_THROWS_AS(synth_config_from_json(R"({"label_count": 1})"), ConfigError);
  CHECK_THROWS_AS(suite_config_from_json(R"({"models": [{"name": "x"}]})"), ConfigError);
  CHECK_THROWS_AS(suite_config_from_json(R"({"models": [], "extra": 1})"), ConfigError);
}

TEST_CASE("CLI train config carries label count and spec path") {
  const auto c = cli_train_config_from_json(
      R"({"model": "lstm", "objective": {"primary_label_count": 16, "aux_label_count": 8},
          "channel_specs": "specs.json"})");
  CHECK(c.primary_label_count == 16);
  CHECK(c.train.objective.aux_label_count == 8);
  REQUIRE(c.channel_specs.has_value());
  CHECK(c.channel_specs->string() == "specs.json");
  CHECK_THROWS_AS(train_config_from_json(R"({"channel_specs": "specs.json"})"), ConfigError);
}

TEST_CASE("digest ignores the thread count and tracks everything else") {
  TrainConfig a;
  TrainConfig b = a;
  b.threads = 8;
  CHECK(config_digest(a) == config_digest(b));
  CHECK(config_digest(a).size() == 16);
  b.seed = 2;
  CHECK(config_digest(a) != config_digest(b));
  CHECK(train_config_from_json(train_config_to_json(a)).layers == a.layers);
  CHECK(config_digest(train_config_from_json(train_config_to_json(a))) == config_digest(a));
}

TEST_CASE("suite config") {
  const auto s = suite_config_from_json(R"({"seed": 3, "primary_label_count": 4,
      "synth": {"episode_count": 50, "label_count": 6},
      "models": [{"name": "b", "config": {"model": "base_rate", "input": "features"}}],
      "ensembles": [{"name": "e", "a": "b", "b": "b", "mode": "max"}]})");
  CHECK(s.seed == 3);
  CHECK(s.synth.episode_count == 50);
  REQUIRE(s.models.size() == 1);
  CHECK(s.models[0].config.seed == 3);
  CHECK(s.ensembles[0].mode == EnsembleMode::max);
  CHECK(suite_config_from_json("{}").models.size() == 14);
}
