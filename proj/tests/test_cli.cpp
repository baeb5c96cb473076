#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>
#include <algorithm>
#include <sys/wait.h>

#include "pheno/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "pheno_cli_test";

int run(const std::string& args, const std::string& log = "log.txt") {
  const std::string cmd = std::string(PHENO_CLI_PATH) + " " + args + " > " + (kWork / log).string() +
                          " 2> " + (kWork / ("err_" + log)).string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string out_of(const std::string& log = "log.txt") { return pheno::read_text_file(kWork / log); }
std::string err_of(const std::string& log = "log.txt") {
  return pheno::read_text_file(kWork / ("err_" + log));
}
std::string p(const std::string& name) { return (kWork / name).string(); }

void write(const std::string& name, const std::string& text) { pheno::write_file_atomic(kWork / name, text); }

// Synthetic data and a two-epoch model shared by the later cases.
struct Workspace {
  Workspace() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    write("synth.json", R"({"episode_count": 60, "label_count": 6, "max_hours": 30})");
    write("train.json", R"({"model": "lstm", "layers": [4, 4], "epochs": 2,
                           "objective": {"mode": "target_replication", "primary_label_count": 4,
                                         "aux_label_count": 2}})");
    REQUIRE(run("synth --config " + p("synth.json") + " --seed 5 --out " + p("eps.jsonl")) == 0);
    REQUIRE(run("train --config " + p("train.json") + " --data " + p("eps.jsonl") + " --out " + p("model")) == 0);
  }
};

Workspace& workspace() {
  static Workspace w;
  return w;
}

}  // namespace

TEST_CASE("usage errors exit 1 with usage on stderr") {
  workspace();
  CHECK(run("") == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("synth --seed 1") == 1);
  CHECK(err_of().find("--out") != std::string::npos);
  CHECK(run("evaluate --k nope --checkpoint a --data b --out c") == 1);
}

TEST_CASE("every subcommand documents its flags") {
  workspace();
  const std::pair<const char*, std::vector<const char*>> cmds[] = {
      {"synth", {"--config", "--seed", "--out"}},
      {"preprocess", {"--in", "--specs", "--out", "--threads"}},
      {"featurize", {"--in", "--out"}},
      {"train", {"--config", "--data", "--out", "--threads"}},
      {"evaluate", {"--checkpoint", "--data", "--thresholds-from", "--k", "--out"}},
      {"predict-steps", {"--checkpoint", "--episode", "--out"}},
      {"ensemble", {"--a", "--b", "--mode", "--out"}},
      {"gradcheck", {"--config"}},
      {"suite", {"--config", "--out", "--threads"}},
  };
  for (const auto& [cmd, flags] : cmds) {
    CAPTURE(cmd);
    CHECK(run(std::string(cmd) + " --help") == 0);
    const auto text = out_of();
    for (const char* f : flags) CHECK(text.find(f) != std::string::npos);
  }
}

TEST_CASE("synth is byte-identical across runs") {
  workspace();
  REQUIRE(run("synth --config " + p("synth.json") + " --seed 5 --out " + p("eps2.jsonl")) == 0);
  CHECK(pheno::read_text_file(kWork / "eps.jsonl") == pheno::read_text_file(kWork / "eps2.jsonl"));
  REQUIRE(run("synth --seed 5 --config " + p("synth.json") + " --out " + p("eps3.jsonl")) == 0);
  CHECK(pheno::read_text_file(kWork / "eps.jsonl") == pheno::read_text_file(kWork / "eps3.jsonl"));
}

TEST_CASE("preprocess and featurize") {
  workspace();
  REQUIRE(run("preprocess --in " + p("eps.jsonl") + " --out " + p("grids.jsonl")) == 0);
  REQUIRE(run("featurize --in " + p("grids.jsonl") + " --out " + p("features.csv")) == 0);
  const auto csv = pheno::read_text_file(kWork / "features.csv");
  CHECK(csv.rfind("episode_id,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 61);
  const auto header = csv.substr(0, csv.find('\n'));
  CHECK(std::count(header.begin(), header.end(), ',') == 143);
  CHECK(run("preprocess --in " + p("missing.jsonl") + " --out " + p("x.jsonl")) == 1);
}

TEST_CASE("train writes checkpoints and history") {
  workspace();
  for (const char* f : {"model/checkpoint.json", "model/final.json", "model/history.csv"})
    CHECK(fs::exists(kWork / f));
  CHECK(fs::is_directory(kWork / "model/epochs"));
  const auto hist = pheno::read_text_file(kWork / "model/history.csv");
  CHECK(hist.rfind("epoch,split,micro_auc,micro_f1,precision_at_10", 0) == 0);
}

TEST_CASE("evaluate, ensemble and per-step prediction") {
  workspace();
  REQUIRE(run("evaluate --checkpoint " + p("model/checkpoint.json") + " --data " + p("eps.jsonl") +
              " --k 3 --out " + p("eval")) == 0);
  for (const char* f : {"eval/report.json", "eval/per_label.csv", "eval/predictions.json"})
    CHECK(fs::exists(kWork / f));
  REQUIRE(run("evaluate --checkpoint " + p("model/checkpoint.json") + " --data " + p("eps.jsonl") +
              " --k 3 --thresholds-from " + p("eval/report.json") + " --out " + p("eval2")) == 0);
  CHECK(run("evaluate --checkpoint " + p("model/checkpoint.json") + " --data " + p("eps.jsonl") +
            " --k 5 --out " + p("eval3")) == 1);

  REQUIRE(run("ensemble --a " + p("eval/predictions.json") + " --b " + p("eval2/predictions.json") +
              " --mode max --out " + p("ens.json")) == 0);
  CHECK(fs::exists(kWork / "ens.json"));
  CHECK(run("ensemble --a " + p("eval/predictions.json") + " --b " + p("eval2/predictions.json") +
            " --mode median --out " + p("ens2.json")) == 1);

  REQUIRE(run("predict-steps --checkpoint " + p("model/checkpoint.json") + " --episode " + p("eps.jsonl") +
              " --out " + p("steps.csv")) == 0);
  CHECK(pheno::read_text_file(kWork / "steps.csv").rfind("t,label_id,probability\n", 0) == 0);
  CHECK(run("predict-steps --checkpoint " + p("model/checkpoint.json") + " --episode " + p("eps.jsonl") +
            " --id nope --out " + p("steps2.csv")) == 1);
}

TEST_CASE("gradcheck reports and exits 0 on the reference config") {
  workspace();
  CHECK(run("gradcheck") == 0);
  CHECK(out_of().find("max_rel_error") != std::string::npos);
  write("gc.json", R"({"model": "mlp", "layers": [20, 20, 20]})");
  CHECK(run("gradcheck --config " + p("gc.json")) == 0);
  write("gc_bad.json", R"({"model": "lstm", "cells": 3})");
  CHECK(run("gradcheck --config " + p("gc_bad.json")) == 1);
}

TEST_CASE("config and numeric failures map to exit codes 1 and 2") {
  workspace();
  write("bad.json", R"({"model": "lstm", "epochs": 2, "learning_rat": 0.1})");
  CHECK(run("train --config " + p("bad.json") + " --data " + p("eps.jsonl") + " --out " + p("bad")) == 1);
  CHECK(err_of().find("learning_rat") != std::string::npos);
  write("blowup.json", R"({"model": "lstm", "layers": [4], "epochs": 2,
                          "optimizer": {"learning_rate": 1e308, "momentum": 0.99, "clip_norm": 1e308}})");
  CHECK(run("train --config " + p("blowup.json") + " --data " + p("eps.jsonl") + " --out " + p("nan")) == 2);
  CHECK(err_of().find("epoch") != std::string::npos);
}

TEST_CASE("inputs are never modified") {
  workspace();
  const auto before = pheno::read_text_file(kWork / "eps.jsonl");
  REQUIRE(run("train --config " + p("train.json") + " --data " + p("eps.jsonl") + " --out " + p("model2")) == 0);
  CHECK(pheno::read_text_file(kWork / "eps.jsonl") == before);
  CHECK(pheno::read_text_file(kWork / "model/checkpoint.json") ==
        pheno::read_text_file(kWork / "model2/checkpoint.json"));
}
