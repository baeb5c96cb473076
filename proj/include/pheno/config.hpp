#pragma once

// JSON configuration documents. Parsing is strict: unknown keys, wrong types
// and out-of-range values are ConfigErrors, raised before any work starts.

#include <filesystem>
#include <optional>
#include <string>

#include "pheno/harness.hpp"
#include "pheno/synth.hpp"

namespace pheno {

// Train config plus the optional paths the CLI accepts in the document.
struct CliTrainConfig {
  TrainConfig train;
  int primary_label_count = 0;  // 0: all labels not reserved as auxiliary
  std::optional<std::filesystem::path> channel_specs;
};

CliTrainConfig cli_train_config_from_json(const std::string& text);
TrainConfig train_config_from_json(const std::string& text);

// Canonical form (sorted keys, thread count omitted) used for digests.
std::string train_config_to_json(const TrainConfig& config);

// FNV-1a of the canonical form, 16 hex digits.
std::string config_digest(const TrainConfig& config);

SynthConfig synth_config_from_json(const std::string& text);

SuiteConfig suite_config_from_json(const std::string& text);

// Reads a file and parses it with one of the functions above.
std::string read_config_text(const std::filesystem::path& path);

}  // namespace pheno
