#pragma once

// Checkpoint documents: JSON with named parameter arrays as nested decimal
// lists, written so that doubles round-trip exactly.

#include <filesystem>
#include <optional>
#include <string>

#include "pheno/model.hpp"
#include "pheno/optim.hpp"

namespace pheno {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  int epoch = 0;
  std::string config_digest;
  Model model;
  SgdConfig sgd;
  std::optional<ModelParams> velocity;  // trained-by-SGD models only
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pheno
