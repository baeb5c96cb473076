#include "pheno/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "pheno/error.hpp"

namespace pheno {

void validate_objective(const ObjectiveConfig& cfg) {
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw ConfigError("alpha must be in [0, 1]");
  if (cfg.primary_label_count < 1) throw ConfigError("primary_label_count must be >= 1");
  if (cfg.aux_label_count < 0) throw ConfigError("aux_label_count must be >= 0");
}

std::string to_string(ObjectiveMode mode) {
  switch (mode) {
    case ObjectiveMode::final_only: return "final_only";
    case ObjectiveMode::target_replication: return "target_replication";
    case ObjectiveMode::linear_gain: return "linear_gain";
  }
  throw ConfigError("invalid objective mode");
}

ObjectiveMode objective_mode_from_string(const std::string& name) {
  if (name == "final_only") return ObjectiveMode::final_only;
  if (name == "target_replication") return ObjectiveMode::target_replication;
  if (name == "linear_gain") return ObjectiveMode::linear_gain;
  throw ConfigError("unknown objective mode '" + name + "'");
}

namespace {

double clamp_probability(double p) {
  return std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
}

}  // namespace

double log_loss(std::span<const double> yhat, std::span<const double> y) {
  if (yhat.size() != y.size() || y.empty())
    throw InputError("log_loss: length mismatch (" + std::to_string(yhat.size()) + " vs " +
                     std::to_string(y.size()) + ")");
  double acc = 0.0;
  for (std::size_t l = 0; l < y.size(); ++l) {
    const double p = clamp_probability(yhat[l]);
    acc -= y[l] * std::log(p) + (1.0 - y[l]) * std::log(1.0 - p);
  }
  return acc / static_cast<double>(y.size());
}

void log_loss_gradient(std::span<const double> yhat, std::span<const double> y,
                       std::span<double> out) {
  if (yhat.size() != y.size() || out.size() != y.size())
    throw InputError("log_loss_gradient: length mismatch");
  const double inv_n = 1.0 / static_cast<double>(y.size());
  for (std::size_t l = 0; l < y.size(); ++l) {
    const double p = yhat[l];
    if (p < kProbabilityEpsilon || p > 1.0 - kProbabilityEpsilon) {
      out[l] = 0.0;
      continue;
    }
    out[l] = inv_n * (-y[l] / p + (1.0 - y[l]) / (1.0 - p));
  }
}

Eigen::VectorXd step_weights(int steps, const ObjectiveConfig& cfg) {
  if (steps < 1) throw InputError("sequence must have at least one step");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(steps);
  switch (cfg.mode) {
    case ObjectiveMode::final_only:
      w[steps - 1] = 1.0;
      break;
    case ObjectiveMode::target_replication:
      w.setConstant(cfg.alpha / steps);
      w[steps - 1] += 1.0 - cfg.alpha;
      break;
    case ObjectiveMode::linear_gain: {
      const double total = 0.5 * steps * (steps + 1.0);
      for (int t = 0; t < steps; ++t) w[t] = (t + 1.0) / total;
      break;
    }
    default:
      throw ConfigError("invalid objective mode");
  }
  return w;
}

SequenceLoss sequence_loss(const Eigen::MatrixXd& yhat, const Eigen::VectorXd& y,
                           const ObjectiveConfig& cfg) {
  if (yhat.rows() != y.size())
    throw InputError("sequence_loss: prediction width " + std::to_string(yhat.rows()) +
                     " does not match target width " + std::to_string(y.size()));
  const auto steps = static_cast<int>(yhat.cols());
  const Eigen::VectorXd w = step_weights(steps, cfg);
  SequenceLoss out;
  out.step_losses.resize(steps);
  out.d_yhat = Eigen::MatrixXd::Zero(yhat.rows(), steps);
  const std::span<const double> target(y.data(), static_cast<std::size_t>(y.size()));
  for (int t = 0; t < steps; ++t) {
    const std::span<const double> col(yhat.col(t).data(), static_cast<std::size_t>(yhat.rows()));
    out.step_losses[t] = log_loss(col, target);
    if (w[t] == 0.0) continue;
    out.value += w[t] * out.step_losses[t];
    std::span<double> grad(out.d_yhat.col(t).data(), static_cast<std::size_t>(yhat.rows()));
    log_loss_gradient(col, target, grad);
    out.d_yhat.col(t) *= w[t];
  }
  return out;
}

Eigen::VectorXd compose_targets(std::span<const int> primary, std::span<const int> aux,
                                const ObjectiveConfig& cfg) {
  if (static_cast<int>(primary.size()) < cfg.primary_label_count)
    throw InputError("compose_targets: expected " + std::to_string(cfg.primary_label_count) +
                     " primary labels, got " + std::to_string(primary.size()));
  if (static_cast<int>(aux.size()) < cfg.aux_label_count)
    throw InputError("compose_targets: " + std::to_string(cfg.aux_label_count) +
                     " auxiliary labels configured but only " + std::to_string(aux.size()) +
                     " present");
  Eigen::VectorXd y(cfg.output_width());
  for (int l = 0; l < cfg.primary_label_count; ++l) y[l] = primary[l];
  for (int l = 0; l < cfg.aux_label_count; ++l) y[cfg.primary_label_count + l] = aux[l];
  return y;
}

Eigen::VectorXd targets_from_labels(const std::vector<int>& labels, const ObjectiveConfig& cfg) {
  const std::span<const int> all(labels);
  const auto n_primary = std::min<std::size_t>(labels.size(), cfg.primary_label_count);
  return compose_targets(all.first(n_primary), all.subspan(n_primary), cfg);
}

Eigen::MatrixXd mask_predictions(const Eigen::MatrixXd& yhat, const ObjectiveConfig& cfg) {
  if (yhat.cols() < cfg.primary_label_count)
    throw InputError("mask_predictions: fewer outputs than primary labels");
  return yhat.leftCols(cfg.primary_label_count);
}

}  // namespace pheno
