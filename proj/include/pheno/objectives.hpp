#pragma once

// Per-step multilabel log loss, target replication, linear gain, and
// auxiliary-output target composition.

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pheno {

inline constexpr double kProbabilityEpsilon = 1e-12;

enum class ObjectiveMode { final_only, target_replication, linear_gain };

struct ObjectiveConfig {
  ObjectiveMode mode = ObjectiveMode::target_replication;
  double alpha = 0.5;  // weight on the per-step average under target replication
  int primary_label_count = 0;
  int aux_label_count = 0;

  int output_width() const { return primary_label_count + aux_label_count; }
};

void validate_objective(const ObjectiveConfig& cfg);

std::string to_string(ObjectiveMode mode);
ObjectiveMode objective_mode_from_string(const std::string& name);

// Mean over labels of binary cross-entropy, probabilities clamped to
// [eps, 1 - eps].
double log_loss(std::span<const double> yhat, std::span<const double> y);

// d log_loss / d yhat. Zero where the clamp is active.
void log_loss_gradient(std::span<const double> yhat, std::span<const double> y,
                       std::span<double> out);

// Per-step weights w_t with sum_t w_t * loss_t the sequence objective.
//   final_only:          w = e_T
//   target_replication:  w_t = alpha / T + (1 - alpha) [t == T]
//   linear_gain:         w_t = t / (T (T + 1) / 2)
Eigen::VectorXd step_weights(int steps, const ObjectiveConfig& cfg);

struct SequenceLoss {
  double value = 0.0;
  Eigen::VectorXd step_losses;  // loss at each step
  Eigen::MatrixXd d_yhat;       // same shape as yhat: labels x steps
};

// yhat is labels x steps (one column per sequence step); y is the static
// target vector replicated at every step.
SequenceLoss sequence_loss(const Eigen::MatrixXd& yhat, const Eigen::VectorXd& y,
                           const ObjectiveConfig& cfg);

// Concatenates primary and auxiliary targets; auxiliary labels must be
// present when aux_label_count > 0.
Eigen::VectorXd compose_targets(std::span<const int> primary, std::span<const int> aux,
                                const ObjectiveConfig& cfg);

// Splits an episode label vector (primary first) into the training targets.
Eigen::VectorXd targets_from_labels(const std::vector<int>& labels, const ObjectiveConfig& cfg);

// Keeps only the primary-label columns of an examples x outputs matrix.
Eigen::MatrixXd mask_predictions(const Eigen::MatrixXd& yhat, const ObjectiveConfig& cfg);

}  // namespace pheno
