#pragma once

// Data-parallel kernels over independent sequences or episodes.
//
// Each parallel kernel has a serial counterpart used as its test oracle and
// benchmark baseline. Per-item results are reduced in item order, so the
// parallel kernels are bitwise identical for any thread count.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pheno/dense.hpp"
#include "pheno/episode.hpp"
#include "pheno/lstm.hpp"
#include "pheno/objectives.hpp"

namespace pheno::kernels {

struct SequenceItem {
  const Eigen::MatrixXd* x = nullptr;  // input_dim x T
  const Eigen::VectorXd* y = nullptr;  // targets, output_dim
  DropoutPlan dropout;
};

// Mean loss and mean gradient over the batch (gradient written to `grads`).
double lstm_batch_gradient(const LstmParams& params, std::span<const SequenceItem> batch,
                           const ObjectiveConfig& objective, LstmGradients& grads, int threads);

// Same contract, computed one step at a time by the reference implementation.
double lstm_batch_gradient_serial(const LstmParams& params, std::span<const SequenceItem> batch,
                                  const ObjectiveConfig& objective, LstmGradients& grads);

// Final-step probabilities, one row per sequence (N x output_dim).
Eigen::MatrixXd lstm_predict_final(const LstmParams& params,
                                   std::span<const Eigen::MatrixXd* const> inputs, int threads);

Eigen::MatrixXd lstm_predict_final_serial(const LstmParams& params,
                                          std::span<const Eigen::MatrixXd* const> inputs);

// Mean over the columns of x (in_dim x N) of the per-example log loss
// against y (out_dim x N). The whole batch is one GEMM chain per layer.
double mlp_batch_gradient(const MlpParams& params, const Eigen::MatrixXd& x,
                          const Eigen::MatrixXd& y, const DropoutPlan& dropout, MlpParams& grads);

double mlp_batch_loss(const MlpParams& params, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

std::vector<RegularGrid> preprocess_all(const std::vector<RawEpisode>& episodes,
                                        const std::vector<ChannelSpec>& specs, int threads);

}  // namespace pheno::kernels
