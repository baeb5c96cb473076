#pragma once

// Comparison models: the base-rate classifier, per-label logistic regression
// with one shared l2 penalty, and the ReLU MLP with dropout.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pheno/dense.hpp"
#include "pheno/metrics.hpp"
#include "pheno/training.hpp"

namespace pheno {

struct BaseRateModel {
  Eigen::VectorXd rates;  // per-label training frequency
};

BaseRateModel fit_base_rate(const LabelMatrix& train_labels);

// n x L, every row equal to the rates.
Eigen::MatrixXd predict_base_rate(const BaseRateModel& model, int n);

struct LogisticModel {
  Eigen::MatrixXd w;  // L x D, in raw feature units
  Eigen::VectorXd b;
  double lambda = 0.0;
};

struct LogisticConfig {
  std::vector<double> lambda_grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  int max_iterations = 500;
  double tolerance = 1e-8;  // on the gradient norm
};

// One label: minimizes mean binary cross-entropy + (lambda/2)|w|^2 by full
// batch gradient descent on standardized features. z is D x N standardized;
// returns (w, b) in the standardized space. Degenerate labels get zero
// weights and a bias at the clamped logit of their rate.
struct LogisticFit {
  Eigen::VectorXd w;
  double b = 0.0;
  int iterations = 0;
};
LogisticFit fit_logistic_label(const Eigen::MatrixXd& z, const Eigen::VectorXi& y, double lambda,
                               const LogisticConfig& config);

// x is D x N (one column per example); labels N x L.
LogisticModel fit_logistic_fixed(const Eigen::MatrixXd& x, const LabelMatrix& labels, double lambda,
                                 const LogisticConfig& config, int threads = 1);

// Fits every lambda in the grid and keeps the best validation micro AUC
// (ties to the earlier grid entry).
LogisticModel fit_logistic(const Eigen::MatrixXd& x, const LabelMatrix& labels,
                           const Eigen::MatrixXd& x_val, const LabelMatrix& labels_val,
                           const LogisticConfig& config, int threads = 1);

// N x L probabilities.
Eigen::MatrixXd predict_logistic(const LogisticModel& model, const Eigen::MatrixXd& x);

struct MlpConfig {
  std::vector<int> hidden = {300, 300, 300};
  double dropout = 0.5;
  TrainSettings train{1000, 16, {}, 1, 10};
};

// x / x_val are D x N; labels hold the primary labels only.
TrainResult<MlpParams> fit_mlp(const Eigen::MatrixXd& x, const LabelMatrix& labels,
                               const Eigen::MatrixXd& x_val, const LabelMatrix& labels_val,
                               const MlpConfig& config,
                               std::function<std::string(int, const MlpParams&,
                                                         const OptimizerState<MlpParams>&)>
                                   on_epoch = {});

}  // namespace pheno
