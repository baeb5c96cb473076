#pragma once

// Multilabel evaluation: micro/macro AUC, micro/macro F1 with thresholds
// tuned on validation data, precision@k and recall@k, and the cost-sensitive
// decision threshold.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pheno {

using LabelMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

// N examples x L labels.
struct PredictionMatrix {
  Eigen::MatrixXd scores;
  LabelMatrix labels;

  int examples() const { return static_cast<int>(scores.rows()); }
  int label_count() const { return static_cast<int>(scores.cols()); }
};

void validate_predictions(const PredictionMatrix& pm);

// Mann-Whitney AUC with half credit for ties. Empty when either class is
// absent.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> labels);

// AUC over the flattened N*L cells.
std::optional<double> micro_auc(const PredictionMatrix& pm);

// Mean of the per-label AUCs that are defined; empty if none is.
std::optional<double> macro_auc(const PredictionMatrix& pm);

std::vector<std::optional<double>> per_label_auc(const PredictionMatrix& pm);

// 2tp / (2tp + fp + fn), with 0/0 taken as 0.
double f1_from_counts(long tp, long fp, long fn);

struct ThresholdChoice {
  double threshold = 0.5;
  double f1 = 0.0;
};

// Candidate thresholds: 0, 1, and midpoints between adjacent distinct
// scores, ascending. A cell is predicted positive when score >= threshold.
std::vector<double> candidate_thresholds(std::span<const double> scores);

// Exhaustive sweep over candidate_thresholds; ties go to the larger threshold.
ThresholdChoice best_f1_threshold(std::span<const double> scores, std::span<const int> labels);

// One global threshold maximizing flattened F1.
ThresholdChoice select_threshold_micro(const PredictionMatrix& validation);

// One threshold per label, each maximizing that label's F1.
std::vector<double> select_thresholds_macro(const PredictionMatrix& validation);

double micro_f1(const PredictionMatrix& pm, double threshold);
double macro_f1(const PredictionMatrix& pm, const std::vector<double>& thresholds);

// Per example, the k highest-scoring labels (ties to the lower label index).
double precision_at_k(const PredictionMatrix& pm, int k);
// Averaged over examples with at least one positive label.
double recall_at_k(const PredictionMatrix& pm, int k);
// Best achievable precision@k: mean over examples of min(positives, k) / k.
double precision_at_k_bound(const PredictionMatrix& pm, int k);

// F1-optimal decision threshold for a calibrated classifier when a false
// positive costs `cost_ratio` times a false negative: ratio / (1 + ratio).
double cost_threshold(double cost_ratio);

struct ThresholdSet {
  double global_threshold = 0.5;
  std::vector<double> per_label_thresholds;
};

ThresholdSet select_thresholds(const PredictionMatrix& validation);

struct LabelMetrics {
  int label = 0;
  std::optional<double> auc;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct MetricReport {
  std::optional<double> micro_auc;
  std::optional<double> macro_auc;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double precision_at_k = 0.0;
  double recall_at_k = 0.0;
  int k = 10;
  ThresholdSet thresholds;
  std::vector<LabelMetrics> per_label;  // sorted by F1, descending
};

MetricReport evaluate(const PredictionMatrix& test, const ThresholdSet& thresholds, int k);

std::string report_to_json(const MetricReport& report, const std::vector<std::string>& label_names);
std::string per_label_csv(const MetricReport& report, const std::vector<std::string>& label_names);
ThresholdSet thresholds_from_json(const std::string& text);

}  // namespace pheno
