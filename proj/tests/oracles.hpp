#pragma once

// Slow, direct reimplementations used as independent references in tests.

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "pheno/metrics.hpp"
#include "pheno/training.hpp"

namespace oracle {

// Percentile by rank interpolation on a freshly sorted copy.
inline double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double rank = p * static_cast<double>(v.size() - 1);
  const double below = std::floor(rank);
  const auto i = static_cast<std::size_t>(below);
  if (i + 1 >= v.size()) return v.back();
  return v[i] * (1.0 - (rank - below)) + v[i + 1] * (rank - below);
}

// The eleven per-channel statistics from explicit sums.
inline std::vector<double> channel_stats(const std::vector<double>& y) {
  const double n = static_cast<double>(y.size());
  double sum = 0.0, sum_sq = 0.0, sum_ty = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    sum += y[t];
    sum_ty += static_cast<double>(t) * y[t];
  }
  const double mean = sum / n;
  for (double v : y) sum_sq += (v - mean) * (v - mean);
  // Closed-form least-squares slope against t = 0..n-1.
  const double slope =
      y.size() < 2 ? 0.0 : (12.0 * sum_ty - 6.0 * (n - 1.0) * sum) / (n * (n * n - 1.0));
  return {y.front(),
          y.back(),
          (y.back() - y.front()) / n,
          mean,
          std::sqrt(sum_sq / n),
          percentile(y, 0.5),
          percentile(y, 0.25),
          percentile(y, 0.75),
          *std::min_element(y.begin(), y.end()),
          *std::max_element(y.begin(), y.end()),
          slope};
}

inline std::vector<double> features(const Eigen::MatrixXd& grid) {
  std::vector<double> out;
  for (Eigen::Index c = 0; c < grid.cols(); ++c) {
    std::vector<double> y(grid.rows());
    for (Eigen::Index t = 0; t < grid.rows(); ++t) y[t] = grid(t, c);
    const auto s = channel_stats(y);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

// O(n^2) pair counting.
inline std::optional<double> pair_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double credit = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1.0;
      if (s[i] > s[j]) credit += 1.0;
      else if (s[i] == s[j]) credit += 0.5;
    }
  }
  if (pairs == 0.0) return std::nullopt;
  return credit / pairs;
}

inline std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index c) {
  return {m.col(c).data(), m.col(c).data() + m.rows()};
}
inline std::vector<int> column(const pheno::LabelMatrix& m, Eigen::Index c) {
  return {m.col(c).data(), m.col(c).data() + m.rows()};
}

inline std::optional<double> micro_auc(const pheno::PredictionMatrix& pm) {
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 0; i < pm.examples(); ++i)
    for (int l = 0; l < pm.label_count(); ++l) {
      s.push_back(pm.scores(i, l));
      y.push_back(pm.labels(i, l));
    }
  return pair_auc(s, y);
}

inline std::optional<double> macro_auc(const pheno::PredictionMatrix& pm) {
  double sum = 0.0;
  int n = 0;
  for (int l = 0; l < pm.label_count(); ++l) {
    if (auto a = pair_auc(column(pm.scores, l), column(pm.labels, l))) {
      sum += *a;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

inline double f1_at(const std::vector<double>& s, const std::vector<int>& y, double thr) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool pos = s[i] >= thr;
    if (pos && y[i] == 1) tp += 1;
    if (pos && y[i] == 0) fp += 1;
    if (!pos && y[i] == 1) fn += 1;
  }
  return tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
}

// Best F1 over every distinct way of cutting the sorted scores, plus the
// all-negative cut.
inline double best_f1(const std::vector<double>& s, const std::vector<int>& y) {
  std::set<double> cuts(s.begin(), s.end());
  double best = f1_at(s, y, std::numeric_limits<double>::infinity());
  for (double c : cuts) best = std::max(best, f1_at(s, y, c));
  return best;
}

inline double best_micro_f1(const pheno::PredictionMatrix& pm) {
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 0; i < pm.examples(); ++i)
    for (int l = 0; l < pm.label_count(); ++l) {
      s.push_back(pm.scores(i, l));
      y.push_back(pm.labels(i, l));
    }
  return best_f1(s, y);
}

inline double best_macro_f1(const pheno::PredictionMatrix& pm) {
  double sum = 0.0;
  for (int l = 0; l < pm.label_count(); ++l)
    sum += best_f1(column(pm.scores, l), column(pm.labels, l));
  return sum / pm.label_count();
}

// 2-of-3 selection written as a vote count over all epochs.
inline int select_epoch(const std::vector<std::array<double, 3>>& val) {
  std::array<int, 3> best{};
  for (int m = 0; m < 3; ++m) {
    double top = -1.0;
    for (std::size_t e = 0; e < val.size(); ++e)
      if (val[e][m] > top) {
        top = val[e][m];
        best[m] = static_cast<int>(e);
      }
  }
  for (std::size_t e = 0; e < val.size(); ++e) {
    int votes = 0;
    for (int m = 0; m < 3; ++m) votes += best[m] == static_cast<int>(e);
    if (votes >= 2) return static_cast<int>(e);
  }
  return best[0];
}

}  // namespace oracle
