#include "pheno/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "pheno/error.hpp"
#include "pheno/io.hpp"

namespace pheno {

using nlohmann::json;

void validate_predictions(const PredictionMatrix& pm) {
  if (pm.scores.rows() != pm.labels.rows() || pm.scores.cols() != pm.labels.cols())
    throw InputError("prediction matrix: scores and labels differ in shape");
  if (!pm.scores.allFinite()) throw InputError("prediction matrix: non-finite scores");
}

std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InputError("roc_auc: length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of (1-based, tie-averaged) ranks of the positives.
  double rank_sum = 0.0;
  double n_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    double pos_in_group = 0.0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      pos_in_group += labels[order[j]] != 0 ? 1.0 : 0.0;
      ++j;
    }
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum += pos_in_group * avg_rank;
    n_pos += pos_in_group;
    i = j;
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) return std::nullopt;
  return (rank_sum - 0.5 * n_pos * (n_pos + 1.0)) / (n_pos * n_neg);
}

namespace {

std::span<const double> column(const Eigen::MatrixXd& m, int c) {
  return {m.col(c).data(), static_cast<std::size_t>(m.rows())};
}

std::span<const int> column(const LabelMatrix& m, int c) {
  return {m.col(c).data(), static_cast<std::size_t>(m.rows())};
}

}  // namespace

std::optional<double> micro_auc(const PredictionMatrix& pm) {
  validate_predictions(pm);
  return roc_auc({pm.scores.data(), static_cast<std::size_t>(pm.scores.size())},
                 {pm.labels.data(), static_cast<std::size_t>(pm.labels.size())});
}

std::vector<std::optional<double>> per_label_auc(const PredictionMatrix& pm) {
  validate_predictions(pm);
  std::vector<std::optional<double>> out;
  for (int l = 0; l < pm.label_count(); ++l) out.push_back(roc_auc(column(pm.scores, l), column(pm.labels, l)));
  return out;
}

std::optional<double> macro_auc(const PredictionMatrix& pm) {
  double sum = 0.0;
  int defined = 0;
  for (const auto& a : per_label_auc(pm)) {
    if (!a) continue;
    sum += *a;
    ++defined;
  }
  if (defined == 0) return std::nullopt;
  return sum / defined;
}

double f1_from_counts(long tp, long fp, long fn) {
  if (tp < 0 || fp < 0 || fn < 0) throw InputError("f1_from_counts: negative count");
  const long denom = 2 * tp + fp + fn;
  if (denom == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

std::vector<double> candidate_thresholds(std::span<const double> scores) {
  std::vector<double> u(scores.begin(), scores.end());
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  std::vector<double> out{0.0};
  for (std::size_t k = 0; k + 1 < u.size(); ++k) out.push_back(0.5 * (u[k] + u[k + 1]));
  out.push_back(1.0);
  std::sort(out.begin(), out.end());
  return out;
}

ThresholdChoice best_f1_threshold(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InputError("best_f1_threshold: length mismatch");
  if (scores.empty()) throw InputError("threshold selection needs a non-empty validation set");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  long positives = 0;
  for (int y : labels) positives += y != 0;

  // Walk candidates from the largest threshold down; only strict improvements
  // replace the incumbent, so ties keep the larger threshold.
  long tp = 0;
  long taken = 0;
  std::size_t i = 0;
  auto take_while = [&](auto pred) {
    while (i < n && pred(scores[order[i]])) {
      tp += labels[order[i]] != 0;
      ++taken;
      ++i;
    }
  };
  take_while([](double s) { return s >= 1.0; });
  ThresholdChoice best{1.0, f1_from_counts(tp, taken - tp, positives - tp)};
  while (i < n) {
    const double current = scores[order[i]];
    take_while([&](double s) { return s == current; });
    double threshold = 0.0;
    if (i < n) {
      threshold = 0.5 * (current + scores[order[i]]);
      // Adjacent doubles: the midpoint may round onto the lower score.
      if (threshold <= scores[order[i]]) threshold = current;
    }
    const double f1 = f1_from_counts(tp, taken - tp, positives - tp);
    if (f1 > best.f1) best = {threshold, f1};
  }
  // Threshold 0 admits every score in [0, 1].
  const double f1_all = f1_from_counts(positives, static_cast<long>(n) - positives, 0);
  if (f1_all > best.f1) best = {0.0, f1_all};
  return best;
}

ThresholdChoice select_threshold_micro(const PredictionMatrix& validation) {
  validate_predictions(validation);
  return best_f1_threshold({validation.scores.data(), static_cast<std::size_t>(validation.scores.size())},
                           {validation.labels.data(), static_cast<std::size_t>(validation.labels.size())});
}

std::vector<double> select_thresholds_macro(const PredictionMatrix& validation) {
  validate_predictions(validation);
  std::vector<double> out;
  for (int l = 0; l < validation.label_count(); ++l)
    out.push_back(best_f1_threshold(column(validation.scores, l), column(validation.labels, l)).threshold);
  return out;
}

namespace {

struct Counts {
  long tp = 0, fp = 0, fn = 0;
};

Counts count_column(const PredictionMatrix& pm, int l, double threshold) {
  Counts c;
  for (int n = 0; n < pm.examples(); ++n) {
    const bool pred = pm.scores(n, l) >= threshold;
    const bool truth = pm.labels(n, l) != 0;
    c.tp += pred && truth;
    c.fp += pred && !truth;
    c.fn += !pred && truth;
  }
  return c;
}

void check_threshold(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw InputError("threshold must lie in [0, 1]");
}

void check_k(const PredictionMatrix& pm, int k) {
  if (k <= 0 || k > pm.label_count())
    throw InputError("k must be in [1, " + std::to_string(pm.label_count()) + "], got " + std::to_string(k));
}

// Indices of the k best labels of row n; ties broken by lower label index.
std::vector<int> top_k(const PredictionMatrix& pm, int n, int k) {
  std::vector<int> idx(pm.label_count());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return pm.scores(n, a) > pm.scores(n, b); });
  idx.resize(k);
  return idx;
}

}  // namespace

double micro_f1(const PredictionMatrix& pm, double threshold) {
  validate_predictions(pm);
  check_threshold(threshold);
  Counts total;
  for (int l = 0; l < pm.label_count(); ++l) {
    const Counts c = count_column(pm, l, threshold);
    total.tp += c.tp;
    total.fp += c.fp;
    total.fn += c.fn;
  }
  return f1_from_counts(total.tp, total.fp, total.fn);
}

double macro_f1(const PredictionMatrix& pm, const std::vector<double>& thresholds) {
  validate_predictions(pm);
  if (static_cast<int>(thresholds.size()) != pm.label_count())
    throw InputError("macro_f1: need one threshold per label");
  double sum = 0.0;
  for (int l = 0; l < pm.label_count(); ++l) {
    check_threshold(thresholds[l]);
    const Counts c = count_column(pm, l, thresholds[l]);
    sum += f1_from_counts(c.tp, c.fp, c.fn);
  }
  return sum / pm.label_count();
}

double precision_at_k(const PredictionMatrix& pm, int k) {
  validate_predictions(pm);
  check_k(pm, k);
  if (pm.examples() == 0) throw InputError("precision_at_k: no examples");
  double sum = 0.0;
  for (int n = 0; n < pm.examples(); ++n) {
    int hits = 0;
    for (int l : top_k(pm, n, k)) hits += pm.labels(n, l) != 0;
    sum += static_cast<double>(hits) / k;
  }
  return sum / pm.examples();
}

double recall_at_k(const PredictionMatrix& pm, int k) {
  validate_predictions(pm);
  check_k(pm, k);
  double sum = 0.0;
  int counted = 0;
  for (int n = 0; n < pm.examples(); ++n) {
    const int positives = pm.labels.row(n).sum();
    if (positives == 0) continue;
    int hits = 0;
    for (int l : top_k(pm, n, k)) hits += pm.labels(n, l) != 0;
    sum += static_cast<double>(hits) / positives;
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / counted;
}

double precision_at_k_bound(const PredictionMatrix& pm, int k) {
  validate_predictions(pm);
  check_k(pm, k);
  if (pm.examples() == 0) throw InputError("precision_at_k_bound: no examples");
  double sum = 0.0;
  for (int n = 0; n < pm.examples(); ++n) sum += std::min(pm.labels.row(n).sum(), k);
  return sum / pm.examples() / k;
}

double cost_threshold(double cost_ratio) {
  if (!(cost_ratio >= 0.0)) throw InputError("cost ratio must be nonnegative");
  return cost_ratio / (1.0 + cost_ratio);
}

ThresholdSet select_thresholds(const PredictionMatrix& validation) {
  return {select_threshold_micro(validation).threshold, select_thresholds_macro(validation)};
}

MetricReport evaluate(const PredictionMatrix& test, const ThresholdSet& thresholds, int k) {
  validate_predictions(test);
  MetricReport r;
  r.k = k;
  r.thresholds = thresholds;
  r.micro_auc = micro_auc(test);
  r.macro_auc = macro_auc(test);
  r.micro_f1 = micro_f1(test, thresholds.global_threshold);
  r.macro_f1 = macro_f1(test, thresholds.per_label_thresholds);
  r.precision_at_k = precision_at_k(test, k);
  r.recall_at_k = recall_at_k(test, k);
  const auto aucs = per_label_auc(test);
  for (int l = 0; l < test.label_count(); ++l) {
    const Counts c = count_column(test, l, thresholds.per_label_thresholds[l]);
    LabelMetrics m;
    m.label = l;
    m.auc = aucs[l];
    m.f1 = f1_from_counts(c.tp, c.fp, c.fn);
    m.precision = c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / (c.tp + c.fp);
    m.recall = c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / (c.tp + c.fn);
    r.per_label.push_back(m);
  }
  std::stable_sort(r.per_label.begin(), r.per_label.end(),
                   [](const LabelMetrics& a, const LabelMetrics& b) { return a.f1 > b.f1; });
  return r;
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string label_name(const std::vector<std::string>& names, int l) {
  return l < static_cast<int>(names.size()) ? names[l] : "label_" + std::to_string(l);
}

}  // namespace

std::string report_to_json(const MetricReport& r, const std::vector<std::string>& label_names) {
  json per_label = json::array();
  for (const auto& m : r.per_label)
    per_label.push_back({{"label", m.label},
                         {"condition", label_name(label_names, m.label)},
                         {"auc", optional_number(m.auc)},
                         {"f1", m.f1},
                         {"precision", m.precision},
                         {"recall", m.recall}});
  json j = {{"micro_auc", optional_number(r.micro_auc)},
            {"macro_auc", optional_number(r.macro_auc)},
            {"micro_f1", r.micro_f1},
            {"macro_f1", r.macro_f1},
            {"precision_at_k", r.precision_at_k},
            {"recall_at_k", r.recall_at_k},
            {"k", r.k},
            {"thresholds",
             {{"global_threshold", r.thresholds.global_threshold},
              {"per_label_thresholds", r.thresholds.per_label_thresholds}}},
            {"per_label", std::move(per_label)}};
  return j.dump(2) + "\n";
}

std::string per_label_csv(const MetricReport& r, const std::vector<std::string>& label_names) {
  std::string out = "condition,f1,auc,precision,recall\n";
  for (const auto& m : r.per_label) {
    out += label_name(label_names, m.label) + "," + format_real(m.f1) + "," +
           (m.auc ? format_real(*m.auc) : std::string("")) + "," + format_real(m.precision) + "," +
           format_real(m.recall) + "\n";
  }
  return out;
}

ThresholdSet thresholds_from_json(const std::string& text) {
  try {
    auto j = json::parse(text);
    if (j.contains("thresholds")) j = j.at("thresholds");
    ThresholdSet t;
    t.global_threshold = j.at("global_threshold").get<double>();
    t.per_label_thresholds = j.at("per_label_thresholds").get<std::vector<double>>();
    return t;
  } catch (const json::exception& ex) {
    throw InputError(std::string("thresholds: ") + ex.what());
  }
}

}  // namespace pheno
