#include "pheno/training.hpp"

#include <array>
#include <sstream>

#include "pheno/io.hpp"

namespace pheno {

SplitMetrics epoch_metrics(const PredictionMatrix& pm, int k) {
  SplitMetrics m;
  m.micro_auc = micro_auc(pm).value_or(0.5);
  m.micro_f1 = select_threshold_micro(pm).f1;
  m.precision_at_k = precision_at_k(pm, std::min(k, pm.label_count()));
  return m;
}

namespace {

double metric_value(const EpochRecord& r, SelectionMetric m) {
  switch (m) {
    case SelectionMetric::micro_auc: return r.validation.micro_auc;
    case SelectionMetric::micro_f1: return r.validation.micro_f1;
    case SelectionMetric::precision_at_k: return r.validation.precision_at_k;
  }
  return 0.0;
}

}  // namespace

int best_epoch(const RunHistory& history, SelectionMetric metric) {
  if (history.epochs.empty()) throw InputError("empty run history");
  const EpochRecord* best = &history.epochs.front();
  for (const auto& r : history.epochs)
    if (metric_value(r, metric) > metric_value(*best, metric)) best = &r;
  return best->epoch;
}

int select_model(const RunHistory& history) {
  const std::array<int, 3> bests = {best_epoch(history, SelectionMetric::micro_auc),
                                    best_epoch(history, SelectionMetric::micro_f1),
                                    best_epoch(history, SelectionMetric::precision_at_k)};
  int chosen = -1;
  for (int e : bests)
    if (std::count(bests.begin(), bests.end(), e) >= 2 && (chosen < 0 || e < chosen)) chosen = e;
  return chosen >= 0 ? chosen : bests[0];
}

std::string history_to_csv(const RunHistory& history) {
  std::ostringstream out;
  out << "epoch,split,micro_auc,micro_f1,precision_at_" << history.k << "\n";
  for (const auto& r : history.epochs) {
    for (const auto& [split, m] : {std::pair{"train", r.train}, std::pair{"validation", r.validation}})
      out << r.epoch << "," << split << "," << format_real(m.micro_auc) << ","
          << format_real(m.micro_f1) << "," << format_real(m.precision_at_k) << "\n";
  }
  return out.str();
}

void validate_train_settings(const TrainSettings& s) {
  if (s.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (s.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (s.k < 1) throw ConfigError("k must be >= 1");
  validate_sgd(s.sgd);
}

std::vector<int> epoch_order(int train_count, std::uint64_t seed, int epoch) {
  std::vector<int> order(train_count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(stream_key(seed, "shuffle", static_cast<std::uint64_t>(epoch)));
  rng.shuffle(std::span<int>(order));
  return order;
}

}  // namespace pheno
