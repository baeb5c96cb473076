#pragma once

// Epoch loop shared by the LSTM and MLP models: shuffled mini-batches, SGD
// with momentum, gradient-norm scaling, per-epoch train/validation metrics,
// and the 2-of-3 validation model-selection rule.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pheno/error.hpp"
#include "pheno/metrics.hpp"
#include "pheno/optim.hpp"
#include "pheno/params.hpp"
#include "pheno/rng.hpp"

namespace pheno {

struct SplitMetrics {
  double micro_auc = 0.0;
  double micro_f1 = 0.0;  // best swept threshold on that split
  double precision_at_k = 0.0;
};

SplitMetrics epoch_metrics(const PredictionMatrix& pm, int k);

struct EpochRecord {
  int epoch = 0;
  SplitMetrics train;
  SplitMetrics validation;
  std::string checkpoint;  // path, empty when not persisted
};

struct RunHistory {
  std::vector<EpochRecord> epochs;
  std::string config_digest;
  int k = 10;
};

enum class SelectionMetric { micro_auc = 0, micro_f1 = 1, precision_at_k = 2 };

// Epoch maximizing one validation metric; exact ties go to the earlier epoch.
int best_epoch(const RunHistory& history, SelectionMetric metric);

// The epoch that is best on at least two of the three validation metrics
// (earliest if several); otherwise the micro-AUC best.
int select_model(const RunHistory& history);

// epoch,split,micro_auc,micro_f1,precision_at_<k>
std::string history_to_csv(const RunHistory& history);

struct TrainSettings {
  int epochs = 100;
  int batch_size = 16;
  SgdConfig sgd;
  std::uint64_t seed = 1;
  int k = 10;
};

void validate_train_settings(const TrainSettings& s);

// Shuffled training order for one epoch (epochs count from 1).
std::vector<int> epoch_order(int train_count, std::uint64_t seed, int epoch);

template <class P>
struct TrainResult {
  RunHistory history;
  int selected_epoch = 0;
  P selected;                   // parameters after the selected epoch
  P final_params;               // parameters after the last epoch
  OptimizerState<P> optimizer;  // state after the last epoch
};

template <class P>
struct TrainHooks {
  // batch_gradient(params, batch positions into the training set, epoch,
  // batch number, grads) writes the mean batch gradient and returns the loss.
  std::function<double(const P&, std::span<const int>, int, int, P&)> batch_gradient;
  // Inference-mode predictions on the training and validation sets.
  std::function<PredictionMatrix(const P&)> predict_train;
  std::function<PredictionMatrix(const P&)> predict_validation;
  // Called after each epoch is recorded; may persist a checkpoint and
  // return its path.
  std::function<std::string(int, const P&, const OptimizerState<P>&)> on_epoch;
};

template <class P>
TrainResult<P> run_training(P params, int train_count, const TrainSettings& settings,
                            const TrainHooks<P>& hooks) {
  validate_train_settings(settings);
  if (train_count < 1) throw InputError("empty training set");
  TrainResult<P> result{{}, 0, params, params, OptimizerState<P>(params, settings.sgd)};
  auto& opt = result.optimizer;
  P grads = zeros_like(params);
  // Snapshots of the epochs that currently lead some validation metric.
  std::map<int, P> snapshots;

  for (int epoch = 1; epoch <= settings.epochs; ++epoch) {
    const std::vector<int> order = epoch_order(train_count, settings.seed, epoch);
    int batch = 0;
    for (std::size_t start = 0; start < order.size(); start += settings.batch_size, ++batch) {
      const std::size_t len = std::min<std::size_t>(settings.batch_size, order.size() - start);
      const std::span<const int> members(order.data() + start, len);
      const std::string where = "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch);
      double loss = 0.0;
      try {
        loss = hooks.batch_gradient(params, members, epoch, batch, grads);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (" + where + ")");
      }
      if (!std::isfinite(loss) || !all_finite(grads))
        throw NumericError("non-finite loss or gradient at " + where);
      clip_gradients(grads, settings.sgd.clip_norm);
      sgd_momentum_step(params, grads, opt);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    try {
      rec.train = epoch_metrics(hooks.predict_train(params), settings.k);
      rec.validation = epoch_metrics(hooks.predict_validation(params), settings.k);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (evaluating epoch " + std::to_string(epoch) + ")");
    }
    if (hooks.on_epoch) rec.checkpoint = hooks.on_epoch(epoch, params, opt);
    result.history.epochs.push_back(rec);

    std::set<int> leaders;
    for (auto m : {SelectionMetric::micro_auc, SelectionMetric::micro_f1,
                   SelectionMetric::precision_at_k})
      leaders.insert(best_epoch(result.history, m));
    if (leaders.count(epoch)) snapshots.emplace(epoch, params);
    std::erase_if(snapshots, [&](const auto& kv) { return !leaders.count(kv.first); });
  }
  result.history.k = settings.k;
  result.selected_epoch = select_model(result.history);
  result.selected = snapshots.at(result.selected_epoch);
  result.final_params = std::move(params);
  return result;
}

}  // namespace pheno
