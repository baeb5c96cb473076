#include "pheno/kernels.hpp"

#include <cmath>
#include <exception>
#include <mutex>

#include "pheno/error.hpp"
#include "pheno/lstm_reference.hpp"
#include "pheno/params.hpp"

namespace pheno::kernels {

namespace {

// Runs body(i) for i in [0, n) in an OpenMP loop and rethrows the first
// exception (by index) on the calling thread.
template <class Body>
void parallel_for(int n, int threads, Body body) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double reduce_in_order(const std::vector<LstmGradients>& per_item, const std::vector<double>& losses,
                       LstmGradients& grads) {
  set_zero(grads);
  double loss = 0.0;
  for (std::size_t i = 0; i < per_item.size(); ++i) {
    add_scaled(grads, 1.0, per_item[i]);
    loss += losses[i];
  }
  const double inv = 1.0 / static_cast<double>(per_item.size());
  scale_in_place(grads, inv);
  return loss * inv;
}

void check_batch(std::span<const SequenceItem> batch) {
  if (batch.empty()) throw InputError("empty batch");
}

}  // namespace

double lstm_batch_gradient(const LstmParams& params, std::span<const SequenceItem> batch,
                           const ObjectiveConfig& objective, LstmGradients& grads, int threads) {
  check_batch(batch);
  const auto n = static_cast<int>(batch.size());
  std::vector<LstmGradients> per_item(n);
  std::vector<double> losses(n);
  const LstmArch arch = params.arch();
  parallel_for(n, threads, [&](int i) {
    const auto& item = batch[i];
    const SequenceTape tape = forward_sequence(*item.x, params, item.dropout);
    const SequenceLoss loss = sequence_loss(tape.yhat, *item.y, objective);
    if (!std::isfinite(loss.value)) throw NumericError("non-finite loss in batch item " + std::to_string(i));
    per_item[i] = zero_lstm_params(arch);
    backward_sequence(tape, params, loss.d_yhat, per_item[i]);
    losses[i] = loss.value;
  });
  return reduce_in_order(per_item, losses, grads);
}

double lstm_batch_gradient_serial(const LstmParams& params, std::span<const SequenceItem> batch,
                                  const ObjectiveConfig& objective, LstmGradients& grads) {
  check_batch(batch);
  std::vector<LstmGradients> per_item;
  std::vector<double> losses;
  for (const auto& item : batch) {
    const SequenceTape tape = reference::forward_sequence(*item.x, params, item.dropout);
    const SequenceLoss loss = sequence_loss(tape.yhat, *item.y, objective);
    per_item.push_back(zero_lstm_params(params.arch()));
    reference::backward_sequence(tape, params, loss.d_yhat, per_item.back());
    losses.push_back(loss.value);
  }
  return reduce_in_order(per_item, losses, grads);
}

Eigen::MatrixXd lstm_predict_final(const LstmParams& params,
                                   std::span<const Eigen::MatrixXd* const> inputs, int threads) {
  const auto n = static_cast<int>(inputs.size());
  Eigen::MatrixXd out(n, params.output_dim());
  parallel_for(n, threads, [&](int i) {
    const Eigen::MatrixXd yhat = predict_sequence(*inputs[i], params);
    out.row(i) = yhat.col(yhat.cols() - 1).transpose();
  });
  return out;
}

Eigen::MatrixXd lstm_predict_final_serial(const LstmParams& params,
                                          std::span<const Eigen::MatrixXd* const> inputs) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(inputs.size()), params.output_dim());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const SequenceTape tape = reference::forward_sequence(*inputs[i], params);
    out.row(static_cast<Eigen::Index>(i)) = tape.yhat.col(tape.yhat.cols() - 1).transpose();
  }
  return out;
}

namespace {

double column_losses(const Eigen::MatrixXd& yhat, const Eigen::MatrixXd& y, Eigen::MatrixXd* d_yhat) {
  if (yhat.rows() != y.rows() || yhat.cols() != y.cols())
    throw InputError("MLP targets have shape " + std::to_string(y.rows()) + "x" +
                     std::to_string(y.cols()) + ", outputs " + std::to_string(yhat.rows()) + "x" +
                     std::to_string(yhat.cols()));
  const auto n = yhat.cols();
  const auto rows = static_cast<std::size_t>(yhat.rows());
  double total = 0.0;
  if (d_yhat) d_yhat->resize(yhat.rows(), n);
  for (Eigen::Index c = 0; c < n; ++c) {
    std::span<const double> p(yhat.col(c).data(), rows);
    std::span<const double> t(y.col(c).data(), rows);
    total += log_loss(p, t);
    if (d_yhat) log_loss_gradient(p, t, std::span<double>(d_yhat->col(c).data(), rows));
  }
  if (d_yhat) *d_yhat /= static_cast<double>(n);
  return total / static_cast<double>(n);
}

}  // namespace

double mlp_batch_gradient(const MlpParams& params, const Eigen::MatrixXd& x,
                          const Eigen::MatrixXd& y, const DropoutPlan& dropout, MlpParams& grads) {
  if (x.cols() < 1) throw InputError("empty batch");
  const MlpTape tape = mlp_forward(params, x, dropout);
  Eigen::MatrixXd d_yhat;
  const double loss = column_losses(tape.yhat, y, &d_yhat);
  set_zero(grads);
  mlp_backward(params, tape, d_yhat, grads);
  return loss;
}

double mlp_batch_loss(const MlpParams& params, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  return column_losses(mlp_predict(params, x), y, nullptr);
}

std::vector<RegularGrid> preprocess_all(const std::vector<RawEpisode>& episodes,
                                        const std::vector<ChannelSpec>& specs, int threads) {
  std::vector<RegularGrid> out(episodes.size());
  parallel_for(static_cast<int>(episodes.size()), threads,
               [&](int i) { out[i] = preprocess(episodes[i], specs); });
  return out;
}

}  // namespace pheno::kernels
