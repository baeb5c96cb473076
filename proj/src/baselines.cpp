#include "pheno/baselines.hpp"

#include <cmath>
#include <exception>

#include "pheno/kernels.hpp"
#include "pheno/objectives.hpp"

namespace pheno {

BaseRateModel fit_base_rate(const LabelMatrix& train_labels) {
  if (train_labels.rows() == 0) throw InputError("base rate: empty training set");
  return {train_labels.cast<double>().colwise().mean().transpose()};
}

Eigen::MatrixXd predict_base_rate(const BaseRateModel& model, int n) {
  return model.rates.transpose().replicate(n, 1);
}

namespace {

double logit(double p) {
  p = std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
  return std::log(p / (1.0 - p));
}

Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& z) { return (1.0 + (-z).exp()).inverse(); }

// Largest eigenvalue of [z; 1][z; 1]^T / N by power iteration.
double gram_top_eigenvalue(const Eigen::MatrixXd& z) {
  const double n = static_cast<double>(z.cols());
  Eigen::VectorXd v = Eigen::VectorXd::Ones(z.rows() + 1);
  double lambda = 0.0;
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd proj = z.transpose() * v.head(z.rows()) + Eigen::VectorXd::Constant(z.cols(), v(z.rows()));
    Eigen::VectorXd next(z.rows() + 1);
    next.head(z.rows()) = z * proj / n;
    next(z.rows()) = proj.sum() / n;
    const double norm = next.norm();
    if (norm == 0.0) return 0.0;
    lambda = norm / v.norm();
    v = next / norm;
  }
  return lambda;
}

struct Standardizer {
  Eigen::VectorXd mean, sd;
};

Standardizer standardizer(const Eigen::MatrixXd& x) {
  Standardizer s;
  s.mean = x.rowwise().mean();
  s.sd = ((x.colwise() - s.mean).array().square().rowwise().mean()).sqrt().matrix();
  for (Eigen::Index i = 0; i < s.sd.size(); ++i)
    if (!(s.sd(i) > 1e-12)) s.sd(i) = 1.0;
  return s;
}

LogisticFit fit_label_with_step(const Eigen::MatrixXd& z, const Eigen::VectorXi& y, double lambda,
                                const LogisticConfig& config, double top_eigen) {
  const auto n = static_cast<double>(z.cols());
  const double rate = y.cast<double>().mean();
  LogisticFit fit;
  fit.w = Eigen::VectorXd::Zero(z.rows());
  fit.b = logit(rate);
  if (rate <= 0.0 || rate >= 1.0 || z.rows() == 0) return fit;
  const double step = 1.0 / (0.25 * top_eigen + lambda);
  const Eigen::ArrayXd target = y.cast<double>().array();
  for (; fit.iterations < config.max_iterations; ++fit.iterations) {
    const Eigen::ArrayXd p = sigmoid((z.transpose() * fit.w).array() + fit.b);
    const Eigen::VectorXd resid = (p - target).matrix();
    const Eigen::VectorXd gw = z * resid / n + lambda * fit.w;
    const double gb = resid.sum() / n;
    if (std::sqrt(gw.squaredNorm() + gb * gb) < config.tolerance) break;
    fit.w -= step * gw;
    fit.b -= step * gb;
  }
  return fit;
}

}  // namespace

LogisticFit fit_logistic_label(const Eigen::MatrixXd& z, const Eigen::VectorXi& y, double lambda,
                               const LogisticConfig& config) {
  if (z.cols() != y.size() || z.cols() == 0) throw InputError("logistic: shape mismatch");
  return fit_label_with_step(z, y, lambda, config, gram_top_eigenvalue(z));
}

LogisticModel fit_logistic_fixed(const Eigen::MatrixXd& x, const LabelMatrix& labels, double lambda,
                                 const LogisticConfig& config, int threads) {
  if (x.cols() != labels.rows() || x.cols() == 0)
    throw InputError("logistic: features and labels disagree on the example count");
  if (!(lambda >= 0.0)) throw ConfigError("logistic: lambda must be >= 0");
  const Standardizer s = standardizer(x);
  const Eigen::MatrixXd z = (x.colwise() - s.mean).array().colwise() / s.sd.array();
  const double top = gram_top_eigenvalue(z);
  const auto L = static_cast<int>(labels.cols());
  LogisticModel model;
  model.lambda = lambda;
  model.w.resize(L, x.rows());
  model.b.resize(L);
  std::vector<std::exception_ptr> errors(L);
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
  for (int l = 0; l < L; ++l) {
    try {
      const Eigen::VectorXi y = labels.col(l);
      const LogisticFit fit = fit_label_with_step(z, y, lambda, config, top);
      const Eigen::VectorXd w_raw = fit.w.array() / s.sd.array();
      model.w.row(l) = w_raw.transpose();
      model.b(l) = fit.b - w_raw.dot(s.mean);
    } catch (...) {
      errors[l] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return model;
}

Eigen::MatrixXd predict_logistic(const LogisticModel& model, const Eigen::MatrixXd& x) {
  if (x.rows() != model.w.cols())
    throw InputError("logistic: model expects " + std::to_string(model.w.cols()) +
                     " features, input has " + std::to_string(x.rows()));
  Eigen::MatrixXd z = model.w * x;
  z.colwise() += model.b;
  return (1.0 + (-z.array()).exp()).inverse().matrix().transpose();
}

LogisticModel fit_logistic(const Eigen::MatrixXd& x, const LabelMatrix& labels,
                           const Eigen::MatrixXd& x_val, const LabelMatrix& labels_val,
                           const LogisticConfig& config, int threads) {
  if (config.lambda_grid.empty()) throw ConfigError("logistic: empty lambda grid");
  LogisticModel best;
  double best_auc = -1.0;
  for (double lambda : config.lambda_grid) {
    LogisticModel m = fit_logistic_fixed(x, labels, lambda, config, threads);
    const double auc = micro_auc({predict_logistic(m, x_val), labels_val}).value_or(0.5);
    if (auc > best_auc) {
      best_auc = auc;
      best = std::move(m);
    }
  }
  return best;
}

namespace {

// Maps a network trained on standardized inputs to one that takes raw
// inputs. The map is linear in the first layer's parameters, so it applies
// to velocities as well.
MlpParams fold_standardizer(MlpParams p, const Standardizer& s) {
  auto& first = p.layers.front();
  first.w = first.w * s.sd.cwiseInverse().asDiagonal();
  first.b -= first.w * s.mean;
  return p;
}

}  // namespace

TrainResult<MlpParams> fit_mlp(const Eigen::MatrixXd& x_raw, const LabelMatrix& labels,
                               const Eigen::MatrixXd& x_val_raw, const LabelMatrix& labels_val,
                               const MlpConfig& config,
                               std::function<std::string(int, const MlpParams&,
                                                         const OptimizerState<MlpParams>&)>
                                   on_epoch) {
  if (x_raw.cols() != labels.rows() || x_val_raw.cols() != labels_val.rows())
    throw InputError("MLP: inputs and labels disagree on the example count");
  if (x_raw.rows() != x_val_raw.rows())
    throw InputError("MLP: train and validation input widths differ");
  validate_dropout(config.dropout);
  // Train in standardized coordinates; everything handed out is folded back.
  const Standardizer stdz = standardizer(x_raw);
  const Eigen::MatrixXd x =
      (x_raw.colwise() - stdz.mean).array().colwise() / stdz.sd.array();
  const Eigen::MatrixXd x_val =
      (x_val_raw.colwise() - stdz.mean).array().colwise() / stdz.sd.array();
  const auto L = static_cast<int>(labels.cols());
  Rng init(stream_key(config.train.seed, "init"));
  MlpParams params = init_mlp_params(static_cast<int>(x.rows()), config.hidden, L, init);
  const Eigen::MatrixXd targets = labels.cast<double>().transpose();

  TrainHooks<MlpParams> hooks;
  hooks.batch_gradient = [&](const MlpParams& p, std::span<const int> members, int epoch, int batch,
                             MlpParams& grads) {
    Eigen::MatrixXd xb(x.rows(), static_cast<Eigen::Index>(members.size()));
    Eigen::MatrixXd yb(L, static_cast<Eigen::Index>(members.size()));
    for (std::size_t j = 0; j < members.size(); ++j) {
      xb.col(static_cast<Eigen::Index>(j)) = x.col(members[j]);
      yb.col(static_cast<Eigen::Index>(j)) = targets.col(members[j]);
    }
    const DropoutPlan plan{config.dropout, true,
                           stream_key(config.train.seed, "dropout", static_cast<std::uint64_t>(epoch),
                                      static_cast<std::uint64_t>(batch))};
    return kernels::mlp_batch_gradient(p, xb, yb, plan, grads);
  };
  hooks.predict_train = [&](const MlpParams& p) {
    return PredictionMatrix{mlp_predict(p, x).transpose(), labels};
  };
  hooks.predict_validation = [&](const MlpParams& p) {
    return PredictionMatrix{mlp_predict(p, x_val).transpose(), labels_val};
  };
  if (on_epoch) {
    hooks.on_epoch = [&](int epoch, const MlpParams& p, const OptimizerState<MlpParams>& opt) {
      OptimizerState<MlpParams> raw = opt;
      raw.velocity = fold_standardizer(opt.velocity, stdz);
      return on_epoch(epoch, fold_standardizer(p, stdz), raw);
    };
  }
  auto result = run_training(std::move(params), static_cast<int>(x.cols()), config.train, hooks);
  result.selected = fold_standardizer(std::move(result.selected), stdz);
  result.final_params = fold_standardizer(std::move(result.final_params), stdz);
  result.optimizer.velocity = fold_standardizer(std::move(result.optimizer.velocity), stdz);
  return result;
}

}  // namespace pheno
