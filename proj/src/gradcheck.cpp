#include "pheno/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "pheno/kernels.hpp"
#include "pheno/optim.hpp"

namespace pheno {

namespace {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <class S>
S sigmoid(S z) {
  return S(1) / (S(1) + std::exp(-z));
}

template <class S>
S mean_log_loss(const Vec<S>& p, const Eigen::VectorXd& y) {
  const S lo = S(kProbabilityEpsilon), hi = S(1) - S(kProbabilityEpsilon);
  S total = 0;
  for (Eigen::Index l = 0; l < p.size(); ++l) {
    const S q = std::clamp(p(l), lo, hi);
    total -= S(y(l)) * std::log(q) + (S(1) - S(y(l))) * std::log(S(1) - q);
  }
  return total / S(p.size());
}

template <class S>
S penalty(const std::vector<Mat<S>>& weights, double lambda) {
  S acc = 0;
  for (const auto& w : weights) acc += w.squaredNorm();
  return S(0.5) * S(lambda) * acc;
}

template <class S>
S lstm_objective(const LstmParams& params, const std::vector<SequenceExample>& batch,
                 const ObjectiveConfig& cfg, double weight_decay) {
  std::vector<Mat<S>> wx, wh, weights;
  std::vector<Vec<S>> b;
  for (const auto& l : params.layers) {
    wx.push_back(l.w_x.cast<S>());
    wh.push_back(l.w_h.cast<S>());
    b.push_back(l.b.cast<S>());
    weights.push_back(wx.back());
    weights.push_back(wh.back());
  }
  const Mat<S> w_out = params.w_out.cast<S>();
  const Vec<S> b_out = params.b_out.cast<S>();
  weights.push_back(w_out);

  S total = 0;
  for (const auto& ex : batch) {
    const int T = static_cast<int>(ex.x.cols());
    const Eigen::VectorXd w = step_weights(T, cfg);
    std::vector<Vec<S>> h, s;
    for (const auto& l : params.layers) {
      h.push_back(Vec<S>::Zero(l.cells()));
      s.push_back(Vec<S>::Zero(l.cells()));
    }
    S seq = 0;
    for (int t = 0; t < T; ++t) {
      Vec<S> in = ex.x.col(t).cast<S>();
      for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const int H = params.layers[l].cells();
        const Vec<S> z = wx[l] * in + wh[l] * h[l] + b[l];
        for (int c = 0; c < H; ++c) {
          const S g = std::tanh(z(c));
          const S i = sigmoid(z(H + c));
          const S f = sigmoid(z(2 * H + c));
          const S o = sigmoid(z(3 * H + c));
          s[l](c) = g * i + s[l](c) * f;
          h[l](c) = std::tanh(s[l](c)) * o;
        }
        in = h[l];
      }
      if (w(t) == 0.0) continue;
      Vec<S> p = w_out * in + b_out;
      for (Eigen::Index k = 0; k < p.size(); ++k) p(k) = sigmoid(p(k));
      seq += S(w(t)) * mean_log_loss<S>(p, ex.y);
    }
    total += seq;
  }
  return total / S(batch.size()) + penalty<S>(weights, weight_decay);
}

template <class S>
S mlp_objective(const MlpParams& params, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                double weight_decay) {
  std::vector<Mat<S>> weights;
  Mat<S> a = x.cast<S>();
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const auto& layer = params.layers[k];
    weights.push_back(layer.w.cast<S>());
    Mat<S> z = weights.back() * a;
    z.colwise() += layer.b.cast<S>();
    const bool head = k + 1 == params.layers.size();
    a = head ? z.unaryExpr([](S v) { return sigmoid(v); }).eval()
             : z.unaryExpr([](S v) { return std::max(v, S(0)); }).eval();
  }
  S total = 0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) total += mean_log_loss<S>(a.col(c), y.col(c));
  return total / S(a.cols()) + penalty<S>(weights, weight_decay);
}

}  // namespace

GradCheckResult lstm_grad_check(const LstmParams& params, const std::vector<SequenceExample>& batch,
                                const ObjectiveConfig& objective, double weight_decay,
                                const GradCheckOptions& opt) {
  if (batch.empty()) throw InputError("grad_check: empty batch");
  std::vector<kernels::SequenceItem> items;
  for (const auto& ex : batch) items.push_back({&ex.x, &ex.y, DropoutPlan{}});

  LstmGradients analytic = zero_lstm_params(params.arch());
  kernels::lstm_batch_gradient(params, items, objective, analytic, 1);
  add_weight_decay(analytic, params, weight_decay);

  if (opt.extended_objective) {
    auto f = [&](const LstmParams& p) {
      return lstm_objective<long double>(p, batch, objective, weight_decay);
    };
    return grad_check(params, f, analytic, opt);
  }
  auto f = [&](const LstmParams& p) {
    double total = 0.0;
    for (const auto& ex : batch) total += sequence_loss(predict_sequence(ex.x, p), ex.y, objective).value;
    return total / static_cast<double>(batch.size()) + weight_decay_penalty(p, weight_decay);
  };
  return grad_check(params, f, analytic, opt);
}

GradCheckResult mlp_grad_check(const MlpParams& params, const Eigen::MatrixXd& x,
                               const Eigen::MatrixXd& y, double weight_decay,
                               const GradCheckOptions& opt) {
  MlpParams analytic = zeros_like(params);
  kernels::mlp_batch_gradient(params, x, y, DropoutPlan{}, analytic);
  add_weight_decay(analytic, params, weight_decay);
  if (opt.extended_objective) {
    auto f = [&](const MlpParams& p) {
      return mlp_objective<long double>(p, x, y, weight_decay);
    };
    return grad_check(params, f, analytic, opt);
  }
  auto f = [&](const MlpParams& p) {
    return kernels::mlp_batch_loss(p, x, y) + weight_decay_penalty(p, weight_decay);
  };
  return grad_check(params, f, analytic, opt);
}

}  // namespace pheno
