#include "pheno/dense.hpp"

#include <cmath>

#include "pheno/error.hpp"

namespace pheno {

Eigen::MatrixXd dense_forward(const DenseLayer& layer, const Eigen::MatrixXd& x,
                              DenseCache* cache) {
  if (x.rows() != layer.w.cols())
    throw InputError("dense_forward: input width " + std::to_string(x.rows()) +
                     " does not match layer fan-in " + std::to_string(layer.w.cols()));
  Eigen::MatrixXd pre = layer.w * x;
  pre.colwise() += layer.b;
  Eigen::MatrixXd out;
  switch (layer.activation) {
    case Activation::identity: out = pre; break;
    case Activation::relu: out = pre.cwiseMax(0.0); break;
    case Activation::sigmoid: out = (1.0 + (-pre.array()).exp()).inverse().matrix(); break;
  }
  if (cache != nullptr) {
    cache->input = x;
    cache->pre = std::move(pre);
    cache->out = out;
  }
  return out;
}

Eigen::MatrixXd dense_backward(const DenseLayer& layer, const DenseCache& cache,
                               const Eigen::MatrixXd& d_out, DenseLayer& grad) {
  Eigen::MatrixXd d_pre;
  switch (layer.activation) {
    case Activation::identity: d_pre = d_out; break;
    case Activation::relu:
      d_pre = (cache.pre.array() > 0.0).select(d_out, 0.0);
      break;
    case Activation::sigmoid:
      d_pre = (d_out.array() * cache.out.array() * (1.0 - cache.out.array())).matrix();
      break;
  }
  grad.w.noalias() += d_pre * cache.input.transpose();
  grad.b += d_pre.rowwise().sum();
  return layer.w.transpose() * d_pre;
}

std::vector<int> MlpParams::hidden() const {
  std::vector<int> h;
  for (std::size_t k = 0; k + 1 < layers.size(); ++k) h.push_back(static_cast<int>(layers[k].b.size()));
  return h;
}

MlpParams zero_mlp_params(int input_dim, const std::vector<int>& hidden, int output_dim) {
  if (input_dim < 1 || output_dim < 1) throw ConfigError("MLP dimensions must be >= 1");
  MlpParams p;
  int fan_in = input_dim;
  for (int h : hidden) {
    if (h < 1) throw ConfigError("MLP hidden sizes must be >= 1");
    p.layers.push_back({Eigen::MatrixXd::Zero(h, fan_in), Eigen::VectorXd::Zero(h), Activation::relu});
    fan_in = h;
  }
  p.layers.push_back(
      {Eigen::MatrixXd::Zero(output_dim, fan_in), Eigen::VectorXd::Zero(output_dim), Activation::sigmoid});
  return p;
}

MlpParams init_mlp_params(int input_dim, const std::vector<int>& hidden, int output_dim, Rng& rng) {
  MlpParams p = zero_mlp_params(input_dim, hidden, output_dim);
  for (auto& layer : p.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.w.cols()));
    for (Eigen::Index c = 0; c < layer.w.cols(); ++c)
      for (Eigen::Index r = 0; r < layer.w.rows(); ++r) layer.w(r, c) = rng.uniform(-bound, bound);
  }
  return p;
}

MlpTape mlp_forward(const MlpParams& params, const Eigen::MatrixXd& x, const DropoutPlan& dropout) {
  validate_dropout(dropout.p);
  MlpTape tape;
  tape.caches.resize(params.layers.size());
  Eigen::MatrixXd a = x;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    a = dense_forward(params.layers[k], a, &tape.caches[k]);
    if (k + 1 < params.layers.size()) {
      if (dropout.active()) {
        tape.masks.push_back(
            dropout_mask(dropout, static_cast<int>(k), static_cast<int>(a.rows()), static_cast<int>(a.cols())));
        a = a.cwiseProduct(tape.masks.back());
      } else {
        tape.masks.emplace_back();
      }
    }
  }
  if (!a.allFinite()) throw NumericError("non-finite MLP output");
  tape.yhat = std::move(a);
  return tape;
}

Eigen::MatrixXd mlp_predict(const MlpParams& params, const Eigen::MatrixXd& x) {
  return mlp_forward(params, x).yhat;
}

void mlp_backward(const MlpParams& params, const MlpTape& tape, const Eigen::MatrixXd& d_yhat,
                  MlpParams& grads) {
  if (d_yhat.rows() != tape.yhat.rows() || d_yhat.cols() != tape.yhat.cols())
    throw InputError("mlp_backward: loss gradient shape does not match the tape");
  Eigen::MatrixXd d = d_yhat;
  for (int k = static_cast<int>(params.layers.size()) - 1; k >= 0; --k) {
    if (k + 1 < static_cast<int>(params.layers.size()) && tape.masks[k].size() > 0)
      d.array() *= tape.masks[k].array();
    d = dense_backward(params.layers[k], tape.caches[k], d, grads.layers[k]);
  }
}

}  // namespace pheno
