#pragma once

// Dense layers and the feedforward multilabel network used as a baseline.
// Batches are column-per-example: an input is in_dim x N.

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pheno/lstm.hpp"
#include "pheno/rng.hpp"

namespace pheno {

enum class Activation { identity, relu, sigmoid };

struct DenseLayer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;
  Activation activation = Activation::identity;
};

struct DenseCache {
  Eigen::MatrixXd input;
  Eigen::MatrixXd pre;  // w * input + b
  Eigen::MatrixXd out;
};

Eigen::MatrixXd dense_forward(const DenseLayer& layer, const Eigen::MatrixXd& x,
                              DenseCache* cache = nullptr);

// Accumulates parameter gradients into `grad` and returns d loss / d input.
Eigen::MatrixXd dense_backward(const DenseLayer& layer, const DenseCache& cache,
                               const Eigen::MatrixXd& d_out, DenseLayer& grad);

struct MlpParams {
  std::vector<DenseLayer> layers;  // hidden ReLU layers, then a sigmoid head

  int input_dim() const { return static_cast<int>(layers.front().w.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().w.rows()); }
  std::vector<int> hidden() const;

  template <class F>
  void visit(F&& f) {
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const std::string prefix = "layers." + std::to_string(k) + ".";
      f(prefix + "w", std::span<double>(layers[k].w.data(), layers[k].w.size()), false);
      f(prefix + "b", std::span<double>(layers[k].b.data(), layers[k].b.size()), true);
    }
  }
  template <class F>
  void visit(F&& f) const {
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const std::string prefix = "layers." + std::to_string(k) + ".";
      f(prefix + "w", std::span<const double>(layers[k].w.data(), layers[k].w.size()), false);
      f(prefix + "b", std::span<const double>(layers[k].b.data(), layers[k].b.size()), true);
    }
  }
};

MlpParams zero_mlp_params(int input_dim, const std::vector<int>& hidden, int output_dim);

// Weights uniform on +-1/sqrt(fan_in), biases zero.
MlpParams init_mlp_params(int input_dim, const std::vector<int>& hidden, int output_dim, Rng& rng);

struct MlpTape {
  std::vector<DenseCache> caches;
  std::vector<Eigen::MatrixXd> masks;  // per hidden layer; empty without dropout
  Eigen::MatrixXd yhat;                // output_dim x N
};

// Dropout (inverted) applies to hidden activations only, never to the input.
MlpTape mlp_forward(const MlpParams& params, const Eigen::MatrixXd& x,
                    const DropoutPlan& dropout = {});

Eigen::MatrixXd mlp_predict(const MlpParams& params, const Eigen::MatrixXd& x);

void mlp_backward(const MlpParams& params, const MlpTape& tape, const Eigen::MatrixXd& d_yhat,
                  MlpParams& grads);

}  // namespace pheno
