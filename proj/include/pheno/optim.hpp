#pragma once

// Gradient-norm scaling, l2 weight decay and SGD with momentum over any
// parameter container (see params.hpp).

#include <cmath>

#include "pheno/error.hpp"
#include "pheno/params.hpp"

namespace pheno {

struct SgdConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-6;  // applied to weights only, never biases
  double clip_norm = 1.0;
};

inline void validate_sgd(const SgdConfig& c) {
  if (!(c.learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
  if (!(c.weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (!(c.clip_norm > 0.0)) throw ConfigError("clip_norm must be > 0");
}

template <class P>
struct OptimizerState {
  P velocity;
  SgdConfig config;

  OptimizerState(const P& params, const SgdConfig& cfg)
      : velocity(zeros_like(params)), config(cfg) {}
};

// Rescales `grads` so their global l2 norm is at most clip_norm. Returns the
// norm before clipping.
template <class P>
double clip_gradients(P& grads, double clip_norm) {
  const double norm = std::sqrt(squared_norm(grads));
  if (norm > clip_norm) scale_in_place(grads, clip_norm / norm);
  return norm;
}

// grads += lambda * params on non-bias blocks.
template <class P>
void add_weight_decay(P& grads, const P& params, double lambda) {
  if (lambda == 0.0) return;
  auto gb = blocks(grads);
  const auto pb = blocks(params);
  for (std::size_t k = 0; k < gb.size(); ++k) {
    if (pb[k].is_bias) continue;
    for (std::size_t i = 0; i < gb[k].data.size(); ++i) gb[k].data[i] += lambda * pb[k].data[i];
  }
}

// (lambda / 2) * sum of squared non-bias weights; the objective whose
// gradient add_weight_decay adds.
template <class P>
double weight_decay_penalty(const P& params, double lambda) {
  double acc = 0.0;
  params.visit([&](const std::string&, std::span<const double> d, bool bias) {
    if (bias) return;
    for (double v : d) acc += v * v;
  });
  return 0.5 * lambda * acc;
}

// g_eff = g + lambda * theta (weights only); v = mu * v - lr * g_eff; theta += v.
template <class P>
void sgd_momentum_step(P& params, const P& grads, OptimizerState<P>& opt) {
  const auto& c = opt.config;
  auto pb = blocks(params);
  const auto gb = blocks(grads);
  auto vb = blocks(opt.velocity);
  for (std::size_t k = 0; k < pb.size(); ++k) {
    const double lambda = pb[k].is_bias ? 0.0 : c.weight_decay;
    for (std::size_t i = 0; i < pb[k].data.size(); ++i) {
      const double g = gb[k].data[i] + lambda * pb[k].data[i];
      vb[k].data[i] = c.momentum * vb[k].data[i] - c.learning_rate * g;
      pb[k].data[i] += vb[k].data[i];
    }
  }
}

}  // namespace pheno
