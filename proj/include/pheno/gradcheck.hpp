#pragma once

// Central-difference gradient checking over any parameter container.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pheno/dense.hpp"
#include "pheno/error.hpp"
#include "pheno/lstm.hpp"
#include "pheno/objectives.hpp"
#include "pheno/params.hpp"
#include "pheno/rng.hpp"

namespace pheno {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_block;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

inline double relative_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
}

struct GradCheckOptions {
  double eps = 1e-5;
  // 0 checks every coordinate; otherwise at most this many per block,
  // chosen with a fixed-seed shuffle.
  std::size_t max_per_block = 0;
  std::uint64_t seed = 0;
  // Evaluate the objective in long double for the differences. In double,
  // rounding in the loss (~1e-16) puts a ~1e-11 floor under the numeric
  // derivative, which swamps coordinates whose gradient is below ~1e-6.
  bool extended_objective = true;
};

// `objective(params)` returns the scalar loss (double or long double; the
// difference is taken in that type); `analytic` is its claimed gradient at
// `params`.
template <class P, class Objective>
GradCheckResult grad_check(P params, Objective&& objective, const P& analytic,
                           const GradCheckOptions& opt = {}) {
  if (!(opt.eps > 0.0) || !std::isfinite(opt.eps))
    throw InputError("grad_check: eps must be positive and finite");
  GradCheckResult out;
  auto pb = blocks(params);
  const auto ab = blocks(analytic);
  if (pb.size() != ab.size()) throw InputError("grad_check: gradient layout mismatch");
  for (std::size_t k = 0; k < pb.size(); ++k) {
    std::vector<std::size_t> coords(pb[k].data.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (opt.max_per_block > 0 && coords.size() > opt.max_per_block) {
      Rng rng(stream_key(opt.seed, "gradcheck", k));
      rng.shuffle(std::span<std::size_t>(coords));
      coords.resize(opt.max_per_block);
    }
    for (std::size_t i : coords) {
      double& theta = pb[k].data[i];
      const double saved = theta;
      const double plus = saved + opt.eps;
      const double minus = saved - opt.eps;
      theta = plus;
      const auto up = objective(params);
      theta = minus;
      const auto down = objective(params);
      theta = saved;
      // Divide by the step actually taken after rounding theta +- eps.
      using R = decltype(up);
      const double numeric = static_cast<double>((up - down) / (R(plus) - R(minus)));
      const double a = ab[k].data[i];
      const double err = relative_error(a, numeric);
      if (++out.checked == 1 || err > out.max_rel_error)
        out = {err, pb[k].name, i, a, numeric, out.checked};
    }
  }
  return out;
}

struct SequenceExample {
  Eigen::MatrixXd x;  // input_dim x T
  Eigen::VectorXd y;
};

// Mean sequence objective over the examples plus the weight-decay penalty,
// dropout disabled. The numeric side is an independent per-step forward pass.
GradCheckResult lstm_grad_check(const LstmParams& params, const std::vector<SequenceExample>& batch,
                                const ObjectiveConfig& objective, double weight_decay,
                                const GradCheckOptions& opt = {});

// Mean log loss of the MLP over the columns of x plus the weight-decay penalty.
GradCheckResult mlp_grad_check(const MlpParams& params, const Eigen::MatrixXd& x,
                               const Eigen::MatrixXd& y, double weight_decay,
                               const GradCheckOptions& opt = {});

}  // namespace pheno
