#pragma once

// Stacked LSTM (forget gates, no peepholes) with a sigmoid multilabel output
// head, non-recurrent dropout, and exact backpropagation through time.
//
// Gate blocks are stacked in the order g (input node), i, f, o inside each
// layer's matrices, so for a layer with H cells rows [0,H) belong to g,
// [H,2H) to i, [2H,3H) to f and [3H,4H) to o:
//
//   g = tanh(Wgx x + Wgh h' + bg)     i = sigma(Wix x + Wih h' + bi)
//   f = sigma(Wfx x + Wfh h' + bf)    o = sigma(Wox x + Woh h' + bo)
//   s = g * i + s' * f                h = tanh(s) * o
//
// Sequences are stored column-per-step: an input is input_dim x T and the
// per-step probabilities are output_dim x T.

#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "pheno/rng.hpp"

namespace pheno {

enum class Gate : int { input_node = 0, input = 1, forget = 2, output = 3 };

struct LstmLayerParams {
  Eigen::MatrixXd w_x;  // 4H x fan_in
  Eigen::MatrixXd w_h;  // 4H x H
  Eigen::VectorXd b;    // 4H

  int cells() const { return static_cast<int>(b.size() / 4); }
  int fan_in() const { return static_cast<int>(w_x.cols()); }

  auto gate_x(Gate g) { return w_x.middleRows(static_cast<int>(g) * cells(), cells()); }
  auto gate_h(Gate g) { return w_h.middleRows(static_cast<int>(g) * cells(), cells()); }
  auto gate_b(Gate g) { return b.segment(static_cast<int>(g) * cells(), cells()); }
};

struct LstmArch {
  int input_dim = 13;
  std::vector<int> cells;  // per layer, bottom first
  int output_dim = 1;
};

void validate_arch(const LstmArch& arch);

struct LstmParams {
  std::vector<LstmLayerParams> layers;
  Eigen::MatrixXd w_out;  // output_dim x top cells
  Eigen::VectorXd b_out;

  LstmArch arch() const;
  int input_dim() const { return layers.front().fan_in(); }
  int output_dim() const { return static_cast<int>(b_out.size()); }

  template <class F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <class F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

 private:
  template <class Self, class F>
  static void visit_impl(Self& self, F& f) {
    for (std::size_t l = 0; l < self.layers.size(); ++l) {
      auto& layer = self.layers[l];
      const std::string prefix = "layers." + std::to_string(l) + ".";
      f(prefix + "w_x", span_of(layer.w_x), false);
      f(prefix + "w_h", span_of(layer.w_h), false);
      f(prefix + "b", span_of(layer.b), true);
    }
    f(std::string("output.w"), span_of(self.w_out), false);
    f(std::string("output.b"), span_of(self.b_out), true);
  }
  template <class M>
  static auto span_of(M& m) {
    using T = std::remove_pointer_t<decltype(m.data())>;
    return std::span<T>(m.data(), static_cast<std::size_t>(m.size()));
  }
};

// Gradients share the parameter layout.
using LstmGradients = LstmParams;

LstmParams zero_lstm_params(const LstmArch& arch);

// Every matrix uniform on +-1/sqrt(columns); forget-gate bias 1, other biases 0.
LstmParams init_lstm_params(const LstmArch& arch, Rng& rng);

// Hidden and internal state for every layer at one step.
struct CellState {
  std::vector<Eigen::VectorXd> h;
  std::vector<Eigen::VectorXd> s;

  static CellState zeros(const LstmArch& arch);
};

struct CellStep {
  Eigen::VectorXd g, i, f, o;
  Eigen::VectorXd s, tanh_s, h;
};

// One step of one layer. Throws NumericError (tagged with layer and step)
// on a non-finite state.
CellStep lstm_cell_forward(const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& h_prev,
                           const Eigen::Ref<const Eigen::VectorXd>& s_prev,
                           const LstmLayerParams& params, int layer = 0, int step = 0);

// Inverted dropout on the outputs of every LSTM layer (before they feed the
// next layer or the output head). Masks are drawn per layer and per step from
// a stream keyed by `key`; the recurrent path is never dropped.
struct DropoutPlan {
  double p = 0.0;
  bool training = false;
  std::uint64_t key = 0;

  bool active() const { return training && p > 0.0; }
};

void validate_dropout(double p);

// cells x steps matrix of 0 and 1/(1-p) entries.
Eigen::MatrixXd dropout_mask(const DropoutPlan& plan, int layer, int cells, int steps);

struct LayerTape {
  Eigen::MatrixXd input;   // fan_in x T, after dropout of the layer below
  Eigen::MatrixXd gates;   // 4H x T activated gates (g, i, f, o)
  Eigen::MatrixXd s;       // H x T
  Eigen::MatrixXd tanh_s;  // H x T
  Eigen::MatrixXd h;       // H x T, before dropout
  Eigen::MatrixXd mask;    // H x T, empty when dropout is inactive
};

struct SequenceTape {
  std::vector<LayerTape> layers;
  Eigen::MatrixXd top;   // top-layer outputs after dropout, H x T
  Eigen::MatrixXd yhat;  // output_dim x T
};

SequenceTape forward_sequence(const Eigen::MatrixXd& x, const LstmParams& params,
                              const DropoutPlan& dropout = {});

// Inference-mode per-step probabilities, output_dim x T.
Eigen::MatrixXd predict_sequence(const Eigen::MatrixXd& x, const LstmParams& params);

// Adds the gradient of the objective whose derivative w.r.t. tape.yhat is
// d_yhat to `grads`.
void backward_sequence(const SequenceTape& tape, const LstmParams& params,
                       const Eigen::MatrixXd& d_yhat, LstmGradients& grads);

LstmGradients backward_sequence(const SequenceTape& tape, const LstmParams& params,
                                const Eigen::MatrixXd& d_yhat);

}  // namespace pheno
