#include "pheno/lstm_reference.hpp"

#include "pheno/error.hpp"

namespace pheno::reference {

SequenceTape forward_sequence(const Eigen::MatrixXd& x, const LstmParams& params,
                              const DropoutPlan& dropout) {
  validate_dropout(dropout.p);
  const auto T = static_cast<int>(x.cols());
  if (T < 1) throw InputError("forward_sequence: empty sequence");
  SequenceTape tape;
  tape.layers.resize(params.layers.size());
  Eigen::MatrixXd below = x;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& p = params.layers[l];
    auto& lt = tape.layers[l];
    const int H = p.cells();
    lt.input = below;
    lt.gates.resize(4 * H, T);
    lt.s.resize(H, T);
    lt.tanh_s.resize(H, T);
    lt.h.resize(H, T);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(H);
    for (int t = 0; t < T; ++t) {
      const CellStep c = lstm_cell_forward(lt.input.col(t), h, s, p, static_cast<int>(l), t);
      lt.gates.col(t) << c.g, c.i, c.f, c.o;
      lt.s.col(t) = c.s;
      lt.tanh_s.col(t) = c.tanh_s;
      lt.h.col(t) = c.h;
      h = c.h;
      s = c.s;
    }
    below = lt.h;
    if (dropout.active()) {
      lt.mask = dropout_mask(dropout, static_cast<int>(l), H, T);
      below = below.cwiseProduct(lt.mask);
    }
  }
  tape.top = below;
  tape.yhat.resize(params.output_dim(), T);
  for (int t = 0; t < T; ++t) {
    const Eigen::VectorXd z = params.w_out * tape.top.col(t) + params.b_out;
    for (Eigen::Index k = 0; k < z.size(); ++k) tape.yhat(k, t) = 1.0 / (1.0 + std::exp(-z[k]));
  }
  return tape;
}

void backward_sequence(const SequenceTape& tape, const LstmParams& params,
                       const Eigen::MatrixXd& d_yhat, LstmGradients& grads) {
  const auto T = static_cast<int>(tape.yhat.cols());
  const auto n_layers = static_cast<int>(params.layers.size());
  // d_in[l] holds dLoss/d(input of layer l+1 or the head) per step.
  Eigen::MatrixXd d_in = Eigen::MatrixXd::Zero(tape.top.rows(), T);
  for (int t = 0; t < T; ++t) {
    Eigen::VectorXd dz(d_yhat.rows());
    for (Eigen::Index k = 0; k < dz.size(); ++k) {
      const double y = tape.yhat(k, t);
      dz[k] = d_yhat(k, t) * y * (1.0 - y);
    }
    grads.w_out += dz * tape.top.col(t).transpose();
    grads.b_out += dz;
    d_in.col(t) = params.w_out.transpose() * dz;
  }
  for (int l = n_layers - 1; l >= 0; --l) {
    const auto& p = params.layers[l];
    const auto& lt = tape.layers[l];
    auto& g = grads.layers[l];
    const int H = p.cells();
    Eigen::MatrixXd d_below = Eigen::MatrixXd::Zero(p.fan_in(), T);
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd ds_next = Eigen::VectorXd::Zero(H);
    for (int t = T - 1; t >= 0; --t) {
      Eigen::VectorXd dh = d_in.col(t);
      if (lt.mask.size() > 0) dh = dh.cwiseProduct(lt.mask.col(t));
      dh += dh_next;
      const Eigen::VectorXd gg = lt.gates.col(t).segment(0, H);
      const Eigen::VectorXd gi = lt.gates.col(t).segment(H, H);
      const Eigen::VectorXd gf = lt.gates.col(t).segment(2 * H, H);
      const Eigen::VectorXd go = lt.gates.col(t).segment(3 * H, H);
      const Eigen::VectorXd s_prev = t > 0 ? Eigen::VectorXd(lt.s.col(t - 1)) : Eigen::VectorXd::Zero(H);
      const Eigen::VectorXd h_prev = t > 0 ? Eigen::VectorXd(lt.h.col(t - 1)) : Eigen::VectorXd::Zero(H);
      Eigen::VectorXd ds(H), dz(4 * H);
      for (int c = 0; c < H; ++c) {
        const double ts = lt.tanh_s(c, t);
        ds[c] = dh[c] * go[c] * (1.0 - ts * ts) + ds_next[c];
        dz[c] = ds[c] * gi[c] * (1.0 - gg[c] * gg[c]);
        dz[H + c] = ds[c] * gg[c] * gi[c] * (1.0 - gi[c]);
        dz[2 * H + c] = ds[c] * s_prev[c] * gf[c] * (1.0 - gf[c]);
        dz[3 * H + c] = dh[c] * ts * go[c] * (1.0 - go[c]);
        ds_next[c] = ds[c] * gf[c];
      }
      g.w_x += dz * lt.input.col(t).transpose();
      g.w_h += dz * h_prev.transpose();
      g.b += dz;
      dh_next = p.w_h.transpose() * dz;
      d_below.col(t) = p.w_x.transpose() * dz;
    }
    d_in = d_below;
  }
}

}  // namespace pheno::reference
