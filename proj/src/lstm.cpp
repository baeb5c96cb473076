#include "pheno/lstm.hpp"

#include <cmath>

#include "pheno/error.hpp"

namespace pheno {

namespace {

Eigen::ArrayXd sigmoid(const Eigen::Ref<const Eigen::ArrayXd>& z) {
  return (1.0 + (-z).exp()).inverse();
}

void fill_uniform(Eigen::Ref<Eigen::MatrixXd> m, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-bound, bound);
}

void check_finite(const Eigen::MatrixXd& m, const char* what, int layer) {
  if (m.allFinite()) return;
  for (Eigen::Index t = 0; t < m.cols(); ++t)
    if (!m.col(t).allFinite())
      throw NumericError(std::string("non-finite ") + what + " at layer " + std::to_string(layer) +
                         ", step " + std::to_string(t));
}

}  // namespace

void validate_arch(const LstmArch& arch) {
  if (arch.input_dim < 1) throw ConfigError("LSTM input_dim must be >= 1");
  if (arch.cells.empty()) throw ConfigError("LSTM needs at least one layer");
  for (int c : arch.cells)
    if (c < 1) throw ConfigError("LSTM layer sizes must be >= 1");
  if (arch.output_dim < 1) throw ConfigError("LSTM output_dim must be >= 1");
}

LstmArch LstmParams::arch() const {
  LstmArch a;
  a.input_dim = input_dim();
  for (const auto& l : layers) a.cells.push_back(l.cells());
  a.output_dim = output_dim();
  return a;
}

LstmParams zero_lstm_params(const LstmArch& arch) {
  validate_arch(arch);
  LstmParams p;
  int fan_in = arch.input_dim;
  for (int H : arch.cells) {
    p.layers.push_back({Eigen::MatrixXd::Zero(4 * H, fan_in), Eigen::MatrixXd::Zero(4 * H, H),
                        Eigen::VectorXd::Zero(4 * H)});
    fan_in = H;
  }
  p.w_out = Eigen::MatrixXd::Zero(arch.output_dim, fan_in);
  p.b_out = Eigen::VectorXd::Zero(arch.output_dim);
  return p;
}

LstmParams init_lstm_params(const LstmArch& arch, Rng& rng) {
  LstmParams p = zero_lstm_params(arch);
  for (auto& layer : p.layers) {
    fill_uniform(layer.w_x, rng);
    fill_uniform(layer.w_h, rng);
    layer.gate_b(Gate::forget).setOnes();
  }
  fill_uniform(p.w_out, rng);
  return p;
}

CellState CellState::zeros(const LstmArch& arch) {
  CellState st;
  for (int H : arch.cells) {
    st.h.push_back(Eigen::VectorXd::Zero(H));
    st.s.push_back(Eigen::VectorXd::Zero(H));
  }
  return st;
}

CellStep lstm_cell_forward(const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& h_prev,
                           const Eigen::Ref<const Eigen::VectorXd>& s_prev,
                           const LstmLayerParams& params, int layer, int step) {
  const int H = params.cells();
  if (x.size() != params.fan_in() || h_prev.size() != H || s_prev.size() != H)
    throw InputError("lstm_cell_forward: dimension mismatch at layer " + std::to_string(layer));
  const Eigen::VectorXd z = params.w_x * x + params.w_h * h_prev + params.b;
  CellStep c;
  c.g = z.segment(0, H).array().tanh();
  c.i = sigmoid(z.segment(H, H).array());
  c.f = sigmoid(z.segment(2 * H, H).array());
  c.o = sigmoid(z.segment(3 * H, H).array());
  c.s = c.g.cwiseProduct(c.i) + s_prev.cwiseProduct(c.f);
  c.tanh_s = c.s.array().tanh();
  c.h = c.tanh_s.cwiseProduct(c.o);
  if (!c.s.allFinite() || !c.h.allFinite())
    throw NumericError("non-finite LSTM state at layer " + std::to_string(layer) + ", step " +
                       std::to_string(step));
  return c;
}

void validate_dropout(double p) {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout probability must be in [0, 1)");
}

Eigen::MatrixXd dropout_mask(const DropoutPlan& plan, int layer, int cells, int steps) {
  validate_dropout(plan.p);
  Rng rng(mix64(plan.key ^ mix64(static_cast<std::uint64_t>(layer) + 1)));
  const double keep_scale = 1.0 / (1.0 - plan.p);
  Eigen::MatrixXd m(cells, steps);
  for (int t = 0; t < steps; ++t)
    for (int c = 0; c < cells; ++c) m(c, t) = rng.uniform() < plan.p ? 0.0 : keep_scale;
  return m;
}

SequenceTape forward_sequence(const Eigen::MatrixXd& x, const LstmParams& params,
                              const DropoutPlan& dropout) {
  validate_dropout(dropout.p);
  const auto T = static_cast<int>(x.cols());
  if (T < 1) throw InputError("forward_sequence: empty sequence");
  if (x.rows() != params.input_dim())
    throw InputError("forward_sequence: input has " + std::to_string(x.rows()) +
                     " channels, model expects " + std::to_string(params.input_dim()));
  SequenceTape tape;
  tape.layers.resize(params.layers.size());
  const Eigen::MatrixXd* below = &x;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& p = params.layers[l];
    auto& lt = tape.layers[l];
    const int H = p.cells();
    lt.input = *below;
    // Input projections for every step at once; only the recurrent term is sequential.
    lt.gates.noalias() = p.w_x * lt.input;
    lt.gates.colwise() += p.b;
    lt.s.resize(H, T);
    lt.tanh_s.resize(H, T);
    lt.h.resize(H, T);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(H);
    for (int t = 0; t < T; ++t) {
      auto z = lt.gates.col(t);
      z.noalias() += p.w_h * h;
      z.segment(0, H) = z.segment(0, H).array().tanh();
      z.segment(H, 3 * H) = sigmoid(z.segment(H, 3 * H).array());
      s = z.segment(0, H).cwiseProduct(z.segment(H, H)) + s.cwiseProduct(z.segment(2 * H, H));
      lt.s.col(t) = s;
      lt.tanh_s.col(t) = s.array().tanh();
      h = lt.tanh_s.col(t).cwiseProduct(z.segment(3 * H, H));
      lt.h.col(t) = h;
    }
    check_finite(lt.h, "LSTM state", static_cast<int>(l));
    if (dropout.active()) {
      lt.mask = dropout_mask(dropout, static_cast<int>(l), H, T);
      if (l + 1 < params.layers.size()) {
        tape.layers[l + 1].input = lt.h.cwiseProduct(lt.mask);
        below = &tape.layers[l + 1].input;
      } else {
        tape.top = lt.h.cwiseProduct(lt.mask);
      }
    } else {
      if (l + 1 < params.layers.size())
        below = &lt.h;
      else
        tape.top = lt.h;
    }
  }
  Eigen::MatrixXd z = params.w_out * tape.top;
  z.colwise() += params.b_out;
  tape.yhat = (1.0 + (-z.array()).exp()).inverse().matrix();
  check_finite(tape.yhat, "output", static_cast<int>(params.layers.size()));
  return tape;
}

Eigen::MatrixXd predict_sequence(const Eigen::MatrixXd& x, const LstmParams& params) {
  return forward_sequence(x, params, DropoutPlan{}).yhat;
}

void backward_sequence(const SequenceTape& tape, const LstmParams& params,
                       const Eigen::MatrixXd& d_yhat, LstmGradients& grads) {
  if (d_yhat.rows() != tape.yhat.rows() || d_yhat.cols() != tape.yhat.cols())
    throw InputError("backward_sequence: loss gradient shape does not match the tape");
  if (tape.layers.size() != params.layers.size() || grads.layers.size() != params.layers.size())
    throw InputError("backward_sequence: layer count mismatch");
  const auto T = static_cast<int>(tape.yhat.cols());

  const Eigen::MatrixXd dz_out =
      (d_yhat.array() * tape.yhat.array() * (1.0 - tape.yhat.array())).matrix();
  grads.w_out.noalias() += dz_out * tape.top.transpose();
  grads.b_out += dz_out.rowwise().sum();
  Eigen::MatrixXd d_above = params.w_out.transpose() * dz_out;  // w.r.t. dropped outputs

  for (int l = static_cast<int>(params.layers.size()) - 1; l >= 0; --l) {
    const auto& p = params.layers[l];
    const auto& lt = tape.layers[l];
    auto& g = grads.layers[l];
    const int H = p.cells();
    if (lt.mask.size() > 0) d_above.array() *= lt.mask.array();

    Eigen::MatrixXd dz(4 * H, T);
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd ds_next = Eigen::VectorXd::Zero(H);
    for (int t = T - 1; t >= 0; --t) {
      const auto gate = lt.gates.col(t);
      const auto gg = gate.segment(0, H).array();
      const auto gi = gate.segment(H, H).array();
      const auto gf = gate.segment(2 * H, H).array();
      const auto go = gate.segment(3 * H, H).array();
      const auto ts = lt.tanh_s.col(t).array();
      const Eigen::ArrayXd dh = d_above.col(t).array() + dh_next.array();
      const Eigen::ArrayXd ds = dh * go * (1.0 - ts.square()) + ds_next.array();
      auto col = dz.col(t);
      col.segment(0, H) = (ds * gi * (1.0 - gg.square())).matrix();
      col.segment(H, H) = (ds * gg * gi * (1.0 - gi)).matrix();
      if (t > 0)
        col.segment(2 * H, H) = (ds * lt.s.col(t - 1).array() * gf * (1.0 - gf)).matrix();
      else
        col.segment(2 * H, H).setZero();
      col.segment(3 * H, H) = (dh * ts * go * (1.0 - go)).matrix();
      ds_next = (ds * gf).matrix();
      dh_next.noalias() = p.w_h.transpose() * col;
    }
    g.w_x.noalias() += dz * lt.input.transpose();
    if (T > 1) g.w_h.noalias() += dz.rightCols(T - 1) * lt.h.leftCols(T - 1).transpose();
    g.b += dz.rowwise().sum();
    if (l > 0) d_above.noalias() = p.w_x.transpose() * dz;
  }
}

LstmGradients backward_sequence(const SequenceTape& tape, const LstmParams& params,
                                const Eigen::MatrixXd& d_yhat) {
  LstmGradients grads = zero_lstm_params(params.arch());
  backward_sequence(tape, params, d_yhat, grads);
  return grads;
}

}  // namespace pheno
