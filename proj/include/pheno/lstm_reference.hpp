#pragma once

// Straightforward step-by-step LSTM forward/backward built on
// lstm_cell_forward. Kept as the serial reference the optimized path in
// lstm.cpp is tested and benchmarked against.

#include "pheno/lstm.hpp"

namespace pheno::reference {

SequenceTape forward_sequence(const Eigen::MatrixXd& x, const LstmParams& params,
                              const DropoutPlan& dropout = {});

void backward_sequence(const SequenceTape& tape, const LstmParams& params,
                       const Eigen::MatrixXd& d_yhat, LstmGradients& grads);

}  // namespace pheno::reference
