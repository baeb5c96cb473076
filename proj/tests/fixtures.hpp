#pragma once

// Small random inputs shared by several test files.

#include <vector>

#include <Eigen/Dense>

#include "pheno/gradcheck.hpp"
#include "pheno/rng.hpp"

namespace fixture {

inline std::vector<pheno::SequenceExample> sequence_batch(pheno::Rng& rng, int count, int input_dim,
                                                          int steps, int outputs) {
  std::vector<pheno::SequenceExample> batch;
  for (int n = 0; n < count; ++n) {
    pheno::SequenceExample ex{Eigen::MatrixXd(input_dim, steps), Eigen::VectorXd(outputs)};
    for (Eigen::Index i = 0; i < ex.x.size(); ++i) ex.x.data()[i] = rng.uniform();
    for (int l = 0; l < outputs; ++l) ex.y[l] = rng.bernoulli(0.4) ? 1.0 : 0.0;
    batch.push_back(std::move(ex));
  }
  return batch;
}

inline Eigen::MatrixXd uniform_matrix(pheno::Rng& rng, int rows, int cols, double lo = 0.0,
                                      double hi = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

inline Eigen::MatrixXd binary_matrix(pheno::Rng& rng, int rows, int cols, double p = 0.4) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.bernoulli(p) ? 1.0 : 0.0;
  return m;
}

}  // namespace fixture
