#include <doctest.h>

#include "fixtures.hpp"
#include "pheno/dense.hpp"
#include "pheno/kernels.hpp"
#include "pheno/lstm.hpp"
#include "pheno/params.hpp"
#include "pheno/synth.hpp"

using namespace pheno;

namespace {

struct Batch {
  std::vector<SequenceExample> data;
  std::vector<kernels::SequenceItem> items;
};

Batch make_batch(Rng& rng, int n, int outputs, double dropout) {
  Batch b;
  for (int i = 0; i < n; ++i) {
    const int T = static_cast<int>(rng.uniform_int(1, 30));
    auto one = fixture::sequence_batch(rng, 1, 5, T, outputs);
    b.data.push_back(std::move(one.front()));
  }
  for (int i = 0; i < n; ++i)
    b.items.push_back({&b.data[i].x, &b.data[i].y,
                       DropoutPlan{dropout, dropout > 0.0, static_cast<std::uint64_t>(1000 + i)}});
  return b;
}

}  // namespace

TEST_CASE("LSTM batch gradient is bitwise identical across thread counts") {
  Rng rng(4);
  const ObjectiveConfig obj{ObjectiveMode::target_replication, 0.5, 3, 2};
  const LstmParams p = init_lstm_params({5, {8, 8}, 5}, rng);
  const Batch b = make_batch(rng, 13, 5, 0.5);
  LstmGradients g1 = zeros_like(p);
  const double l1 = kernels::lstm_batch_gradient(p, b.items, obj, g1, 1);
  for (int threads : {2, 3, 8}) {
    LstmGradients gt = zeros_like(p);
    const double lt = kernels::lstm_batch_gradient(p, b.items, obj, gt, threads);
    CHECK(lt == l1);
    CHECK(bitwise_equal(gt, g1));
  }
}

TEST_CASE("LSTM batch gradient agrees with the serial reference") {
  Rng rng(6);
  for (auto mode : {ObjectiveMode::final_only, ObjectiveMode::target_replication,
                    ObjectiveMode::linear_gain}) {
    const ObjectiveConfig obj{mode, 0.5, 2, 1};
    const LstmParams p = init_lstm_params({5, {6, 4}, 3}, rng);
    const Batch b = make_batch(rng, 7, 3, 0.3);
    LstmGradients fast = zeros_like(p), slow = zeros_like(p);
    const double lf = kernels::lstm_batch_gradient(p, b.items, obj, fast, 2);
    const double ls = kernels::lstm_batch_gradient_serial(p, b.items, obj, slow);
    CHECK(lf == doctest::Approx(ls).epsilon(1e-13));
    LstmGradients diff = fast;
    add_scaled(diff, -1.0, slow);
    CHECK(std::sqrt(squared_norm(diff)) <= 1e-12 * std::max(1.0, std::sqrt(squared_norm(slow))));
  }
}

TEST_CASE("final-step prediction kernels") {
  Rng rng(8);
  const LstmParams p = init_lstm_params({5, {6}, 4}, rng);
  const Batch b = make_batch(rng, 9, 4, 0.0);
  std::vector<const Eigen::MatrixXd*> xs;
  for (const auto& d : b.data) xs.push_back(&d.x);
  const Eigen::MatrixXd one = kernels::lstm_predict_final(p, xs, 1);
  CHECK(one == kernels::lstm_predict_final(p, xs, 4));
  CHECK((one - kernels::lstm_predict_final_serial(p, xs)).cwiseAbs().maxCoeff() <= 1e-13);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Eigen::MatrixXd steps = predict_sequence(*xs[i], p);
    CHECK(one.row(static_cast<Eigen::Index>(i)).transpose() == steps.col(steps.cols() - 1));
  }
}

TEST_CASE("MLP batch kernel matches per-example forward") {
  Rng rng(10);
  const MlpParams p = init_mlp_params(7, {9, 5}, 3, rng);
  const auto x = fixture::uniform_matrix(rng, 7, 6);
  const auto y = fixture::binary_matrix(rng, 3, 6);
  MlpParams g = zeros_like(p);
  const double loss = kernels::mlp_batch_gradient(p, x, y, {}, g);
  CHECK(loss == doctest::Approx(kernels::mlp_batch_loss(p, x, y)).epsilon(1e-14));
  double manual = 0.0;
  MlpParams sum = zeros_like(p);
  for (int n = 0; n < 6; ++n) {
    MlpParams gn = zeros_like(p);
    manual += kernels::mlp_batch_gradient(p, x.col(n), y.col(n), {}, gn);
    add_scaled(sum, 1.0 / 6.0, gn);
  }
  CHECK(loss == doctest::Approx(manual / 6.0).epsilon(1e-13));
  add_scaled(sum, -1.0, g);
  CHECK(std::sqrt(squared_norm(sum)) <= 1e-13);
}

TEST_CASE("preprocess_all is thread-count independent") {
  SynthConfig cfg;
  cfg.episode_count = 20;
  cfg.label_count = 4;
  const auto eps = generate_synthetic(cfg, 2);
  const auto a = kernels::preprocess_all(eps, cfg.channels, 1);
  const auto b = kernels::preprocess_all(eps, cfg.channels, 3);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].values == b[i].values);
    CHECK(a[i].values == preprocess(eps[i], cfg.channels).values);
  }
}
