#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "pheno/dense.hpp"
#include "pheno/gradcheck.hpp"
#include "pheno/lstm.hpp"
#include "pheno/objectives.hpp"

using namespace pheno;

TEST_CASE("quadratic objective") {
  FlatParams theta{{3.0}};
  const FlatParams grad{{6.0}};
  auto f = [](const FlatParams& p) { return p.values[0] * p.values[0]; };
  const auto r = grad_check(theta, f, grad);
  CHECK(std::abs(r.numeric - 6.0) < 1e-9);
  CHECK(r.max_rel_error < 1e-9);
  CHECK(r.checked == 1);
}

TEST_CASE("a wrong gradient is caught") {
  FlatParams theta{{1.0, 2.0}};
  const FlatParams grad{{2.0, 4.5}};
  auto f = [](const FlatParams& p) { return p.values[0] * p.values[0] + p.values[1] * p.values[1]; };
  const auto r = grad_check(theta, f, grad);
  CHECK(r.max_rel_error > 0.1);
  CHECK(r.worst_index == 1);
}

TEST_CASE("degenerate steps are rejected") {
  FlatParams theta{{1.0}};
  auto f = [](const FlatParams& p) { return p.values[0]; };
  GradCheckOptions opt;
  opt.eps = 0.0;
  CHECK_THROWS_AS(grad_check(theta, f, theta, opt), InputError);
  opt.eps = -1e-5;
  CHECK_THROWS_AS(grad_check(theta, f, theta, opt), InputError);
}

TEST_CASE("LSTM gradient is exact for every objective configuration") {
  struct Case {
    ObjectiveMode mode;
    int aux;
    double decay;
  };
  const Case cases[] = {
      {ObjectiveMode::final_only, 0, 0.0},         {ObjectiveMode::final_only, 0, 1e-6},
      {ObjectiveMode::final_only, 2, 0.0},         {ObjectiveMode::target_replication, 0, 0.0},
      {ObjectiveMode::target_replication, 0, 1e-6}, {ObjectiveMode::target_replication, 2, 0.0},
      {ObjectiveMode::target_replication, 2, 1e-6}, {ObjectiveMode::linear_gain, 2, 1e-6},
  };
  for (const auto& c : cases) {
    CAPTURE(to_string(c.mode));
    CAPTURE(c.aux);
    CAPTURE(c.decay);
    Rng rng(101);
    const ObjectiveConfig obj{c.mode, 0.5, 3, c.aux};
    const LstmParams p = init_lstm_params({13, {4, 4}, obj.output_width()}, rng);
    const auto batch = fixture::sequence_batch(rng, 2, 13, 5, obj.output_width());
    const auto r = lstm_grad_check(p, batch, obj, c.decay);
    CHECK(r.max_rel_error < 1e-5);
    CHECK(r.checked == parameter_count(p));
  }
}

TEST_CASE("MLP gradient is exact at reduced width and on a 3x300 sample") {
  Rng rng(202);
  {
    const MlpParams p = init_mlp_params(10, {20, 20, 20}, 4, rng);
    const auto x = fixture::uniform_matrix(rng, 10, 6);
    const auto y = fixture::binary_matrix(rng, 4, 6);
    CHECK(mlp_grad_check(p, x, y, 1e-6).max_rel_error < 1e-5);
  }
  {
    const MlpParams p = init_mlp_params(30, {300, 300, 300}, 5, rng);
    const auto x = fixture::uniform_matrix(rng, 30, 4);
    const auto y = fixture::binary_matrix(rng, 5, 4);
    GradCheckOptions opt;
    opt.max_per_block = 40;
    const auto r = mlp_grad_check(p, x, y, 1e-6, opt);
    CHECK(r.checked == 7 * 40 + 5);
    CHECK(r.max_rel_error < 1e-5);
  }
}
