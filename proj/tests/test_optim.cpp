#include <doctest.h>

#include "pheno/optim.hpp"
#include "pheno/rng.hpp"

using namespace pheno;

namespace {

// One weight block and one bias block.
struct TwoBlock {
  std::vector<double> w;
  std::vector<double> b;

  template <class F>
  void visit(F&& f) {
    f(std::string("w"), std::span<double>(w), false);
    f(std::string("b"), std::span<double>(b), true);
  }
  template <class F>
  void visit(F&& f) const {
    f(std::string("w"), std::span<const double>(w), false);
    f(std::string("b"), std::span<const double>(b), true);
  }
};

}  // namespace

TEST_CASE("clip examples") {
  FlatParams g{{3.0, 4.0}};
  CHECK(clip_gradients(g, 1.0) == 5.0);
  CHECK(g.values[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(g.values[1] == doctest::Approx(0.8).epsilon(1e-15));
  FlatParams small{{0.3, 0.4}};
  clip_gradients(small, 1.0);
  CHECK(small.values == std::vector<double>{0.3, 0.4});
}

TEST_CASE("property: clipping bounds the norm and is idempotent") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    FlatParams g;
    for (int i = 0; i < static_cast<int>(rng.uniform_int(1, 30)); ++i)
      g.values.push_back(rng.normal() * rng.uniform(0.0, 10.0));
    const double c = rng.uniform(0.01, 5.0);
    clip_gradients(g, c);
    CHECK(std::sqrt(squared_norm(g)) <= c * (1.0 + 1e-12));
    FlatParams again = g;
    clip_gradients(again, c);
    for (std::size_t i = 0; i < g.values.size(); ++i)
      CHECK(again.values[i] == doctest::Approx(g.values[i]).epsilon(1e-14));
  }
}

TEST_CASE("sgd: plain descent without momentum or decay") {
  FlatParams p{{1.0, -2.0}};
  OptimizerState<FlatParams> opt(p, {0.1, 0.0, 0.0, 1.0});
  sgd_momentum_step(p, FlatParams{{0.5, 1.0}}, opt);
  CHECK(p.values[0] == doctest::Approx(0.95));
  CHECK(p.values[1] == doctest::Approx(-2.1));
}

TEST_CASE("sgd: two momentum steps from the worked recursion") {
  FlatParams p{{1.0}};
  OptimizerState<FlatParams> opt(p, {0.1, 0.9, 0.0, 1.0});
  sgd_momentum_step(p, FlatParams{{1.0}}, opt);
  sgd_momentum_step(p, FlatParams{{1.0}}, opt);
  CHECK(p.values[0] == doctest::Approx(0.71).epsilon(1e-14));
}

TEST_CASE("sgd: coasting on zero gradient") {
  FlatParams p{{0.0}};
  OptimizerState<FlatParams> opt(p, {0.1, 0.5, 0.0, 1.0});
  opt.velocity.values[0] = 1.0;
  sgd_momentum_step(p, FlatParams{{0.0}}, opt);
  CHECK(opt.velocity.values[0] == 0.5);
  CHECK(p.values[0] == 0.5);
  sgd_momentum_step(p, FlatParams{{0.0}}, opt);
  CHECK(p.values[0] == 0.75);
}

TEST_CASE("weight decay touches weights but not biases") {
  TwoBlock p{{2.0}, {2.0}};
  OptimizerState<TwoBlock> opt(p, {1.0, 0.0, 0.5, 1.0});
  sgd_momentum_step(p, TwoBlock{{0.0}, {0.0}}, opt);
  CHECK(p.w[0] == 1.0);
  CHECK(p.b[0] == 2.0);
  TwoBlock g{{0.0}, {0.0}};
  add_weight_decay(g, TwoBlock{{3.0}, {3.0}}, 0.1);
  CHECK(g.w[0] == doctest::Approx(0.3));
  CHECK(g.b[0] == 0.0);
  CHECK(weight_decay_penalty(TwoBlock{{3.0}, {5.0}}, 0.1) == doctest::Approx(0.45));
}

TEST_CASE("sgd config validation") {
  CHECK_THROWS_AS(validate_sgd({-1.0, 0.9, 0.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(validate_sgd({0.1, 1.0, 0.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(validate_sgd({0.1, 0.9, 0.0, 0.0}), ConfigError);
  CHECK_NOTHROW(validate_sgd({}));
}
