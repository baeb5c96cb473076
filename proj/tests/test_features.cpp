#include <doctest.h>

#include "oracles.hpp"
#include "pheno/features.hpp"
#include "pheno/rng.hpp"

using namespace pheno;

namespace {

RegularGrid grid_from(const Eigen::MatrixXd& values) {
  RegularGrid g;
  g.episode_id = "g";
  g.values = values;
  g.observed_mask = MaskMatrix::Ones(values.rows(), values.cols());
  return g;
}

RegularGrid random_grid(Rng& rng, int T, int C) {
  Eigen::MatrixXd v(T, C);
  for (int t = 0; t < T; ++t)
    for (int c = 0; c < C; ++c) v(t, c) = rng.uniform();
  return grid_from(v);
}

}  // namespace

TEST_CASE("features of [1, 2, 3]") {
  Eigen::MatrixXd v(3, 1);
  v << 1, 2, 3;
  const auto f = extract_features(grid_from(v)).values;
  const double want[] = {1, 3, 2.0 / 3.0, 2, std::sqrt(2.0 / 3.0), 2, 1.5, 2.5, 1, 3, 1};
  REQUIRE(f.size() == 11);
  for (int i = 0; i < 11; ++i) CHECK(f[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("features of a constant series") {
  Eigen::MatrixXd v = Eigen::MatrixXd::Constant(7, 1, 0.3);
  const auto f = extract_features(grid_from(v)).values;
  for (int i : {0, 1, 3, 5, 6, 7, 8, 9}) CHECK(f[i] == doctest::Approx(0.3));
  CHECK(f[2] == 0.0);
  CHECK(f[4] == doctest::Approx(0.0));
  CHECK(f[10] == doctest::Approx(0.0));
}

TEST_CASE("T = 1 is total") {
  Eigen::MatrixXd v = Eigen::MatrixXd::Constant(1, 13, 0.5);
  const auto f = extract_features(grid_from(v)).values;
  CHECK(f.size() == 143);
  CHECK(f.allFinite());
}

TEST_CASE("thirteen channels give 143 named features") {
  Rng rng(1);
  CHECK(extract_features(random_grid(rng, 20, 13)).values.size() == 143);
  std::vector<std::string> names = {"a", "b"};
  const auto fn = feature_names(names);
  REQUIRE(fn.size() == 22);
  CHECK(fn[0] == "a_first");
  CHECK(fn[10] == "a_slope");
  CHECK(fn[12] == "b_last");
}

TEST_CASE("property: features agree with the per-statistic oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const int T = static_cast<int>(rng.uniform_int(1, 120));
    const RegularGrid g = random_grid(rng, T, 13);
    const auto got = extract_features(g).values;
    const auto want = oracle::features(g.values);
    REQUIRE(got.size() == static_cast<Eigen::Index>(want.size()));
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-10);
  }
}

TEST_CASE("property: quantiles are ordered") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = extract_features(random_grid(rng, static_cast<int>(rng.uniform_int(1, 50)), 3)).values;
    for (int c = 0; c < 3; ++c) {
      const auto s = f.segment(11 * c, 11);
      CHECK(s[8] <= s[6]);
      CHECK(s[6] <= s[5]);
      CHECK(s[5] <= s[7]);
      CHECK(s[7] <= s[9]);
    }
  }
}

TEST_CASE("property: slope of a line is exact") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const int T = static_cast<int>(rng.uniform_int(2, 200));
    const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
    Eigen::VectorXd y(T);
    for (int t = 0; t < T; ++t) y[t] = a * t + b;
    CHECK(std::abs(ols_slope(y) - a) <= 1e-12);
  }
}

TEST_CASE("first/last window rows") {
  auto rows_of = [](int T) {
    Eigen::MatrixXd v(T, 2);
    for (int t = 0; t < T; ++t) v.row(t) << t, 100 + t;
    const auto w = first_last_window(grid_from(v)).values;
    std::vector<int> rows;
    for (int s = 0; s < 12; ++s) {
      CHECK(w[2 * s + 1] == 100 + w[2 * s]);
      rows.push_back(static_cast<int>(w[2 * s]));
    }
    return rows;
  };
  CHECK(rows_of(12) == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  CHECK(rows_of(24) == std::vector<int>{0, 1, 2, 3, 4, 5, 18, 19, 20, 21, 22, 23});
  CHECK(rows_of(3) == std::vector<int>{0, 1, 2, 2, 2, 2, 0, 0, 0, 0, 1, 2});
  Rng rng(2);
  CHECK(first_last_window(random_grid(rng, 30, 13)).values.size() == 156);
}

TEST_CASE("feature CSV layout") {
  Eigen::MatrixXd v(3, 1);
  v << 1, 2, 3;
  const auto csv = features_to_csv({extract_features(grid_from(v))}, {"hr"});
  CHECK(csv.rfind("episode_id,hr_first,hr_last,hr_scaled_diff,", 0) == 0);
  CHECK(csv.find("\ng,1") != std::string::npos);
}
