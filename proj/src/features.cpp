#include "pheno/features.hpp"

#include <algorithm>
#include <cmath>

#include "pheno/io.hpp"

namespace pheno {

double sorted_percentile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double ols_slope(const Eigen::Ref<const Eigen::VectorXd>& series) {
  const auto n = series.size();
  if (n < 2) return 0.0;
  const double t_mean = 0.5 * static_cast<double>(n - 1);
  const double y_mean = series.mean();
  double sxy = 0.0;
  double sxx = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double dt = static_cast<double>(t) - t_mean;
    sxy += dt * (series[t] - y_mean);
    sxx += dt * dt;
  }
  return sxy / sxx;
}

FeatureVector extract_features(const RegularGrid& grid) {
  const int T = grid.length();
  const int C = grid.channels();
  if (T < 1) throw InputError("extract_features: empty grid '" + grid.episode_id + "'");
  FeatureVector out{grid.episode_id, Eigen::VectorXd(kStatsPerChannel * C)};
  std::vector<double> sorted(T);
  for (int c = 0; c < C; ++c) {
    const Eigen::VectorXd x = grid.values.col(c);
    std::copy(x.data(), x.data() + T, sorted.begin());
    std::sort(sorted.begin(), sorted.end());
    const double mean = x.mean();
    const double var = (x.array() - mean).square().mean();
    auto f = out.values.segment(kStatsPerChannel * c, kStatsPerChannel);
    f[0] = x[0];
    f[1] = x[T - 1];
    f[2] = (x[T - 1] - x[0]) / T;
    f[3] = mean;
    f[4] = std::sqrt(var);
    f[5] = sorted_percentile(sorted, 0.5);
    f[6] = sorted_percentile(sorted, 0.25);
    f[7] = sorted_percentile(sorted, 0.75);
    f[8] = sorted.front();
    f[9] = sorted.back();
    f[10] = ols_slope(x);
  }
  return out;
}

FixedWindow first_last_window(const RegularGrid& grid) {
  const int T = grid.length();
  const int C = grid.channels();
  if (T < 1) throw InputError("first_last_window: empty grid '" + grid.episode_id + "'");
  FixedWindow out{grid.episode_id, Eigen::VectorXd(2 * kWindowHours * C)};
  int slot = 0;
  auto put = [&](int row) {
    out.values.segment(slot * C, C) = grid.values.row(row).transpose();
    ++slot;
  };
  // Short episodes replicate the edge row to keep the width fixed.
  for (int i = 0; i < kWindowHours; ++i) put(std::min(i, T - 1));
  for (int i = 0; i < kWindowHours; ++i) put(std::max(T - kWindowHours + i, 0));
  return out;
}

std::vector<std::string> feature_names(const std::vector<std::string>& channel_names) {
  std::vector<std::string> names;
  for (const auto& ch : channel_names)
    for (const char* stat : kFeatureStatNames) names.push_back(ch + "_" + stat);
  return names;
}

std::string features_to_csv(const std::vector<FeatureVector>& features,
                            const std::vector<std::string>& channel_names) {
  std::string out = "episode_id";
  for (const auto& n : feature_names(channel_names)) out += "," + n;
  out += '\n';
  for (const auto& fv : features) {
    out += fv.episode_id;
    for (double v : fv.values) out += "," + format_real(v);
    out += '\n';
  }
  return out;
}

}  // namespace pheno
