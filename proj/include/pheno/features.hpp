#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pheno/episode.hpp"

namespace pheno {

inline constexpr int kStatsPerChannel = 11;
inline constexpr int kWindowHours = 6;

// Statistic order within each channel's block of the feature vector.
inline constexpr const char* kFeatureStatNames[kStatsPerChannel] = {
    "first", "last", "scaled_diff", "mean", "std", "median",
    "q25",   "q75",  "min",         "max",  "slope"};

struct FeatureVector {
  std::string episode_id;
  Eigen::VectorXd values;  // channel-major, kStatsPerChannel per channel
};

// First and last kWindowHours rows, row-major: (2 * kWindowHours) x channels.
struct FixedWindow {
  std::string episode_id;
  Eigen::VectorXd values;
};

// Linear-interpolation percentile of an already sorted series, p in [0, 1].
double sorted_percentile(const std::vector<double>& sorted, double p);

// Least-squares slope of `series` against its index; 0 for fewer than 2 points.
double ols_slope(const Eigen::Ref<const Eigen::VectorXd>& series);

FeatureVector extract_features(const RegularGrid& grid);

FixedWindow first_last_window(const RegularGrid& grid);

std::vector<std::string> feature_names(const std::vector<std::string>& channel_names);

// Header "episode_id,<channel>_<stat>,...", one row per episode.
std::string features_to_csv(const std::vector<FeatureVector>& features,
                            const std::vector<std::string>& channel_names);

}  // namespace pheno
