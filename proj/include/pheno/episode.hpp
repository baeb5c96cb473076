#pragma once

// Episode data model and the hourly preprocessing pipeline:
// resample -> impute -> rescale.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pheno/error.hpp"

namespace pheno {

inline constexpr int kDefaultChannelCount = 13;
inline constexpr double kDefaultMinEpisodeHours = 12.0;

struct Sample {
  double t_hours = 0.0;
  double value = 0.0;
};

struct Channel {
  std::string name;
  std::vector<Sample> samples;  // strictly increasing in t_hours
};

// One patient stay: irregular multivariate samples plus a static label set.
struct RawEpisode {
  std::string episode_id;
  std::vector<Channel> channels;
  std::vector<int> labels;  // 0/1, primary labels first, then auxiliary
  std::map<std::string, std::string> meta;
};

struct ChannelSpec {
  std::string name;
  double normal_value = 0.0;
  double range_lo = 0.0;
  double range_hi = 1.0;
};

using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// T x C hourly matrix. After rescale() every value is in [0, 1].
struct RegularGrid {
  std::string episode_id;
  Eigen::MatrixXd values;    // rows are hours, columns are channels
  MaskMatrix observed_mask;  // 1 where the cell came from at least one sample

  int length() const { return static_cast<int>(values.rows()); }
  int channels() const { return static_cast<int>(values.cols()); }
};

// Output of resample_hourly: one entry per channel, each of length T.
struct HourlySeries {
  std::string episode_id;
  int length = 0;
  std::vector<std::vector<std::optional<double>>> channels;
};

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

// Optional per-episode additive/multiplicative corrections, keyed by channel
// name. Population-table based age/gender correction plugs in here; with no
// table the pipeline is unchanged.
struct CorrectionTable {
  std::map<std::string, double> offset;
  std::map<std::string, double> scale;
};

// The thirteen physiological channels with normal values and rescale ranges.
std::vector<ChannelSpec> default_channel_specs();

void validate_spec(const ChannelSpec& spec);

// Throws InputError describing the first violated invariant.
void validate_episode(const RawEpisode& episode, std::size_t label_count = 0,
                      double min_duration_hours = kDefaultMinEpisodeHours);

// Hours covered by the episode: floor(latest sample time) + 1, so every
// sample falls in a half-open window [t, t+1) with t < T.
int episode_hours(const RawEpisode& episode);

HourlySeries resample_hourly(const RawEpisode& episode);

// Forward fill, then back fill, then the channel's normal value for channels
// with no observation at all. Values stay in raw units.
RegularGrid impute(const HourlySeries& series, const std::vector<ChannelSpec>& specs);

// Maps each channel to [0, 1] using its range; out-of-range values clamp.
RegularGrid rescale(const RegularGrid& grid, const std::vector<ChannelSpec>& specs);

RawEpisode apply_correction(const RawEpisode& episode, const CorrectionTable* table);

// Reorders channels to match specs by name; absent channels become empty.
RawEpisode align_channels(const RawEpisode& episode, const std::vector<ChannelSpec>& specs);

// align -> resample -> impute -> rescale, with an optional correction hook first.
RegularGrid preprocess(const RawEpisode& episode, const std::vector<ChannelSpec>& specs,
                       const CorrectionTable* correction = nullptr);

// Deterministic shuffle, then first 80% train, next 10% validation, last 10%
// test. Validation and test each get round(n/10); train gets the remainder.
DatasetSplit split_dataset(const std::vector<std::string>& ids, std::uint64_t seed);

// JSON Lines interchange.
std::vector<RawEpisode> read_episodes_jsonl(const std::filesystem::path& path);
std::string episodes_to_jsonl(const std::vector<RawEpisode>& episodes);
std::vector<RegularGrid> read_grids_jsonl(const std::filesystem::path& path);
std::string grids_to_jsonl(const std::vector<RegularGrid>& grids);
std::vector<ChannelSpec> read_channel_specs(const std::filesystem::path& path);
std::string channel_specs_to_json(const std::vector<ChannelSpec>& specs);

}  // namespace pheno
