#include "pheno/episode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "pheno/io.hpp"
#include "pheno/rng.hpp"

namespace pheno {

using nlohmann::json;

std::vector<ChannelSpec> default_channel_specs() {
  return {
      {"diastolic_bp", 60.0, 20.0, 140.0},
      {"systolic_bp", 105.0, 40.0, 200.0},
      {"capillary_refill", 1.5, 0.0, 6.0},
      {"end_tidal_co2", 38.0, 10.0, 80.0},
      {"fio2", 0.21, 0.21, 1.0},
      {"glasgow_coma_scale", 15.0, 3.0, 15.0},
      {"glucose", 100.0, 20.0, 400.0},
      {"heart_rate", 110.0, 30.0, 220.0},
      {"ph", 7.4, 6.8, 7.8},
      {"respiratory_rate", 25.0, 5.0, 80.0},
      {"o2_saturation", 98.0, 60.0, 100.0},
      {"temperature", 37.0, 32.0, 42.0},
      {"urine_output", 1.0, 0.0, 5.0},
  };
}

void validate_spec(const ChannelSpec& spec) {
  if (!(spec.range_hi > spec.range_lo))
    throw ConfigError("channel '" + spec.name + "': range_hi must exceed range_lo");
  if (!(spec.normal_value >= spec.range_lo && spec.normal_value <= spec.range_hi))
    throw ConfigError("channel '" + spec.name + "': normal_value outside [range_lo, range_hi]");
}

void validate_episode(const RawEpisode& episode, std::size_t label_count,
                      double min_duration_hours) {
  const std::string where = "episode '" + episode.episode_id + "'";
  bool any = false;
  for (const auto& ch : episode.channels) {
    double prev = -1.0;
    for (const auto& s : ch.samples) {
      if (!std::isfinite(s.t_hours) || s.t_hours < 0.0)
        throw InputError(where + ", channel '" + ch.name + "': sample time must be finite and >= 0");
      if (!std::isfinite(s.value))
        throw InputError(where + ", channel '" + ch.name + "': non-finite sample value");
      if (s.t_hours <= prev)
        throw InputError(where + ", channel '" + ch.name + "': sample times not strictly increasing");
      prev = s.t_hours;
    }
    any = any || !ch.samples.empty();
  }
  if (!any) throw InputError(where + ": all channels are empty");
  for (int y : episode.labels)
    if (y != 0 && y != 1) throw InputError(where + ": labels must be 0/1");
  if (label_count != 0 && episode.labels.size() != label_count)
    throw InputError(where + ": expected " + std::to_string(label_count) + " labels, got " +
                     std::to_string(episode.labels.size()));
  if (episode_hours(episode) < min_duration_hours)
    throw InputError(where + ": shorter than the configured minimum duration");
}

int episode_hours(const RawEpisode& episode) {
  double latest = -1.0;
  for (const auto& ch : episode.channels)
    if (!ch.samples.empty()) latest = std::max(latest, ch.samples.back().t_hours);
  if (latest < 0.0) throw InputError("episode '" + episode.episode_id + "': all channels are empty");
  // Window t covers [t, t+1), so a sample at exactly hour h lands in row h.
  return std::max(1, static_cast<int>(std::floor(latest)) + 1);
}

HourlySeries resample_hourly(const RawEpisode& episode) {
  HourlySeries out;
  out.episode_id = episode.episode_id;
  out.length = episode_hours(episode);
  out.channels.reserve(episode.channels.size());
  for (const auto& ch : episode.channels) {
    std::vector<double> sum(out.length, 0.0);
    std::vector<int> count(out.length, 0);
    for (const auto& s : ch.samples) {
      const auto hour = static_cast<int>(std::floor(s.t_hours));
      sum[hour] += s.value;
      ++count[hour];
    }
    std::vector<std::optional<double>> cells(out.length);
    for (int t = 0; t < out.length; ++t)
      if (count[t] > 0) cells[t] = sum[t] / count[t];
    out.channels.push_back(std::move(cells));
  }
  return out;
}

RegularGrid impute(const HourlySeries& series, const std::vector<ChannelSpec>& specs) {
  if (specs.size() != series.channels.size())
    throw ConfigError("impute: " + std::to_string(specs.size()) + " channel specs for " +
                      std::to_string(series.channels.size()) + " channels");
  const int T = series.length;
  const auto C = static_cast<int>(series.channels.size());
  RegularGrid grid;
  grid.episode_id = series.episode_id;
  grid.values.resize(T, C);
  grid.observed_mask = MaskMatrix::Zero(T, C);

  for (int c = 0; c < C; ++c) {
    const auto& cells = series.channels[c];
    std::optional<double> carry;
    for (int t = 0; t < T; ++t) {
      if (cells[t]) {
        carry = cells[t];
        grid.observed_mask(t, c) = 1;
      }
      grid.values(t, c) = carry.value_or(std::numeric_limits<double>::quiet_NaN());
    }
    if (!carry) {
      grid.values.col(c).setConstant(specs[c].normal_value);
      continue;
    }
    // Leading gap: back fill from the first observation.
    int first = 0;
    while (!cells[first]) ++first;
    for (int t = 0; t < first; ++t) grid.values(t, c) = *cells[first];
  }
  return grid;
}

RegularGrid rescale(const RegularGrid& grid, const std::vector<ChannelSpec>& specs) {
  if (static_cast<int>(specs.size()) != grid.channels())
    throw ConfigError("rescale: channel spec count does not match grid width");
  RegularGrid out = grid;
  for (int c = 0; c < grid.channels(); ++c) {
    const auto& s = specs[c];
    if (!(s.range_hi > s.range_lo))
      throw ConfigError("channel '" + s.name + "': range_hi must exceed range_lo");
    const double width = s.range_hi - s.range_lo;
    for (int t = 0; t < grid.length(); ++t)
      out.values(t, c) = std::clamp((grid.values(t, c) - s.range_lo) / width, 0.0, 1.0);
  }
  return out;
}

RawEpisode apply_correction(const RawEpisode& episode, const CorrectionTable* table) {
  if (table == nullptr) return episode;
  RawEpisode out = episode;
  for (auto& ch : out.channels) {
    const auto off = table->offset.find(ch.name);
    const auto sc = table->scale.find(ch.name);
    const double a = sc == table->scale.end() ? 1.0 : sc->second;
    const double b = off == table->offset.end() ? 0.0 : off->second;
    for (auto& s : ch.samples) s.value = a * s.value + b;
  }
  return out;
}

RawEpisode align_channels(const RawEpisode& episode, const std::vector<ChannelSpec>& specs) {
  RawEpisode out;
  out.episode_id = episode.episode_id;
  out.labels = episode.labels;
  out.meta = episode.meta;
  for (const auto& spec : specs) {
    Channel ch{spec.name, {}};
    for (const auto& src : episode.channels)
      if (src.name == spec.name) ch.samples = src.samples;
    out.channels.push_back(std::move(ch));
  }
  for (const auto& src : episode.channels) {
    const bool known = std::any_of(specs.begin(), specs.end(),
                                   [&](const ChannelSpec& s) { return s.name == src.name; });
    if (!known)
      throw InputError("episode '" + episode.episode_id + "': unknown channel '" + src.name + "'");
  }
  return out;
}

RegularGrid preprocess(const RawEpisode& episode, const std::vector<ChannelSpec>& specs,
                       const CorrectionTable* correction) {
  const auto aligned = align_channels(correction ? apply_correction(episode, correction) : episode, specs);
  return rescale(impute(resample_hourly(aligned), specs), specs);
}

DatasetSplit split_dataset(const std::vector<std::string>& ids, std::uint64_t seed) {
  if (ids.size() < 10)
    throw InputError("split_dataset: need at least 10 episodes, got " + std::to_string(ids.size()));
  std::vector<std::string> order = ids;
  Rng rng(stream_key(seed, "shuffle", 0xffffffffULL));
  rng.shuffle(std::span(order));
  const std::size_t n = order.size();
  const auto n_val = static_cast<std::size_t>(std::lround(static_cast<double>(n) / 10.0));
  const std::size_t n_test = n_val;
  const std::size_t n_train = n - n_val - n_test;
  DatasetSplit split;
  split.train.assign(order.begin(), order.begin() + n_train);
  split.validation.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  split.test.assign(order.begin() + n_train + n_val, order.end());
  return split;
}

// --- JSON Lines ------------------------------------------------------------

namespace {

json episode_to_json(const RawEpisode& e) {
  json channels = json::array();
  for (const auto& ch : e.channels) {
    json samples = json::array();
    for (const auto& s : ch.samples) samples.push_back({s.t_hours, s.value});
    channels.push_back({{"name", ch.name}, {"samples", std::move(samples)}});
  }
  json meta = json::object();
  for (const auto& [k, v] : e.meta) meta[k] = v;
  return {{"episode_id", e.episode_id},
          {"channels", std::move(channels)},
          {"labels", e.labels},
          {"meta", std::move(meta)}};
}

RawEpisode episode_from_json(const json& j) {
  RawEpisode e;
  e.episode_id = j.at("episode_id").get<std::string>();
  for (const auto& jc : j.at("channels")) {
    Channel ch;
    ch.name = jc.at("name").get<std::string>();
    for (const auto& js : jc.at("samples")) {
      if (!js.is_array() || js.size() != 2) throw InputError("sample must be [t, v]");
      ch.samples.push_back({js[0].get<double>(), js[1].get<double>()});
    }
    e.channels.push_back(std::move(ch));
  }
  e.labels = j.at("labels").get<std::vector<int>>();
  if (j.contains("meta"))
    for (const auto& [k, v] : j.at("meta").items())
      e.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
  return e;
}

json grid_to_json(const RegularGrid& g) {
  json values = json::array();
  json mask = json::array();
  for (int t = 0; t < g.length(); ++t) {
    json row = json::array();
    json mrow = json::array();
    for (int c = 0; c < g.channels(); ++c) {
      row.push_back(g.values(t, c));
      mrow.push_back(static_cast<int>(g.observed_mask(t, c)));
    }
    values.push_back(std::move(row));
    mask.push_back(std::move(mrow));
  }
  return {{"episode_id", g.episode_id},
          {"T", g.length()},
          {"values", std::move(values)},
          {"observed_mask", std::move(mask)}};
}

RegularGrid grid_from_json(const json& j) {
  RegularGrid g;
  g.episode_id = j.at("episode_id").get<std::string>();
  const int T = j.at("T").get<int>();
  const auto& values = j.at("values");
  const auto& mask = j.at("observed_mask");
  if (T < 1 || static_cast<int>(values.size()) != T || static_cast<int>(mask.size()) != T)
    throw InputError("grid '" + g.episode_id + "': T does not match row count");
  const auto C = static_cast<int>(values.at(0).size());
  g.values.resize(T, C);
  g.observed_mask.resize(T, C);
  for (int t = 0; t < T; ++t) {
    if (static_cast<int>(values[t].size()) != C || static_cast<int>(mask[t].size()) != C)
      throw InputError("grid '" + g.episode_id + "': ragged rows");
    for (int c = 0; c < C; ++c) {
      g.values(t, c) = values[t][c].get<double>();
      g.observed_mask(t, c) = static_cast<std::uint8_t>(mask[t][c].get<int>() != 0);
    }
  }
  return g;
}

template <class T, class Parse>
std::vector<T> read_jsonl(const std::filesystem::path& path, Parse parse) {
  std::istringstream in(read_text_file(path));
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(json::parse(line)));
    } catch (const json::exception& ex) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return out;
}

}  // namespace

std::vector<RawEpisode> read_episodes_jsonl(const std::filesystem::path& path) {
  return read_jsonl<RawEpisode>(path, episode_from_json);
}

std::string episodes_to_jsonl(const std::vector<RawEpisode>& episodes) {
  std::string out;
  for (const auto& e : episodes) {
    out += episode_to_json(e).dump();
    out += '\n';
  }
  return out;
}

std::vector<RegularGrid> read_grids_jsonl(const std::filesystem::path& path) {
  return read_jsonl<RegularGrid>(path, grid_from_json);
}

std::string grids_to_jsonl(const std::vector<RegularGrid>& grids) {
  std::string out;
  for (const auto& g : grids) {
    out += grid_to_json(g).dump();
    out += '\n';
  }
  return out;
}

std::vector<ChannelSpec> read_channel_specs(const std::filesystem::path& path) {
  std::vector<ChannelSpec> specs;
  try {
    const auto j = json::parse(read_text_file(path));
    if (!j.is_array()) throw ConfigError("channel spec file must hold a JSON array");
    for (const auto& js : j) {
      ChannelSpec s{js.at("name").get<std::string>(), js.at("normal_value").get<double>(),
                    js.at("range_lo").get<double>(), js.at("range_hi").get<double>()};
      validate_spec(s);
      specs.push_back(std::move(s));
    }
  } catch (const json::exception& ex) {
    throw ConfigError(path.string() + ": " + ex.what());
  }
  return specs;
}

std::string channel_specs_to_json(const std::vector<ChannelSpec>& specs) {
  json j = json::array();
  for (const auto& s : specs)
    j.push_back({{"name", s.name},
                 {"normal_value", s.normal_value},
                 {"range_lo", s.range_lo},
                 {"range_hi", s.range_hi}});
  return j.dump(2) + "\n";
}

}  // namespace pheno
