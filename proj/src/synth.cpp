#include "pheno/synth.hpp"

#include <cmath>
#include <cstdio>

#include "pheno/rng.hpp"

namespace pheno {

namespace {

constexpr std::uint64_t kSignatureTag = 0x5167ULL;

}  // namespace

void validate_synth_config(const SynthConfig& config) {
  if (config.episode_count < 10) throw ConfigError("synth: episode_count must be >= 10");
  if (config.label_count < 2) throw ConfigError("synth: label_count must be >= 2");
  if (config.channels.empty()) throw ConfigError("synth: no channels");
  for (const auto& spec : config.channels) validate_spec(spec);
  if (config.min_hours < 1 || config.max_hours < config.min_hours)
    throw ConfigError("synth: need 1 <= min_hours <= max_hours");
  if (!config.sample_interval_hours.empty() &&
      config.sample_interval_hours.size() != config.channels.size())
    throw ConfigError("synth: sample_interval_hours must have one entry per channel");
  for (double d : config.sample_interval_hours)
    if (!(d > 0.0)) throw ConfigError("synth: sample intervals must be positive");
  if (config.channel_drop_prob < 0.0 || config.channel_drop_prob >= 1.0)
    throw ConfigError("synth: channel_drop_prob must be in [0, 1)");
  if (config.anchor_channel < 0 || config.anchor_channel >= static_cast<int>(config.channels.size()))
    throw ConfigError("synth: anchor_channel out of range");
  if (config.noise_scale < 0.0 || config.patient_sd < 0.0 || config.observation_sd < 0.0)
    throw ConfigError("synth: noise parameters must be nonnegative");
  if (!config.base_rates.empty() &&
      config.base_rates.size() != static_cast<std::size_t>(config.label_count))
    throw ConfigError("synth: base_rates must have label_count entries");
  for (double p : base_rate_profile(config))
    if (p < 0.0 || p > 1.0) throw ConfigError("synth: base rates must lie in [0, 1]");
  if (config.offset_min < 0.0 || config.offset_max < config.offset_min)
    throw ConfigError("synth: need 0 <= offset_min <= offset_max");
}

std::vector<double> base_rate_profile(const SynthConfig& config) {
  if (!config.base_rates.empty()) return config.base_rates;
  std::vector<double> rates(config.label_count);
  double r = config.base_rate_top;
  for (auto& p : rates) {
    p = r;
    r *= config.base_rate_decay;
  }
  return rates;
}

std::vector<double> sample_intervals(const SynthConfig& config) {
  if (!config.sample_interval_hours.empty()) return config.sample_interval_hours;
  // Vitals roughly hourly, scored assessments every few hours, labs sparse.
  static const std::vector<double> defaults = {1.0, 1.0, 4.0, 2.0, 4.0, 4.0, 8.0,
                                               1.0, 12.0, 1.0, 1.0, 4.0, 2.0};
  std::vector<double> out(config.channels.size());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = defaults[c % defaults.size()];
  return out;
}

LabelSignature label_signature(const SynthConfig& config, std::uint64_t seed, int label,
                               int channel) {
  const auto C = static_cast<int>(config.channels.size());
  Rng pick(stream_key(seed, "synth", kSignatureTag, static_cast<std::uint64_t>(label)));
  const int home = static_cast<int>(pick.uniform_int(0, C - 1));
  Rng rng(stream_key(seed, "synth", kSignatureTag + 1 + static_cast<std::uint64_t>(label),
                     static_cast<std::uint64_t>(channel)));
  const bool touched = rng.bernoulli(config.channel_affect_prob);
  const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
  const double magnitude = rng.uniform(config.offset_min, config.offset_max);
  const double trend = rng.uniform(-config.trend_max, config.trend_max);
  if (!touched && channel != home) return {};
  return {sign * magnitude, trend};
}

SignatureTable signature_table(const SynthConfig& config, std::uint64_t seed) {
  SignatureTable table(config.label_count);
  for (int l = 0; l < config.label_count; ++l)
    for (int c = 0; c < static_cast<int>(config.channels.size()); ++c)
      table[l].push_back(label_signature(config, seed, l, c));
  return table;
}

double latent_value(const SynthConfig& config, const SignatureTable& signatures,
                    const std::vector<int>& labels, int channel, double t_hours, int hours) {
  const auto& spec = config.channels[channel];
  const double frac = t_hours / hours;
  double shift = 0.0;
  for (int l = 0; l < static_cast<int>(labels.size()); ++l) {
    if (labels[l] == 0) continue;
    const auto& sig = signatures[l][channel];
    shift += sig.offset + sig.trend * frac;
  }
  return spec.normal_value + (spec.range_hi - spec.range_lo) * shift;
}

RawEpisode generate_episode(const SynthConfig& config, const SignatureTable& signatures,
                            std::uint64_t seed, int index) {
  Rng rng(stream_key(seed, "synth", static_cast<std::uint64_t>(index)));
  RawEpisode ep;
  char id[32];
  std::snprintf(id, sizeof(id), "ep%06d", index);
  ep.episode_id = id;

  const int hours = static_cast<int>(rng.uniform_int(config.min_hours, config.max_hours));
  const auto rates = base_rate_profile(config);
  ep.labels.resize(config.label_count);
  for (int l = 0; l < config.label_count; ++l) ep.labels[l] = rng.bernoulli(rates[l]) ? 1 : 0;

  const auto intervals = sample_intervals(config);
  const auto C = static_cast<int>(config.channels.size());
  for (int c = 0; c < C; ++c) {
    const auto& spec = config.channels[c];
    const double width = spec.range_hi - spec.range_lo;
    const double patient = config.noise_scale * config.patient_sd * rng.normal();
    const bool dropped = c != config.anchor_channel && rng.bernoulli(config.channel_drop_prob);
    Channel ch{spec.name, {}};
    double t = rng.uniform() * intervals[c];
    while (t < hours) {
      const double noise = config.noise_scale * config.observation_sd * rng.normal();
      const double v = latent_value(config, signatures, ep.labels, c, t, hours) + width * (patient + noise);
      if (ch.samples.empty() || t > ch.samples.back().t_hours) ch.samples.push_back({t, v});
      t += -std::log(1.0 - rng.uniform()) * intervals[c];
    }
    if (c == config.anchor_channel &&
        (ch.samples.empty() || ch.samples.back().t_hours < hours - 1)) {
      const double tl = hours - 1 + rng.uniform();
      const double noise = config.noise_scale * config.observation_sd * rng.normal();
      const double v = latent_value(config, signatures, ep.labels, c, tl, hours) + width * (patient + noise);
      ch.samples.push_back({tl, v});
    }
    if (dropped) ch.samples.clear();
    ep.channels.push_back(std::move(ch));
  }
  ep.meta["length_hours"] = std::to_string(hours);
  return ep;
}

std::vector<RawEpisode> generate_synthetic(const SynthConfig& config, std::uint64_t seed,
                                           int threads) {
  validate_synth_config(config);
  const auto signatures = signature_table(config, seed);
  std::vector<RawEpisode> out(config.episode_count);
#pragma omp parallel for num_threads(threads) schedule(static)
  for (int i = 0; i < config.episode_count; ++i)
    out[i] = generate_episode(config, signatures, seed, i);
  return out;
}

}  // namespace pheno
