#pragma once

// Deterministic synthetic episode generator standing in for private clinical
// data. Labels leave additive offset/trend signatures on latent channel
// trajectories; observations are irregular noisy samples of those trajectories.

#include <cstdint>
#include <vector>

#include "pheno/episode.hpp"

namespace pheno {

struct SynthConfig {
  int episode_count = 2000;
  int label_count = 24;  // primary + auxiliary
  std::vector<ChannelSpec> channels = default_channel_specs();
  int min_hours = 12;
  int max_hours = 96;
  // Mean gap between samples per channel; empty means the built-in defaults.
  std::vector<double> sample_interval_hours;
  double channel_drop_prob = 0.1;
  int anchor_channel = 7;  // never dropped, always sampled in the final hour
  // Scales both per-patient channel offsets and observation noise.
  double noise_scale = 1.0;
  double patient_sd = 0.05;  // fractions of the channel range
  double observation_sd = 0.05;
  // Long-tailed base rates: rate_l = base_rate_top * base_rate_decay^l,
  // unless base_rates is non-empty.
  double base_rate_top = 0.4;
  double base_rate_decay = 0.85;
  std::vector<double> base_rates;
  double channel_affect_prob = 0.2;
  double offset_min = 0.04;  // fractions of the channel range
  double offset_max = 0.12;
  double trend_max = 0.12;
};

struct LabelSignature {
  double offset = 0.0;  // fraction of channel range
  double trend = 0.0;   // fraction of channel range gained over the episode
};

void validate_synth_config(const SynthConfig& config);

std::vector<double> base_rate_profile(const SynthConfig& config);

std::vector<double> sample_intervals(const SynthConfig& config);

// Signature of `label` on `channel`; zero when the label does not touch it.
LabelSignature label_signature(const SynthConfig& config, std::uint64_t seed, int label,
                               int channel);

// signatures[label][channel]
using SignatureTable = std::vector<std::vector<LabelSignature>>;

SignatureTable signature_table(const SynthConfig& config, std::uint64_t seed);

// Noise-free latent value of a channel at time t for an episode of `hours`
// hours, before the per-patient offset.
double latent_value(const SynthConfig& config, const SignatureTable& signatures,
                    const std::vector<int>& labels, int channel, double t_hours, int hours);

RawEpisode generate_episode(const SynthConfig& config, const SignatureTable& signatures,
                            std::uint64_t seed, int index);

std::vector<RawEpisode> generate_synthetic(const SynthConfig& config, std::uint64_t seed,
                                           int threads = 1);

}  // namespace pheno
