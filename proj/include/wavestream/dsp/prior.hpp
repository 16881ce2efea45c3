// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "wavestream/tensor.hpp"

namespace wavestream::dsp {

struct PriorConfig {
  double sample_rate = 24000.0;
  std::size_t hop = 240;
  float voiced_amplitude = 0.1f;
  float unvoiced_noise_std = 0.003f;
  std::uint64_t seed = 0;

  /// floor(nyquist / f0), the number of harmonics below Nyquist.
  std::size_t harmonics(double f0) const {
    if (f0 <= 0.0) return 0;
    return static_cast<std::size_t>(std::floor(0.5 * sample_rate / f0));
  }
};

/// Counter-based standard normal: a pure function of (seed, index), so any
/// sample can be regenerated without replaying the stream.
inline float counter_normal(std::uint64_t seed, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  const std::uint64_t a = mix(seed ^ mix(index));
  const std::uint64_t b = mix(a);
  const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;           // [0, 1)
  return static_cast<float>(std::sqrt(-2.0 * std::log(u1)) *
                            std::cos(2.0 * std::numbers::pi * u2));
}

/// sum_{k=1..K} sin(k * phase)
inline double harmonic_sum(double phase, std::size_t k_max) {
  const double half = 0.5 * phase;
  const double s = std::sin(half);
  if (std::fabs(s) > 1e-6) {
    const double k = static_cast<double>(k_max);
    return std::sin(k * half) * std::sin((k + 1.0) * half) / s;
  }
  double acc = 0.0;
  for (std::size_t k = 1; k <= k_max; ++k) acc += std::sin(static_cast<double>(k) * phase);
  return acc;
}

/// Carried between calls so chunked generation matches one-shot generation.
struct PriorState {
  double phase = 0.0;
  float previous_f0 = -1.0f;  // < 0: no frame seen yet
  std::uint64_t sample_index = 0;
};

/// Generates f0.size() * hop prior samples and advances `state`.
///
/// Frame t's F0 is reached at the last sample of block t; within a block the
/// rate interpolates linearly from the previous frame's value when both are
/// voiced. A frame with F0 = 0 yields Gaussian noise for its whole block.
inline void harmonic_prior_step(std::span<const float> f0, const PriorConfig& cfg,
                                PriorState& state, std::span<float> out) {
  const std::size_t hop = cfg.hop;
  if (out.size() < f0.size() * hop) throw ConfigError("harmonic_prior: output too small");
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (std::size_t t = 0; t < f0.size(); ++t) {
    const float cur = f0[t];
    if (!(cur >= 0.0f) || !std::isfinite(cur))
      throw DataError("harmonic_prior: F0 must be finite and non-negative, frame " +
                      std::to_string(t) + " has " + std::to_string(cur));
    const float prev = state.previous_f0 < 0.0f ? cur : state.previous_f0;
    for (std::size_t i = 0; i < hop; ++i) {
      float value;
      if (cur > 0.0f) {
        const double rate = prev > 0.0f
                                ? double(prev) + (double(cur) - double(prev)) * double(i + 1) / double(hop)
                                : double(cur);
        state.phase += kTwoPi * rate / cfg.sample_rate;
        if (state.phase >= kTwoPi) state.phase -= kTwoPi * std::floor(state.phase / kTwoPi);
        const std::size_t k = cfg.harmonics(rate);
        value = k == 0 ? 0.0f
                       : static_cast<float>(cfg.voiced_amplitude / std::sqrt(double(k)) *
                                            harmonic_sum(state.phase, k));
      } else {
        value = cfg.unvoiced_noise_std == 0.0f
                    ? 0.0f
                    : cfg.unvoiced_noise_std * counter_normal(cfg.seed, state.sample_index);
      }
      out[t * hop + i] = value;
      ++state.sample_index;
    }
    state.previous_f0 = cur;
  }
}

/// One-shot prior waveform of length f0.size() * hop.
inline std::vector<float> harmonic_prior(std::span<const float> f0, const PriorConfig& cfg) {
  PriorState state;
  std::vector<float> out(f0.size() * cfg.hop);
  harmonic_prior_step(f0, cfg, state, out);
  return out;
}

}  // namespace wavestream::dsp
