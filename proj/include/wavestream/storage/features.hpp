// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "wavestream/tensor.hpp"

namespace wavestream {

/// Acoustic features: log-mel [mel_bins, T] and F0 in Hz per frame (0 = unvoiced).
struct Features {
  Tensor mel;
  std::vector<float> f0;

  std::size_t frames() const { return f0.size(); }
};

/// Seeded speech-like features for benchmarks and tests: a slowly drifting
/// log-mel envelope and an F0 contour alternating voiced and unvoiced runs.
inline Features synthetic_features(std::size_t frames, std::uint64_t seed, std::size_t mel_bins = 100) {
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return double(rng() >> 11) * 0x1.0p-53; };
  Features f{Tensor(Shape{mel_bins, frames}), std::vector<float>(frames, 0.0f)};

  std::vector<double> level(mel_bins);
  for (std::size_t c = 0; c < mel_bins; ++c) level[c] = -2.0 - 4.0 * double(c) / double(mel_bins);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t c = 0; c < mel_bins; ++c) {
      level[c] = 0.9 * level[c] + 0.1 * (-2.0 - 4.0 * double(c) / double(mel_bins)) + 0.3 * (uniform() - 0.5);
      f.mel[c * frames + t] = static_cast<float>(level[c]);
    }

  std::size_t t = 0;
  bool voiced = uniform() < 0.7;
  while (t < frames) {
    const std::size_t run = 5 + static_cast<std::size_t>(uniform() * 40.0);
    const double base = 100.0 + 150.0 * uniform();
    for (std::size_t i = 0; i < run && t < frames; ++i, ++t)
      f.f0[t] = voiced ? static_cast<float>(base * (1.0 + 0.05 * std::sin(0.2 * double(i)))) : 0.0f;
    voiced = !voiced;
  }
  return f;
}

}  // namespace wavestream
