// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "wavestream/dsp/stft.hpp"
#include "wavestream/storage/features.hpp"
#include "wavestream/storage/wav.hpp"

namespace wavestream {

struct FeatureConfig {
  std::size_t sample_rate = 24000;
  std::size_t hop = 240;
  std::size_t fft_size = 1024;
  std::size_t mel_bins = 100;
  double mel_low_hz = 0.0;
  double mel_high_hz = 8000.0;
  float log_floor = 1e-5f;
  double f0_min_hz = 60.0;
  double f0_max_hz = 500.0;
  double voicing_threshold = 0.3;
};

/// Triangular filters equally spaced on the HTK mel scale, [bins, fft/2+1].
inline std::vector<float> mel_filterbank(const FeatureConfig& cfg) {
  auto to_mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto to_hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  const std::size_t nb = cfg.fft_size / 2 + 1;
  std::vector<double> edges(cfg.mel_bins + 2);
  const double lo = to_mel(cfg.mel_low_hz), hi = to_mel(cfg.mel_high_hz);
  for (std::size_t i = 0; i < edges.size(); ++i) edges[i] = to_hz(lo + (hi - lo) * double(i) / double(cfg.mel_bins + 1));
  std::vector<float> fb(cfg.mel_bins * nb, 0.0f);
  for (std::size_t m = 0; m < cfg.mel_bins; ++m)
    for (std::size_t k = 0; k < nb; ++k) {
      const double f = double(k) * double(cfg.sample_rate) / double(cfg.fft_size);
      const double up = (f - edges[m]) / (edges[m + 1] - edges[m]);
      const double down = (edges[m + 2] - f) / (edges[m + 2] - edges[m + 1]);
      fb[m * nb + k] = static_cast<float>(std::max(0.0, std::min(up, down)));
    }
  return fb;
}

/// Normalized-autocorrelation pitch of one segment; 0 when unvoiced.
inline float autocorrelation_f0(std::span<const float> seg, const FeatureConfig& cfg) {
  const std::size_t n = seg.size();
  const auto min_lag = static_cast<std::size_t>(std::floor(double(cfg.sample_rate) / cfg.f0_max_hz));
  const auto max_lag = std::min(n / 2, static_cast<std::size_t>(std::ceil(double(cfg.sample_rate) / cfg.f0_min_hz)));
  double mean = 0.0;
  for (float v : seg) mean += v;
  mean /= double(n);
  std::vector<double> x(n);
  double energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = seg[i] - mean;
    energy += x[i] * x[i];
  }
  if (energy / double(n) < 1e-10 || min_lag >= max_lag) return 0.0f;

  std::vector<double> r(max_lag + 2, 0.0);
  double best = 0.0;
  for (std::size_t lag = min_lag; lag <= max_lag + 1 && lag < n; ++lag) {
    double xy = 0.0, xx = 0.0, yy = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) {
      xy += x[i] * x[i + lag];
      xx += x[i] * x[i];
      yy += x[i + lag] * x[i + lag];
    }
    r[lag] = xx > 0.0 && yy > 0.0 ? xy / std::sqrt(xx * yy) : 0.0;
    if (lag <= max_lag) best = std::max(best, r[lag]);
  }
  if (best < cfg.voicing_threshold) return 0.0f;
  // The shortest lag close to the best one avoids sub-octave picks.
  for (std::size_t lag = min_lag + 1; lag <= max_lag; ++lag) {
    if (r[lag] < 0.9 * best || r[lag] < r[lag - 1] || r[lag] < r[lag + 1]) continue;
    const double a = r[lag - 1], b = r[lag], c = r[lag + 1];
    const double denom = a - 2.0 * b + c;
    const double shift = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
    return static_cast<float>(double(cfg.sample_rate) / (double(lag) + std::clamp(shift, -0.5, 0.5)));
  }
  return 0.0f;
}

/// Log-mel spectrogram and F0 track, one frame per hop (floor(len / hop)
/// frames). Frame t analyzes fft_size samples centred on the middle of hop
/// block t, zero-padded at the edges.
inline Features extract_features(const Audio& audio, const FeatureConfig& cfg = {}) {
  if (audio.sample_rate != cfg.sample_rate)
    throw DataError("extract_features: sample rate " + std::to_string(audio.sample_rate) + " Hz, expected " +
                    std::to_string(cfg.sample_rate));
  const std::size_t frames = audio.samples.size() / cfg.hop;
  const std::size_t n = cfg.fft_size, nb = n / 2 + 1;
  Features f{Tensor(Shape{cfg.mel_bins, frames}), std::vector<float>(frames, 0.0f)};
  if (frames == 0) return f;

  // Only the analysis matrix is used, so the kernel hop is immaterial.
  const dsp::DftKernel dft(dsp::StftConfig{n, n / 4, double(cfg.sample_rate)});
  const std::vector<float> fb = mel_filterbank(cfg);
  std::vector<float> seg(n), spec(2 * nb);
  const auto len = static_cast<std::ptrdiff_t>(audio.samples.size());
  for (std::size_t t = 0; t < frames; ++t) {
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t * cfg.hop + cfg.hop / 2) - static_cast<std::ptrdiff_t>(n / 2);
    for (std::size_t i = 0; i < n; ++i) {
      const std::ptrdiff_t j = start + static_cast<std::ptrdiff_t>(i);
      seg[i] = j >= 0 && j < len ? audio.samples[static_cast<std::size_t>(j)] : 0.0f;
    }
    dft.analyze(seg, 1, spec);
    for (std::size_t m = 0; m < cfg.mel_bins; ++m) {
      double acc = 0.0;
      for (std::size_t k = 0; k < nb; ++k)
        acc += double(fb[m * nb + k]) * std::hypot(double(spec[k]), double(spec[nb + k]));
      f.mel[m * frames + t] = static_cast<float>(std::log(std::max(acc, double(cfg.log_floor))));
    }
    f.f0[t] = autocorrelation_f0(seg, cfg);
  }
  return f;
}

}  // namespace wavestream
