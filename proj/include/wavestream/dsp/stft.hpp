// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wavestream/gemm.hpp"
#include "wavestream/tensor.hpp"

namespace wavestream::dsp {

struct StftConfig {
  std::size_t frame_length = 480;
  std::size_t hop = 240;
  double sample_rate = 24000.0;

  constexpr std::size_t bins() const { return frame_length / 2 + 1; }
  /// Frames a sample overlaps with, N / hop.
  constexpr std::size_t overlap() const { return frame_length / hop; }

  void validate() const {
    if (frame_length == 0 || hop == 0 || frame_length % 2 != 0)
      throw ConfigError("StftConfig: frame length must be even and non-zero");
    if (frame_length % hop != 0)
      throw ConfigError("StftConfig: hop " + std::to_string(hop) +
                        " must divide frame length " + std::to_string(frame_length));
  }
};

// Frame placement.
//  reflect: frames centred on multiples of hop, input reflect-padded by N/2.
//  causal:  frame t spans samples [tH - (N - H), tH + H), zeros before 0; the
//           inverse places frame t at [tH, tH + N) and emits exactly T * H
//           samples. Needs no future samples in either direction.
enum class Centering { reflect, causal };

/// Periodic Hann window.
inline std::vector<float> hann_window(std::size_t n) {
  std::vector<float> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = static_cast<float>(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                                    static_cast<double>(n)));
  return w;
}

/// Real-DFT analysis and synthesis matrices with the Hann window folded in.
/// Spectra are laid out as 2 * bins values: real parts, then imaginary parts.
class DftKernel {
 public:
  DftKernel() = default;
  explicit DftKernel(const StftConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t n = cfg_.frame_length;
    const std::size_t nb = cfg_.bins();
    window_ = hann_window(n);
    forward_.assign(n * 2 * nb, 0.0f);
    inverse_.assign(2 * nb * n, 0.0f);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < nb; ++k) {
        // Exact integer reduction keeps the angle argument small.
        const double ang = 2.0 * std::numbers::pi * static_cast<double>((k * i) % n) /
                           static_cast<double>(n);
        const double c = std::cos(ang), s = std::sin(ang);
        forward_[i * 2 * nb + k] = static_cast<float>(window_[i] * c);
        forward_[i * 2 * nb + nb + k] = static_cast<float>(-window_[i] * s);
        const double scale = (k == 0 || 2 * k == n) ? 1.0 : 2.0;
        inverse_[k * n + i] = static_cast<float>(scale / n * c * window_[i]);
        inverse_[(nb + k) * n + i] = static_cast<float>(-scale / n * s * window_[i]);
      }
    // Squared-window overlap-add sum, by position within a hop.
    steady_norm_.assign(cfg_.hop, 0.0f);
    for (std::size_t r = 0; r < cfg_.hop; ++r) {
      double acc = 0.0;
      for (std::size_t j = r; j < n; j += cfg_.hop) acc += double(window_[j]) * window_[j];
      steady_norm_[r] = static_cast<float>(1.0 / acc);
    }
  }

  const StftConfig& config() const { return cfg_; }
  std::span<const float> window() const { return window_; }
  /// Reciprocal of the steady-state squared-window sum at offset r in a hop.
  std::span<const float> steady_inverse_norm() const { return steady_norm_; }

  /// spectra[count, 2*bins] = frames[count, N] * forward
  void analyze(std::span<const float> frames, std::size_t count, std::span<float> spectra) const {
    gemm_into(frames, forward_, spectra, count, cfg_.frame_length, 2 * cfg_.bins());
  }
  /// frames[count, N] = spectra[count, 2*bins] * inverse (windowed)
  void synthesize(std::span<const float> spectra, std::size_t count, std::span<float> frames) const {
    gemm_into(spectra, inverse_, frames, count, 2 * cfg_.bins(), cfg_.frame_length);
  }

  std::size_t analysis_macs_per_frame() const { return cfg_.frame_length * 2 * cfg_.bins(); }
  std::size_t synthesis_macs_per_frame() const { return analysis_macs_per_frame(); }

 private:
  StftConfig cfg_;
  std::vector<float> window_;
  std::vector<float> forward_;
  std::vector<float> inverse_;
  std::vector<float> steady_norm_;
};

namespace detail {

// [count, 2*bins] rows -> channels (re, im) of a [C, bins, T] block at
// frame offset t0 and channel offset ch.
inline void scatter_spectra(std::span<const float> rows, std::size_t count, std::size_t bins,
                            std::span<float> dst, std::size_t frames_total, std::size_t t0,
                            std::size_t ch) {
  for (std::size_t t = 0; t < count; ++t)
    for (std::size_t part = 0; part < 2; ++part)
      for (std::size_t k = 0; k < bins; ++k)
        dst[((ch + part) * bins + k) * frames_total + t0 + t] = rows[t * 2 * bins + part * bins + k];
}

inline void gather_spectra(std::span<const float> src, std::size_t frames_total, std::size_t t0,
                           std::size_t ch, std::size_t count, std::size_t bins,
                           std::span<float> rows) {
  for (std::size_t t = 0; t < count; ++t)
    for (std::size_t part = 0; part < 2; ++part)
      for (std::size_t k = 0; k < bins; ++k)
        rows[t * 2 * bins + part * bins + k] = src[((ch + part) * bins + k) * frames_total + t0 + t];
}

}  // namespace detail

/// Complex spectrogram, shape [2, bins, frames] (real, imaginary).
inline Tensor stft(std::span<const float> wave, const DftKernel& kernel,
                   Centering centering = Centering::reflect) {
  const StftConfig& cfg = kernel.config();
  if (wave.empty()) throw DataError("stft: empty waveform");
  const std::size_t n = cfg.frame_length, hop = cfg.hop;
  std::vector<float> padded;
  std::size_t frames = 0;
  if (centering == Centering::reflect) {
    if (wave.size() < n)
      throw DataError("stft: waveform shorter than frame length " + std::to_string(n));
    const std::size_t pad = n / 2;
    padded.resize(wave.size() + 2 * pad);
    for (std::size_t i = 0; i < pad; ++i) {
      padded[pad - 1 - i] = wave[i + 1];
      padded[pad + wave.size() + i] = wave[wave.size() - 2 - i];
    }
    std::copy(wave.begin(), wave.end(), padded.begin() + pad);
    frames = 1 + (padded.size() - n) / hop;
  } else {
    const std::size_t pad = n - hop;
    padded.assign(pad, 0.0f);
    padded.insert(padded.end(), wave.begin(), wave.end());
    frames = wave.size() / hop;
  }
  std::vector<float> frame_rows(frames * n);
  for (std::size_t t = 0; t < frames; ++t)
    std::copy_n(padded.begin() + t * hop, n, frame_rows.begin() + t * n);
  std::vector<float> spectra(frames * 2 * cfg.bins());
  kernel.analyze(frame_rows, frames, spectra);
  Tensor out(Shape{2, cfg.bins(), frames});
  detail::scatter_spectra(spectra, frames, cfg.bins(), out.data(), frames, 0, 0);
  return out;
}

/// Inverse of stft. Reflect mode normalizes by the exact squared-window sum
/// and trims N/2 samples of centering; `length` defaults to (frames-1)*hop.
/// Causal mode normalizes by the steady-state sum and returns frames*hop.
inline std::vector<float> istft(const Tensor& spec, const DftKernel& kernel,
                                Centering centering = Centering::reflect,
                                std::optional<std::size_t> length = std::nullopt) {
  const StftConfig& cfg = kernel.config();
  if (spec.shape().rank() != 3 || spec.dim(0) != 2 || spec.dim(1) != cfg.bins())
    throw ConfigError("istft: spectrogram " + spec.shape().to_string() + " does not match " +
                      std::to_string(cfg.bins()) + " bins");
  const std::size_t frames = spec.dim(2);
  const std::size_t n = cfg.frame_length, hop = cfg.hop;
  std::vector<float> rows(frames * 2 * cfg.bins());
  detail::gather_spectra(spec.data(), frames, 0, 0, frames, cfg.bins(), rows);
  std::vector<float> frame_out(frames * n);
  kernel.synthesize(rows, frames, frame_out);

  if (centering == Centering::causal) {
    std::vector<float> acc(frames * hop + n, 0.0f);
    for (std::size_t t = 0; t < frames; ++t)
      for (std::size_t i = 0; i < n; ++i) acc[t * hop + i] += frame_out[t * n + i];
    std::vector<float> out(frames * hop);
    const auto norm = kernel.steady_inverse_norm();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = acc[i] * norm[i % hop];
    return out;
  }

  if (frames == 0) return {};
  const std::size_t total = (frames - 1) * hop + n;
  std::vector<double> acc(total, 0.0), denom(total, 0.0);
  const auto w = kernel.window();
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t i = 0; i < n; ++i) {
      acc[t * hop + i] += frame_out[t * n + i];
      denom[t * hop + i] += double(w[i]) * w[i];
    }
  const std::size_t out_len = length.value_or((frames - 1) * hop);
  const std::size_t pad = n / 2;
  if (pad + out_len > total)
    throw ConfigError("istft: requested length exceeds spectrogram span");
  std::vector<float> out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double d = denom[pad + i];
    if (d < 1e-8)
      throw NumericError("istft: window normalization below 1e-8 at sample " + std::to_string(i));
    out[i] = static_cast<float>(acc[pad + i] / d);
  }
  return out;
}

inline Tensor stft(std::span<const float> wave, const StftConfig& cfg,
                   Centering centering = Centering::reflect) {
  return stft(wave, DftKernel(cfg), centering);
}

inline std::vector<float> istft(const Tensor& spec, const StftConfig& cfg,
                                Centering centering = Centering::reflect,
                                std::optional<std::size_t> length = std::nullopt) {
  return istft(spec, DftKernel(cfg), centering, length);
}

}  // namespace wavestream::dsp
