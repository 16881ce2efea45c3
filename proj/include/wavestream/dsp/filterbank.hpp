// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "wavestream/conv.hpp"
#include "wavestream/tensor.hpp"

namespace wavestream::dsp {

class DesignError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// K-stream multirate bank. analysis[k] is applied as y_k[m] = sum_j
/// analysis[k][j] * x[K m - j]; synthesis[k] (already scaled by K) as
/// x[n] = sum_k sum_m y_k[m] * synthesis[k][n - K m].
struct FilterBank {
  std::size_t streams = 4;
  std::size_t taps = 63;
  std::vector<float> analysis;   // streams x taps
  std::vector<float> synthesis;  // streams x taps
  std::size_t group_delay = 62;
  double cutoff = 0.0;              // prototype cutoff, fraction of Nyquist
  double reconstruction_snr_db = 0.0;

  Tensor analysis_tensor() const { return Tensor(Shape{streams, taps}, analysis); }
  Tensor synthesis_tensor() const { return Tensor(Shape{streams, taps}, synthesis); }
};

namespace detail {

inline double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  for (int k = 1; k < 64; ++k) {
    term *= (x / (2.0 * k)) * (x / (2.0 * k));
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

inline std::vector<double> kaiser(std::size_t n, double beta) {
  std::vector<double> w(n, 1.0);
  if (n == 1) return w;
  const double denom = bessel_i0(beta);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0;
    w[i] = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / denom;
  }
  return w;
}

inline void modulate(std::size_t streams, std::size_t taps, double cutoff, double beta,
                     std::vector<double>& analysis, std::vector<double>& synthesis) {
  const double order = static_cast<double>(taps - 1);
  const auto win = kaiser(taps, beta);
  std::vector<double> proto(taps);
  for (std::size_t i = 0; i < taps; ++i) {
    const double n = static_cast<double>(i) - 0.5 * order;
    proto[i] = (std::fabs(n) < 1e-12 ? cutoff
                                     : std::sin(std::numbers::pi * cutoff * n) / (std::numbers::pi * n)) *
               win[i];
  }
  analysis.assign(streams * taps, 0.0);
  synthesis.assign(streams * taps, 0.0);
  const double k_f = static_cast<double>(streams);
  for (std::size_t k = 0; k < streams; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    for (std::size_t i = 0; i < taps; ++i) {
      const double arg = (2.0 * k + 1.0) * std::numbers::pi / (2.0 * k_f) *
                         (static_cast<double>(i) - 0.5 * order);
      analysis[k * taps + i] = 2.0 * proto[i] * std::cos(arg + sign * std::numbers::pi / 4.0);
      synthesis[k * taps + i] =
          k_f * 2.0 * proto[i] * std::cos(arg - sign * std::numbers::pi / 4.0);
    }
  }
}

// Direct-form analysis -> synthesis cascade without delay compensation.
template <typename T>
std::vector<double> cascade(std::span<const double> x, std::size_t streams, std::size_t taps,
                            const std::vector<T>& analysis, const std::vector<T>& synthesis) {
  const std::size_t len = x.size();
  const std::size_t sub_len = (len + streams - 1) / streams;
  std::vector<double> out(len, 0.0);
  for (std::size_t k = 0; k < streams; ++k) {
    for (std::size_t m = 0; m < sub_len; ++m) {
      double y = 0.0;
      for (std::size_t j = 0; j < taps && j <= streams * m; ++j)
        if (streams * m - j < len) y += double(analysis[k * taps + j]) * x[streams * m - j];
      for (std::size_t j = 0; j < taps && streams * m + j < len; ++j)
        out[streams * m + j] += y * double(synthesis[k * taps + j]);
    }
  }
  return out;
}

template <typename T>
double delta_error(std::size_t streams, std::size_t taps, const std::vector<T>& a,
                   const std::vector<T>& s) {
  const std::size_t delay = taps - 1;
  const std::size_t len = 4 * taps + streams;
  double err = 0.0;
  for (std::size_t p = 0; p < streams; ++p) {
    std::vector<double> x(len, 0.0);
    x[p] = 1.0;
    const auto y = cascade<T>(x, streams, taps, a, s);
    for (std::size_t n = 0; n < len; ++n) {
      const double target = (n == p + delay) ? 1.0 : 0.0;
      err += (y[n] - target) * (y[n] - target);
    }
  }
  return err;
}

}  // namespace detail

/// Reconstruction SNR (dB) of the float bank's cascade on seeded white noise,
/// after compensating the group delay.
inline double cascade_snr_db(const FilterBank& bank, std::size_t samples = 24000,
                             unsigned seed = 0) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> x(samples);
  for (auto& v : x) v = dist(rng);
  const auto y = detail::cascade<float>(x, bank.streams, bank.taps, bank.analysis, bank.synthesis);
  double sig = 0.0, err = 0.0;
  for (std::size_t n = bank.group_delay; n < samples; ++n) {
    const double ref = x[n - bank.group_delay];
    sig += ref * ref;
    err += (y[n] - ref) * (y[n] - ref);
  }
  return err == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(sig / err);
}

/// Cosine-modulated pseudo-QMF bank from a Kaiser-window lowpass prototype.
/// The cutoff is chosen by golden-section search over 0.5/K * [0.8, 1.2],
/// minimizing the cascade's delta-reconstruction error.
inline FilterBank design_pqmf(std::size_t streams = 4, std::size_t taps = 63, double beta = 9.0,
                              double min_snr_db = 40.0) {
  if (streams == 0 || taps == 0) throw ConfigError("design_pqmf: zero streams or taps");
  FilterBank bank;
  bank.streams = streams;
  bank.taps = taps;
  bank.group_delay = taps - 1;
  if (streams == 1) {
    bank.analysis.assign(taps, 0.0f);
    bank.synthesis.assign(taps, 0.0f);
    bank.analysis[0] = 1.0f;
    bank.synthesis[taps - 1] = 1.0f;
    bank.cutoff = 1.0;
    bank.reconstruction_snr_db = std::numeric_limits<double>::infinity();
    return bank;
  }

  std::vector<double> a, s;
  auto objective = [&](double cutoff) {
    detail::modulate(streams, taps, cutoff, beta, a, s);
    return detail::delta_error<double>(streams, taps, a, s);
  };
  const double centre = 0.5 / static_cast<double>(streams);
  double lo = centre * 0.8, hi = centre * 1.2;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f1 = objective(x1), f2 = objective(x2);
  for (int it = 0; it < 80 && hi - lo > 1e-10; ++it) {
    if (f1 < f2) {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = objective(x1);
    } else {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = objective(x2);
    }
  }
  bank.cutoff = 0.5 * (lo + hi);
  detail::modulate(streams, taps, bank.cutoff, beta, a, s);
  bank.analysis.assign(a.begin(), a.end());
  bank.synthesis.assign(s.begin(), s.end());
  bank.reconstruction_snr_db = cascade_snr_db(bank);
  if (bank.reconstruction_snr_db < min_snr_db)
    throw DesignError("design_pqmf: reconstruction SNR " +
                      std::to_string(bank.reconstruction_snr_db) + " dB below " +
                      std::to_string(min_snr_db) + " dB (K=" + std::to_string(streams) +
                      ", taps=" + std::to_string(taps) + ", cutoff=" +
                      std::to_string(bank.cutoff) + ", delta error=" +
                      std::to_string(detail::delta_error<float>(streams, taps, bank.analysis,
                                                                bank.synthesis)) + ")");
  return bank;
}

/// Analysis weights as a causal stride-K convolution, shape (K, 1, 1, taps).
/// Correlation form, so each filter is time-reversed.
inline Tensor analysis_conv_weights(std::span<const float> analysis, std::size_t streams,
                                    std::size_t taps) {
  Tensor w(Shape{streams, 1, 1, taps});
  for (std::size_t k = 0; k < streams; ++k)
    for (std::size_t j = 0; j < taps; ++j) w[k * taps + j] = analysis[k * taps + taps - 1 - j];
  return w;
}

inline ConvGeometry analysis_geometry(std::size_t streams, std::size_t taps) {
  ConvGeometry g;
  g.in_channels = 1;
  g.out_channels = streams;
  g.filter_width = taps;
  g.stride_width = streams;
  g.padding = TimePadding::causal;
  return g;
}

/// K subscale sequences [K, ceil(L/K)]; the tail is zero-padded to a
/// multiple of K.
inline Tensor analysis_apply(std::span<const float> wave, const FilterBank& bank) {
  Tensor input(Shape{1, 1, wave.size()}, std::vector<float>(wave.begin(), wave.end()));
  ConvLayer layer(analysis_conv_weights(bank.analysis, bank.streams, bank.taps), std::nullopt,
                  analysis_geometry(bank.streams, bank.taps));
  Tensor out = layer.forward(input);
  out.reshape(Shape{bank.streams, out.size() / bank.streams});
  return out;
}

/// Full-rate waveform of length K * subscale length (uncompensated: the
/// cascade output lags the analysis input by group_delay samples).
inline std::vector<float> synthesis_apply(const Tensor& subbands, const FilterBank& bank) {
  if (subbands.shape().rank() != 2 || subbands.dim(0) != bank.streams)
    throw ConfigError("synthesis_apply: expected [" + std::to_string(bank.streams) +
                      ", M] subbands, got " + subbands.shape().to_string());
  return transposed_conv_strided(subbands, bank.synthesis_tensor(), bank.streams).values();
}

/// analysis -> synthesis with the group delay removed; same length as input.
inline std::vector<float> reconstruct(std::span<const float> wave, const FilterBank& bank) {
  std::vector<float> padded(wave.begin(), wave.end());
  padded.resize(wave.size() + bank.group_delay, 0.0f);
  const auto full = synthesis_apply(analysis_apply(padded, bank), bank);
  return std::vector<float>(full.begin() + static_cast<std::ptrdiff_t>(bank.group_delay),
                            full.begin() + static_cast<std::ptrdiff_t>(bank.group_delay + wave.size()));
}

}  // namespace wavestream::dsp
