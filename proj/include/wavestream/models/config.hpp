// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "wavestream/dsp/stft.hpp"
#include "wavestream/tensor.hpp"

namespace wavestream {

enum class Variant { vocos, ms_vocos, wavehax, ms_wavehax };

inline std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::vocos: return "vocos";
    case Variant::ms_vocos: return "ms-vocos";
    case Variant::wavehax: return "wavehax";
    case Variant::ms_wavehax: return "ms-wavehax";
  }
  return "?";
}

inline Variant parse_variant(std::string_view name) {
  if (name == "vocos") return Variant::vocos;
  if (name == "ms-vocos" || name == "ms_vocos") return Variant::ms_vocos;
  if (name == "wavehax") return Variant::wavehax;
  if (name == "ms-wavehax" || name == "ms_wavehax") return Variant::ms_wavehax;
  throw ConfigError("unknown model variant '" + std::string(name) + "'");
}

/// Vocoder variant description. Derived quantities (streams, spectral
/// geometry, channel counts) follow from the variant.
struct ModelConfig {
  Variant variant = Variant::ms_wavehax;
  bool causal = false;
  std::size_t lookahead = 0;  // frames; causal models only
  std::size_t num_blocks = 8;
  std::size_t hidden_channels = 0;  // 0: variant default
  std::size_t sample_rate = 24000;
  std::size_t hop = 240;
  std::size_t mel_bins = 100;
  std::size_t kernel_size = 7;
  std::size_t filter_taps = 63;
  float log_magnitude_clamp = 6.0f;
  std::uint64_t noise_seed = 0;

  constexpr bool two_dimensional() const { return variant == Variant::wavehax || variant == Variant::ms_wavehax; }
  constexpr bool multi_stream() const { return variant == Variant::ms_vocos || variant == Variant::ms_wavehax; }
  constexpr std::size_t streams() const { return multi_stream() ? 4 : 1; }

  constexpr std::size_t hidden() const {
    if (hidden_channels) return hidden_channels;
    switch (variant) {
      case Variant::vocos:
      case Variant::ms_vocos: return 512;
      case Variant::wavehax: return 32;
      case Variant::ms_wavehax: return 64;
    }
    return 0;
  }
  /// Pointwise expansion width inside a block: 3x for 1D, 2x for 2D.
  constexpr std::size_t expanded() const { return hidden() * (two_dimensional() ? 2 : 3); }

  constexpr std::size_t subscale_rate() const { return sample_rate / streams(); }
  constexpr std::size_t subscale_hop() const { return hop / streams(); }

  /// STFT geometry of each stream's spectrogram.
  constexpr dsp::StftConfig stft_config() const {
    switch (variant) {
      case Variant::vocos: return {4 * hop, hop, double(sample_rate)};
      case Variant::ms_vocos: return {hop, hop / 4, double(sample_rate) / 4};
      case Variant::wavehax: return {2 * hop, hop, double(sample_rate)};
      case Variant::ms_wavehax: return {hop / 2, hop / 4, double(sample_rate) / 4};
    }
    return {};
  }
  constexpr std::size_t bins() const { return stft_config().bins(); }

  /// Frequency extent of trunk activations (1 for 1D models).
  constexpr std::size_t trunk_height() const { return two_dimensional() ? bins() : 1; }

  /// Channels entering the stem convolution.
  constexpr std::size_t trunk_input_channels() const {
    return two_dimensional() ? 2 * streams() + mel_projection_channels() : mel_bins + 1;
  }
  /// Channels the mel projection contributes per frequency bin (2D only).
  constexpr std::size_t mel_projection_channels() const {
    return two_dimensional() ? (multi_stream() ? 4 : 2) : 0;
  }
  constexpr std::size_t head_channels() const {
    return two_dimensional() ? 2 * streams() : 2 * streams() * bins();
  }

  constexpr std::size_t future_padding_frames() const { return (kernel_size - 1) / 2; }

  void validate() const {
    if (!causal && lookahead != 0)
      throw ConfigError("lookahead requires a causal model");
    if (lookahead > 1) throw ConfigError("lookahead must be 0 or 1");
    if (num_blocks == 0) throw ConfigError("num_blocks must be positive");
    if (sample_rate == 0 || hop * 100 != sample_rate)
      throw ConfigError("frame shift must be exactly 10 ms");
    if (hop % (4 * streams()) != 0)
      throw ConfigError("hop must be divisible by 4 * streams");
    if (kernel_size % 2 == 0) throw ConfigError("kernel size must be odd");
    if (mel_bins == 0) throw ConfigError("mel_bins must be positive");
    stft_config().validate();
  }

  std::string name() const {
    std::string s(variant_name(variant));
    if (causal) s += "-causal-la" + std::to_string(lookahead);
    return s;
  }
};

namespace detail {
constexpr ModelConfig default_config(Variant v) {
  ModelConfig c;
  c.variant = v;
  return c;
}
}  // namespace detail

// Structural constants of the default variants, checked at compile time.
static_assert(detail::default_config(Variant::ms_vocos).head_channels() == 968);
static_assert(detail::default_config(Variant::ms_vocos).stft_config().frame_length == 240);
static_assert(detail::default_config(Variant::ms_vocos).stft_config().hop == 60);
static_assert(detail::default_config(Variant::ms_wavehax).trunk_input_channels() == 12);
static_assert(detail::default_config(Variant::ms_wavehax).head_channels() == 8);
static_assert(detail::default_config(Variant::ms_wavehax).hidden() == 64);
static_assert(detail::default_config(Variant::wavehax).hidden() == 32);
static_assert(detail::default_config(Variant::wavehax).bins() == 241);
static_assert(detail::default_config(Variant::ms_wavehax).filter_taps == 63);

}  // namespace wavestream
