// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wavestream/conv.hpp"
#include "wavestream/dsp/filterbank.hpp"
#include "wavestream/dsp/prior.hpp"
#include "wavestream/dsp/stft.hpp"
#include "wavestream/models/config.hpp"
#include "wavestream/models/weights.hpp"
#include "wavestream/ops.hpp"

namespace wavestream {

/// exp(min(log_mag, clamp_max)) * (cos phase, sin phase), elementwise.
inline void head_to_complex(std::span<const float> log_mag, std::span<const float> phase,
                            float clamp_max, std::span<float> re, std::span<float> im) {
  for (std::size_t i = 0; i < log_mag.size(); ++i) {
    const float mag = std::exp(std::min(log_mag[i], clamp_max));
    re[i] = mag * std::cos(phase[i]);
    im[i] = mag * std::sin(phase[i]);
  }
}

/// Returns [2, ...] with real parts first.
inline Tensor head_to_complex(const Tensor& log_mag, const Tensor& phase, float clamp_max) {
  if (!(log_mag.shape() == phase.shape()))
    throw ConfigError("head_to_complex: shapes " + log_mag.shape().to_string() + " and " +
                      phase.shape().to_string() + " differ");
  Tensor out(Shape{2, log_mag.size()});
  head_to_complex(log_mag.data(), phase.data(), clamp_max, out.data().first(log_mag.size()),
                  out.data().subspan(log_mag.size()));
  return out;
}

struct ReceptiveField {
  std::size_t past_frames = 0;
  std::size_t future_frames = 0;
};

struct ConvNeXtBlock {
  ConvLayer dw;
  ChannelAffine norm;
  ConvLayer pw1;
  ConvLayer pw2;
};

/// Per-stream spectral rows [count, 2 * bins] (real, then imaginary) for
/// frames [t0, t0 + count) of a head output laid out [C, H, frames].
inline void head_rows(const ModelConfig& cfg, ConstView head_out, std::size_t stream,
                      std::size_t t0, std::size_t count, std::span<float> rows) {
  const std::size_t bins = cfg.bins();
  const std::size_t frames = head_out.shape[head_out.shape.rank() - 1];
  const float* h = head_out.data.data();
  if (cfg.two_dimensional()) {
    // Channels 2s (real) and 2s+1 (imaginary), height = bins.
    for (std::size_t t = 0; t < count; ++t)
      for (std::size_t part = 0; part < 2; ++part)
        for (std::size_t k = 0; k < bins; ++k)
          rows[t * 2 * bins + part * bins + k] = h[((2 * stream + part) * bins + k) * frames + t0 + t];
    return;
  }
  // Channels [s*2*bins, +bins) log-magnitude, [+bins, +2*bins) phase.
  float log_mag[1024], phase[1024];
  for (std::size_t t = 0; t < count; ++t) {
    for (std::size_t k = 0; k < bins; ++k) {
      log_mag[k] = h[(stream * 2 * bins + k) * frames + t0 + t];
      phase[k] = h[(stream * 2 * bins + bins + k) * frames + t0 + t];
    }
    float* row = rows.data() + t * 2 * bins;
    head_to_complex(std::span<const float>(log_mag, bins), std::span<const float>(phase, bins),
                    cfg.log_magnitude_clamp, std::span<float>(row, bins),
                    std::span<float>(row + bins, bins));
  }
}

namespace detail {

// Frames of context each output block depends on, summed over the time
// convolutions on the longest path plus the spectral framing overlaps.
inline ReceptiveField receptive_field(const ModelConfig& cfg, const ConvGeometry* mel_proj,
                                      const ConvGeometry& stem, std::span<const ConvGeometry> dw) {
  std::size_t future = stem.future_frames(), past = stem.pad_left();
  if (mel_proj) {
    future += mel_proj->future_frames();
    past += mel_proj->pad_left();
  }
  for (const auto& g : dw) {
    future += g.future_frames();
    past += g.pad_left();
  }
  const std::size_t overlap = cfg.stft_config().overlap() - 1;
  past += overlap;                                    // synthesis overlap-add
  if (cfg.two_dimensional()) past += overlap;         // analysis framing
  if (cfg.multi_stream()) past += 1;                  // synthesis filter-bank tail
  if (cfg.variant == Variant::ms_wavehax) past += 1;  // analysis filter-bank history
  if (cfg.causal) {
    // Lookahead is an input delay on a strictly causal network.
    future = cfg.lookahead;
    past = past > cfg.lookahead ? past - cfg.lookahead : 0;
  }
  return {past, future};
}

}  // namespace detail

/// Receptive field of a configuration, from the layer geometry it implies.
inline ReceptiveField receptive_field(const ModelConfig& cfg) {
  cfg.validate();
  const TimePadding pad = cfg.causal ? TimePadding::causal : TimePadding::symmetric;
  auto geom = [&](std::size_t fh) {
    ConvGeometry g;
    g.filter_height = fh;
    g.filter_width = cfg.kernel_size;
    g.padding = pad;
    return g;
  };
  const std::size_t kh = cfg.two_dimensional() ? cfg.kernel_size : 1;
  const ConvGeometry mel = geom(1), stem = geom(kh);
  const std::vector<ConvGeometry> dw(cfg.num_blocks, geom(kh));
  return detail::receptive_field(cfg, cfg.two_dimensional() ? &mel : nullptr, stem, dw);
}

/// A vocoder in deploy form. Immutable after construction; forward_batch is
/// reentrant.
class Model {
 public:
  Model(const ModelConfig& cfg, const WeightSet& w) : cfg_(cfg) {
    cfg_.validate();
    const TimePadding pad = cfg_.causal ? TimePadding::causal : TimePadding::symmetric;
    const std::size_t hidden = cfg_.hidden(), k = cfg_.kernel_size;
    const std::size_t kh = cfg_.two_dimensional() ? k : 1;

    auto conv = [&](const std::string& name, std::size_t c_in, std::size_t c_out, std::size_t groups,
                    std::size_t fh, std::size_t fw, TimePadding p) {
      ConvGeometry g;
      g.in_channels = c_in;
      g.out_channels = c_out;
      g.groups = groups;
      g.filter_height = fh;
      g.filter_width = fw;
      g.padding = p;
      const Tensor& wt = w.get(name + ".weight", Shape{c_out, c_in / groups, fh, fw});
      const Tensor& b = w.get(name + ".bias", Shape{c_out});
      return ConvLayer(wt, b, g);
    };

    if (cfg_.two_dimensional())
      mel_proj_ = conv("mel_proj", cfg_.mel_bins, cfg_.mel_projection_channels() * cfg_.bins(), 1, 1, k, pad);
    stem_ = conv("stem", cfg_.trunk_input_channels(), hidden, 1, kh, k, pad);
    stem_norm_ = ChannelAffine(w.batchnorm("stem_bn", hidden));
    for (std::size_t b = 0; b < cfg_.num_blocks; ++b) {
      const std::string p = "blocks." + std::to_string(b);
      blocks_.push_back({conv(p + ".dw", hidden, hidden, hidden, kh, k, pad),
                         ChannelAffine(w.batchnorm(p + ".bn", hidden)),
                         conv(p + ".pw1", hidden, cfg_.expanded(), 1, 1, 1, TimePadding::none),
                         conv(p + ".pw2", cfg_.expanded(), hidden, 1, 1, 1, TimePadding::none)});
    }
    final_norm_ = ChannelAffine(w.batchnorm("final_bn", hidden));
    head_ = conv("head", hidden, cfg_.head_channels(), 1, 1, 1, TimePadding::none);

    dft_ = dsp::DftKernel(cfg_.stft_config());
    const Shape fshape{cfg_.streams(), cfg_.filter_taps};
    if (cfg_.variant == Variant::ms_wavehax) {
      const Tensor& a = w.get("analysis_filter", fshape);
      analysis_ = ConvLayer(dsp::analysis_conv_weights(a.data(), cfg_.streams(), cfg_.filter_taps),
                            std::nullopt, dsp::analysis_geometry(cfg_.streams(), cfg_.filter_taps));
    }
    if (cfg_.multi_stream()) synthesis_ = w.get("synthesis_filter", fshape);

    // Structural constants; a mismatch means the configuration drifted.
    if (cfg_.variant == Variant::ms_vocos && head_.geometry().out_channels != 968)
      throw ConfigError("ms-vocos head must have 968 channels");
    if (cfg_.variant == Variant::ms_wavehax &&
        (stem_.geometry().in_channels != 12 || head_.geometry().out_channels != 8))
      throw ConfigError("ms-wavehax trunk must take 12 channels and emit 8");
  }

  const ModelConfig& config() const { return cfg_; }
  const std::optional<ConvLayer>& mel_projection() const { return mel_proj_; }
  const ConvLayer& stem() const { return stem_; }
  const ChannelAffine& stem_norm() const { return stem_norm_; }
  const std::vector<ConvNeXtBlock>& blocks() const { return blocks_; }
  const ChannelAffine& final_norm() const { return final_norm_; }
  const ConvLayer& head() const { return head_; }
  const dsp::DftKernel& dft() const { return dft_; }
  const std::optional<ConvLayer>& analysis() const { return analysis_; }
  const Tensor& synthesis_filter() const { return synthesis_; }

  dsp::PriorConfig prior_config() const {
    dsp::PriorConfig p;
    p.sample_rate = double(cfg_.sample_rate);
    p.hop = cfg_.hop;
    p.seed = cfg_.noise_seed;
    return p;
  }

  ReceptiveField receptive_field() const {
    std::vector<ConvGeometry> dw;
    for (const auto& b : blocks_) dw.push_back(b.dw.geometry());
    return detail::receptive_field(cfg_, mel_proj_ ? &mel_proj_->geometry() : nullptr, stem_.geometry(), dw);
  }

  /// Whole-utterance synthesis: mel [mel_bins, T], f0 [T] -> T * hop samples.
  std::vector<float> forward_batch(const Tensor& mel, std::span<const float> f0) const {
    validate_features(mel, f0);
    const std::size_t frames = f0.size();
    if (frames == 0) return {};
    const std::size_t la = cfg_.causal ? cfg_.lookahead : 0;
    const std::size_t total = frames + la;

    ConvWorkspace ws;
    Tensor x = trunk_input(mel, f0, total, ws);
    Tensor y = stem_.forward(x, ws);
    const std::size_t plane = cfg_.trunk_height() * total;
    stem_norm_.apply(y.data(), plane);
    for (const auto& b : blocks_) {
      Tensor h = b.dw.forward(y, ws);
      b.norm.apply(h.data(), plane);
      h = b.pw1.forward(h, ws);
      gelu_inplace(h.data());
      h = b.pw2.forward(h, ws);
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += h[i];
    }
    final_norm_.apply(y.data(), plane);
    const Tensor head_out = head_.forward(y, ws);

    std::vector<float> wave = output_stage(head_out, total);
    wave.erase(wave.begin(), wave.begin() + static_cast<std::ptrdiff_t>(la * cfg_.hop));
    return wave;
  }

  void validate_features(const Tensor& mel, std::span<const float> f0) const {
    if (mel.shape().rank() != 2 || mel.dim(0) != cfg_.mel_bins || mel.dim(1) != f0.size())
      throw DataError("features: mel " + mel.shape().to_string() + " does not match [" +
                      std::to_string(cfg_.mel_bins) + ", " + std::to_string(f0.size()) + "]");
    if (!mel.all_finite()) throw DataError("features: non-finite mel value");
    for (float v : f0)
      if (!std::isfinite(v) || v < 0.0f) throw DataError("features: F0 must be finite and >= 0");
  }

 private:
  // Trunk input [C_in, H, total]; frames beyond the feature length are zero.
  Tensor trunk_input(const Tensor& mel, std::span<const float> f0, std::size_t total,
                     ConvWorkspace& ws) const {
    const std::size_t frames = f0.size();
    const std::size_t nm = cfg_.mel_bins;
    if (!cfg_.two_dimensional()) {
      Tensor x(Shape{nm + 1, 1, total});
      for (std::size_t c = 0; c < nm; ++c)
        std::copy_n(mel.raw() + c * frames, frames, x.raw() + c * total);
      std::copy(f0.begin(), f0.end(), x.raw() + nm * total);
      return x;
    }
    std::vector<float> f0_ext(total, 0.0f);
    std::copy(f0.begin(), f0.end(), f0_ext.begin());
    const std::vector<float> prior = dsp::harmonic_prior(f0_ext, prior_config());

    const std::size_t bins = cfg_.bins(), streams = cfg_.streams();
    Tensor x(Shape{cfg_.trunk_input_channels(), bins, total});
    std::vector<float> spectra(total * 2 * bins);
    auto place = [&](std::span<const float> wave, std::size_t stream) {
      const Tensor s = dsp::stft(wave, dft_, dsp::Centering::causal);
      std::copy(s.data().begin(), s.data().end(), x.raw() + 2 * stream * bins * total);
    };
    if (analysis_) {
      Tensor in(Shape{1, 1, prior.size()}, prior);
      const Tensor sub = analysis_->forward(in, ws);  // [streams, 1, total * sub_hop]
      const std::size_t len = sub.dim(2);
      for (std::size_t s = 0; s < streams; ++s) place(sub.data().subspan(s * len, len), s);
    } else {
      place(prior, 0);
    }

    Tensor mel_ext(Shape{nm, 1, total});
    for (std::size_t c = 0; c < nm; ++c)
      std::copy_n(mel.raw() + c * frames, frames, mel_ext.raw() + c * total);
    const Tensor proj = mel_proj_->forward(mel_ext, ws);
    std::copy(proj.data().begin(), proj.data().end(), x.raw() + 2 * streams * bins * total);
    return x;
  }

  std::vector<float> output_stage(const Tensor& head_out, std::size_t total) const {
    const std::size_t bins = cfg_.bins(), streams = cfg_.streams();
    std::vector<float> rows(total * 2 * bins);
    Tensor spec(Shape{2, bins, total});
    std::vector<std::vector<float>> sub(streams);
    for (std::size_t s = 0; s < streams; ++s) {
      head_rows(cfg_, head_out.view(), s, 0, total, rows);
      dsp::detail::scatter_spectra(rows, total, bins, spec.data(), total, 0, 0);
      sub[s] = dsp::istft(spec, dft_, dsp::Centering::causal);
    }
    if (!cfg_.multi_stream()) return std::move(sub[0]);
    const std::size_t len = sub[0].size();
    Tensor stacked(Shape{streams, len});
    for (std::size_t s = 0; s < streams; ++s) std::copy(sub[s].begin(), sub[s].end(), stacked.raw() + s * len);
    return transposed_conv_strided(stacked, synthesis_, streams).values();
  }

  ModelConfig cfg_;
  std::optional<ConvLayer> mel_proj_;
  ConvLayer stem_;
  ChannelAffine stem_norm_;
  std::vector<ConvNeXtBlock> blocks_;
  ChannelAffine final_norm_;
  ConvLayer head_;
  dsp::DftKernel dft_;
  std::optional<ConvLayer> analysis_;
  Tensor synthesis_;
};

inline Model build(const ModelConfig& cfg, const WeightSet& weights) { return Model(cfg, weights); }

}  // namespace wavestream
