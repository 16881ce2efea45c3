// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <vector>

#include "wavestream/models/model.hpp"
#include "wavestream/streaming/ring_buffer.hpp"

namespace wavestream {

namespace detail {

// Time context of one layer as a compact [C, H, width] block, so the active
// window is always a plain tensor view. Between steps it holds exactly
// `context` frames; a step appends new frames, runs, then drops the front.
class FrameWindow {
 public:
  FrameWindow() = default;
  FrameWindow(std::size_t channels, std::size_t height, std::size_t context, std::size_t max_new)
      : c_(channels), h_(height), ctx_(context), max_(max_new), width_(context),
        data_(channels * height * (context + max_new), 0.0f) {}

  std::size_t context() const { return ctx_; }
  std::size_t width() const { return width_; }
  std::size_t pending() const { return width_ - ctx_; }

  /// Appends n zero frames to every row.
  void extend(std::size_t n) {
    if (width_ + n > ctx_ + max_) throw StateError("stream window overflow");
    const std::size_t nw = width_ + n;
    float* d = data_.data();
    for (std::size_t r = c_ * h_; r-- > 0;) {
      if (r) std::memmove(d + r * nw, d + r * width_, width_ * sizeof(float));
      std::fill_n(d + r * nw + width_, n, 0.0f);
    }
    width_ = nw;
  }

  /// Drops the oldest m frames.
  void consume_front(std::size_t m) {
    const std::size_t keep = width_ - m;
    float* d = data_.data();
    for (std::size_t r = 0; r < c_ * h_; ++r) std::memmove(d + r * keep, d + r * width_ + m, keep * sizeof(float));
    width_ = keep;
  }
  void commit() { consume_front(width_ - ctx_); }

  float* at(std::size_t c, std::size_t h, std::size_t frame) { return data_.data() + (c * h_ + h) * width_ + frame; }
  const float* at(std::size_t c, std::size_t h, std::size_t frame) const {
    return data_.data() + (c * h_ + h) * width_ + frame;
  }
  std::span<float> span() { return {data_.data(), c_ * h_ * width_}; }
  ConstView view() const { return {Shape{c_, h_, width_}, std::span<const float>(data_.data(), c_ * h_ * width_)}; }
  std::size_t bytes() const { return data_.capacity() * sizeof(float); }

 private:
  std::size_t c_ = 0, h_ = 0, ctx_ = 0, max_ = 0, width_ = 0;
  std::vector<float> data_;
};

// A time convolution fed incrementally. Symmetric layers run as causal ones
// over a zero-primed window and skip their first `future` outputs, so frame
// j of the output stream always means frame j of the input stream.
class StreamConv {
 public:
  StreamConv() = default;
  StreamConv(const ConvLayer& layer, std::size_t height, std::size_t max_new, std::size_t tile)
      : layer_(&layer),
        window_(layer.geometry().in_channels, height, layer.geometry().filter_width - 1, max_new),
        future_(layer.geometry().future_frames()),
        skip_(future_),
        tile_(tile),
        height_(height) {}

  FrameWindow& window() { return window_; }
  const FrameWindow& window() const { return window_; }
  std::size_t future() const { return future_; }
  void flush() { window_.extend(future_); }

  /// Runs over the pending frames; returns the number of output frames.
  std::size_t compute(Tensor& out, ConvWorkspace& ws) {
    const std::size_t raw = window_.pending();
    const std::size_t s = std::min(skip_, raw);
    skip_ -= s;
    first_ = s;
    const std::size_t m = raw - s;
    out.resize(Shape{layer_->geometry().out_channels, height_, m});
    for (std::size_t i0 = 0; i0 < m; i0 += tile_)
      layer_->run(window_.view(), TimePadding::none, s + i0, s + std::min(m, i0 + tile_), out.view(), i0, ws);
    return m;
  }

  /// Window frame aligned with output j of the last compute().
  std::size_t aligned(std::size_t j) const { return first_ + j + window_.context() - future_; }

 private:
  const ConvLayer* layer_ = nullptr;
  FrameWindow window_;
  std::size_t future_ = 0, skip_ = 0, first_ = 0, tile_ = 1, height_ = 1;
};

inline std::size_t tile_frames(const ConvLayer& layer, std::size_t height, std::size_t max_new) {
  constexpr std::size_t kBudget = std::size_t{1} << 21;
  const auto& g = layer.geometry();
  const std::size_t per_frame = g.column_rows(height, 1) * g.column_width();
  return std::clamp<std::size_t>(kBudget / std::max<std::size_t>(1, per_frame), 1, max_new);
}

}  // namespace detail

/// Incremental synthesis over one utterance. Emitted samples are final;
/// concatenated, they equal Model::forward_batch on the same features.
///
/// The span overloads of process_chunk and finish never allocate. A session
/// has a single owner and may move between threads between calls.
class StreamSession {
 public:
  StreamSession(const Model& model, std::size_t chunk)
      : model_(&model), cfg_(model.config()), chunk_(chunk) {
    if (chunk == 0) throw ConfigError("stream: chunk size must be >= 1");
    const std::size_t kw = cfg_.kernel_size;
    future_ = model.receptive_field().future_frames;
    la_ = cfg_.causal ? cfg_.lookahead : 0;
    drop_ = la_ * cfg_.hop;
    height_ = cfg_.trunk_height();
    max_new_ = chunk_ + future_ + kw;
    const std::size_t hidden = cfg_.hidden();
    const std::size_t h = height_;

    std::size_t col_need = 0, prod_need = 0;
    auto need = [&](const ConvLayer& l, std::size_t height, std::size_t frames) {
      const auto [c, p] = l.workspace_need(height, frames);
      col_need = std::max(col_need, c);
      prod_need = std::max(prod_need, p);
    };
    auto make = [&](const ConvLayer& l, std::size_t height) {
      const std::size_t tile = detail::tile_frames(l, height, max_new_);
      need(l, height, tile);
      return detail::StreamConv(l, height, max_new_, tile);
    };

    if (model.mel_projection()) {
      mel_proj_ = make(*model.mel_projection(), 1);
      mel_out_.reserve(model.mel_projection()->geometry().out_channels * max_new_);
    }
    stem_ = make(model.stem(), h);
    for (const auto& b : model.blocks()) {
      dw_.push_back(make(b.dw, h));
      need(b.pw1, h, max_new_);
      need(b.pw2, h, max_new_);
    }
    need(model.head(), h, max_new_);

    x_.reserve(hidden * h * max_new_);
    dw_out_.reserve(hidden * h * max_new_);
    h1_.reserve(cfg_.expanded() * h * max_new_);
    head_out_.reserve(cfg_.head_channels() * h * max_new_);

    const dsp::StftConfig sc = cfg_.stft_config();
    const std::size_t n = sc.frame_length, hs = sc.hop, bins = sc.bins(), streams = cfg_.streams();
    const std::size_t max_in = std::max<std::size_t>(chunk_, la_);

    zero_f0_.assign(std::max<std::size_t>(1, la_), 0.0f);
    if (cfg_.two_dimensional()) {
      prior_buf_.assign(max_in * cfg_.hop, 0.0f);
      if (model.analysis()) {
        const std::size_t taps = cfg_.filter_taps;
        analysis_hist_ = RingBuffer<float>(taps - 1);
        analysis_in_.reserve(taps - 1 + max_in * cfg_.hop);
        analysis_out_.reserve(streams * max_in * hs);
        need(*model.analysis(), 1, max_in * hs);
      }
      frame_hist_.assign(streams, RingBuffer<float>(n - hs));
      segment_.assign(n - hs + max_in * hs, 0.0f);
      frame_rows_.assign(max_in * n, 0.0f);
      spec_rows_.assign(max_in * 2 * bins, 0.0f);
      spec_fifo_ = detail::FrameWindow(2 * streams, bins, 0, max_new_);
    }

    synth_rows_.assign(max_new_ * 2 * bins, 0.0f);
    synth_frames_.assign(max_new_ * n, 0.0f);
    ola_tail_.assign(streams, std::vector<float>(n - hs, 0.0f));
    ola_work_.assign(max_new_ * hs + n, 0.0f);
    sub_.assign(streams, std::vector<float>(max_new_ * hs, 0.0f));
    if (cfg_.multi_stream()) {
      fb_carry_.assign(cfg_.filter_taps - 1, 0.0f);
      fb_work_.assign(streams * max_new_ * hs + cfg_.filter_taps, 0.0f);
    }
    ws_.reserve(col_need, prod_need);
  }

  std::size_t chunk() const { return chunk_; }
  /// Frames of input that must arrive before a frame's audio is emitted.
  std::size_t future_frames() const { return future_; }
  std::uint64_t frames_consumed() const { return consumed_; }
  std::uint64_t samples_emitted() const { return emitted_; }
  bool finished() const { return finished_; }
  std::size_t max_chunk_samples() const { return chunk_ * cfg_.hop; }
  std::size_t max_finish_samples() const { return future_ * cfg_.hop; }

  /// Feeds mel [mel_bins, n] and f0 [n] with 1 <= n <= chunk (a short final
  /// chunk is allowed). Writes the newly final samples to `out` and returns
  /// their count; `out` must hold max_chunk_samples().
  std::size_t process_chunk(ConstView mel, std::span<const float> f0, std::span<float> out) {
    if (finished_) throw StateError("stream: process_chunk after finish");
    const std::size_t n = f0.size();
    if (mel.shape.rank() != 2 || mel.shape[0] != cfg_.mel_bins || mel.shape[1] != n)
      throw DataError("stream: mel chunk " + mel.shape.to_string() + " does not match f0 length " +
                      std::to_string(n));
    if (n == 0 || n > chunk_)
      throw DataError("stream: chunk carries " + std::to_string(n) + " frames, expected 1.." +
                      std::to_string(chunk_));
    for (float v : mel.data)
      if (!std::isfinite(v)) throw DataError("stream: non-finite mel value");
    for (float v : f0)
      if (!std::isfinite(v) || v < 0.0f) throw DataError("stream: F0 must be finite and >= 0");
    if (out.size() < n * cfg_.hop) throw ConfigError("stream: output span too small");
    consumed_ += n;
    return advance(mel.data.data(), n, f0.data(), n, false, out);
  }

  std::vector<float> process_chunk(const Tensor& mel, std::span<const float> f0) {
    std::vector<float> out(f0.size() * cfg_.hop);
    out.resize(process_chunk(mel.view(), f0, out));
    return out;
  }

  /// Flushes every cache. `out` must hold max_finish_samples().
  std::size_t finish(std::span<float> out) {
    if (finished_) throw StateError("stream: finish called twice");
    if (out.size() < max_finish_samples()) throw ConfigError("stream: output span too small");
    finished_ = true;
    if (consumed_ == 0) return 0;
    if (cfg_.causal) return la_ ? advance(nullptr, 0, zero_f0_.data(), la_, false, out) : 0;
    return advance(nullptr, 0, nullptr, 0, true, out);
  }

  std::vector<float> finish() {
    std::vector<float> out(max_finish_samples());
    out.resize(finish(std::span<float>(out)));
    return out;
  }

  /// Bytes held by caches and scratch; fixed at construction.
  std::size_t footprint_bytes() const {
    auto vb = [](const auto& v) { return v.capacity() * sizeof(float); };
    auto tb = [](const Tensor& t) { return t.capacity() * sizeof(float); };
    std::size_t b = ws_.bytes() + stem_.window().bytes() + tb(x_) + tb(dw_out_) + tb(h1_) + tb(head_out_) +
                    tb(mel_out_) + tb(analysis_in_) + tb(analysis_out_) + vb(prior_buf_) + vb(zero_f0_) +
                    vb(segment_) + vb(frame_rows_) + vb(spec_rows_) + spec_fifo_.bytes() + vb(synth_rows_) +
                    vb(synth_frames_) + vb(ola_work_) + vb(fb_carry_) + vb(fb_work_) +
                    analysis_hist_.bytes();
    if (mel_proj_) b += mel_proj_->window().bytes();
    for (const auto& d : dw_) b += d.window().bytes();
    for (const auto& r : frame_hist_) b += r.bytes();
    for (const auto& v : ola_tail_) b += vb(v);
    for (const auto& v : sub_) b += vb(v);
    return b;
  }

 private:
  // Pushes n feature frames (mel == nullptr: zero mel) through the graph.
  // With `flush`, every symmetric layer is closed with zero future frames.
  std::size_t advance(const float* mel, std::size_t mel_stride, const float* f0, std::size_t n, bool flush,
                      std::span<float> out) {
    const std::size_t nm = cfg_.mel_bins;
    if (!cfg_.two_dimensional()) {
      auto& w = stem_.window();
      w.extend(n);
      const std::size_t c0 = w.context();
      if (mel)
        for (std::size_t c = 0; c < nm; ++c) std::copy_n(mel + c * mel_stride, n, w.at(c, 0, c0));
      if (f0) std::copy_n(f0, n, w.at(nm, 0, c0));
      if (flush) stem_.flush();
    } else {
      spectral_front(f0, n);
      auto& mw = mel_proj_->window();
      mw.extend(n);
      if (mel)
        for (std::size_t c = 0; c < nm; ++c) std::copy_n(mel + c * mel_stride, n, mw.at(c, 0, mw.context()));
      if (flush) mel_proj_->flush();
      const std::size_t mp = mel_proj_->compute(mel_out_, ws_);
      mw.commit();

      const std::size_t bins = cfg_.bins(), spec_ch = 2 * cfg_.streams();
      auto& w = stem_.window();
      w.extend(mp);
      const std::size_t c0 = w.context();
      for (std::size_t c = 0; c < spec_ch; ++c)
        for (std::size_t k = 0; k < bins; ++k) std::copy_n(spec_fifo_.at(c, k, 0), mp, w.at(c, k, c0));
      spec_fifo_.consume_front(mp);
      for (std::size_t c = 0; c < cfg_.mel_projection_channels(); ++c)
        for (std::size_t k = 0; k < bins; ++k)
          std::copy_n(mel_out_.raw() + (c * bins + k) * mp, mp, w.at(spec_ch + c, k, c0));
      if (flush) stem_.flush();
    }

    const std::size_t h = height_, hidden = cfg_.hidden();
    std::size_t m = stem_.compute(x_, ws_);
    stem_.window().commit();
    model_->stem_norm().apply(x_.data(), h * m);

    const auto& blocks = model_->blocks();
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      auto& dw = dw_[b];
      auto& w = dw.window();
      w.extend(m);
      for (std::size_t c = 0; c < hidden; ++c)
        for (std::size_t r = 0; r < h; ++r) std::copy_n(x_.raw() + (c * h + r) * m, m, w.at(c, r, w.context()));
      if (flush) dw.flush();
      const std::size_t m2 = dw.compute(dw_out_, ws_);
      blocks[b].norm.apply(dw_out_.data(), h * m2);
      h1_.resize(Shape{cfg_.expanded(), h, m2});
      blocks[b].pw1.run(dw_out_.view(), TimePadding::none, 0, m2, h1_.view(), 0, ws_);
      gelu_inplace(h1_.data());
      x_.resize(Shape{hidden, h, m2});
      blocks[b].pw2.run(h1_.view(), TimePadding::none, 0, m2, x_.view(), 0, ws_);
      for (std::size_t c = 0; c < hidden; ++c)
        for (std::size_t r = 0; r < h; ++r) {
          float* y = x_.raw() + (c * h + r) * m2;
          const float* res = w.at(c, r, dw.aligned(0));
          for (std::size_t j = 0; j < m2; ++j) y[j] += res[j];
        }
      w.commit();
      m = m2;
    }
    model_->final_norm().apply(x_.data(), h * m);
    head_out_.resize(Shape{cfg_.head_channels(), h, m});
    model_->head().run(x_.view(), TimePadding::none, 0, m, head_out_.view(), 0, ws_);
    return output_stage(m, out);
  }

  // Harmonic prior -> (analysis bank) -> per-stream causal STFT frames,
  // appended to the spectral FIFO that waits for the mel projection.
  void spectral_front(const float* f0, std::size_t n) {
    spec_fifo_.extend(n);
    if (n == 0) return;
    const std::size_t hop = cfg_.hop;
    const dsp::PriorConfig pc = model_->prior_config();
    std::span<float> prior(prior_buf_.data(), n * hop);
    dsp::harmonic_prior_step(std::span<const float>(f0, n), pc, prior_state_, prior);

    const dsp::DftKernel& dft = model_->dft();
    const std::size_t frame = dft.config().frame_length, hs = dft.config().hop, bins = dft.config().bins();
    const std::size_t len = n * hs, hist = frame - hs;
    const float* streams_src = prior.data();
    if (model_->analysis()) {
      const std::size_t taps = cfg_.filter_taps;
      analysis_in_.resize(Shape{1, 1, taps - 1 + n * hop});
      analysis_hist_.copy_last(taps - 1, analysis_in_.data());
      std::copy(prior.begin(), prior.end(), analysis_in_.raw() + taps - 1);
      analysis_hist_.push(std::span<const float>(prior));
      analysis_out_.resize(Shape{cfg_.streams(), 1, len});
      model_->analysis()->run(analysis_in_.view(), TimePadding::none, 0, len, analysis_out_.view(), 0, ws_);
      streams_src = analysis_out_.raw();
    }
    for (std::size_t s = 0; s < cfg_.streams(); ++s) {
      const float* src = streams_src + s * len;
      frame_hist_[s].copy_last(hist, segment_);
      std::copy_n(src, len, segment_.begin() + static_cast<std::ptrdiff_t>(hist));
      frame_hist_[s].push(std::span<const float>(src, len));
      for (std::size_t t = 0; t < n; ++t)
        std::copy_n(segment_.begin() + static_cast<std::ptrdiff_t>(t * hs), frame, frame_rows_.begin() + static_cast<std::ptrdiff_t>(t * frame));
      dft.analyze(frame_rows_, n, spec_rows_);
      dsp::detail::scatter_spectra(spec_rows_, n, bins, spec_fifo_.span(), spec_fifo_.width(),
                                   spec_fifo_.width() - n, 2 * s);
    }
  }

  // Head frames -> per-stream overlap-add -> (synthesis bank) -> out.
  std::size_t output_stage(std::size_t m, std::span<float> out) {
    if (m == 0) return 0;
    const dsp::DftKernel& dft = model_->dft();
    const std::size_t frame = dft.config().frame_length, hs = dft.config().hop;
    const std::size_t hist = frame - hs, len = m * hs;
    const auto norm = dft.steady_inverse_norm();
    for (std::size_t s = 0; s < cfg_.streams(); ++s) {
      head_rows(cfg_, head_out_.view(), s, 0, m, synth_rows_);
      dft.synthesize(synth_rows_, m, synth_frames_);
      float* work = ola_work_.data();
      std::copy(ola_tail_[s].begin(), ola_tail_[s].end(), work);
      std::fill_n(work + hist, len, 0.0f);
      for (std::size_t t = 0; t < m; ++t)
        for (std::size_t i = 0; i < frame; ++i) work[t * hs + i] += synth_frames_[t * frame + i];
      for (std::size_t i = 0; i < len; ++i) sub_[s][i] = work[i] * norm[i % hs];
      std::copy_n(work + len, hist, ola_tail_[s].begin());
    }

    const float* samples = sub_[0].data();
    std::size_t count = len;
    if (cfg_.multi_stream()) {
      const std::size_t k = cfg_.streams(), taps = cfg_.filter_taps;
      const float* g = model_->synthesis_filter().raw();
      count = k * len;
      float* work = fb_work_.data();
      std::copy(fb_carry_.begin(), fb_carry_.end(), work);
      std::fill_n(work + taps - 1, count, 0.0f);
      for (std::size_t q = 0; q < len; ++q)
        for (std::size_t c = 0; c < k; ++c) {
          const float u = sub_[c][q];
          const float* gc = g + c * taps;
          float* dst = work + q * k;
          for (std::size_t j = 0; j < taps; ++j) dst[j] += u * gc[j];
        }
      std::copy_n(work + count, taps - 1, fb_carry_.begin());
      samples = work;
    }

    const std::size_t skip = std::min(drop_, count);
    drop_ -= skip;
    std::copy(samples + skip, samples + count, out.begin());
    emitted_ += count - skip;
    return count - skip;
  }

  const Model* model_;
  ModelConfig cfg_;
  std::size_t chunk_, future_ = 0, la_ = 0, drop_ = 0, height_ = 1, max_new_ = 0;
  bool finished_ = false;
  std::uint64_t consumed_ = 0, emitted_ = 0;

  ConvWorkspace ws_;
  std::optional<detail::StreamConv> mel_proj_;
  detail::StreamConv stem_;
  std::vector<detail::StreamConv> dw_;
  Tensor mel_out_, x_, dw_out_, h1_, head_out_;

  dsp::PriorState prior_state_;
  std::vector<float> prior_buf_, zero_f0_;
  RingBuffer<float> analysis_hist_;
  Tensor analysis_in_, analysis_out_;
  std::vector<RingBuffer<float>> frame_hist_;
  std::vector<float> segment_, frame_rows_, spec_rows_;
  detail::FrameWindow spec_fifo_;

  std::vector<float> synth_rows_, synth_frames_, ola_work_, fb_carry_, fb_work_;
  std::vector<std::vector<float>> ola_tail_, sub_;
};

/// Latency components of streaming synthesis, in milliseconds.
struct LatencyReport {
  double chunk_buffering_ms = 0.0;
  double algorithmic_lookahead_ms = 0.0;
  double synthesis_compute_ms = 0.0;
  double total_ms = 0.0;
};

/// Waiting for a full chunk costs (chunk - 1) frames; future context costs
/// one frame each. The compute term is measured elsewhere and passed in.
inline LatencyReport latency_report(const ModelConfig& cfg, std::size_t chunk, double compute_ms = 0.0) {
  if (chunk == 0) throw ConfigError("latency_report: chunk size must be >= 1");
  const double frame_ms = 1000.0 * double(cfg.hop) / double(cfg.sample_rate);
  LatencyReport r;
  r.chunk_buffering_ms = double(chunk - 1) * frame_ms;
  r.algorithmic_lookahead_ms = double(receptive_field(cfg).future_frames) * frame_ms;
  r.synthesis_compute_ms = compute_ms;
  r.total_ms = r.chunk_buffering_ms + r.algorithmic_lookahead_ms + r.synthesis_compute_ms;
  return r;
}

}  // namespace wavestream
