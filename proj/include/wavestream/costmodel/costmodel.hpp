// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wavestream/conv.hpp"
#include "wavestream/models/model.hpp"

namespace wavestream::cost {

/// slope * T + intercept, exact in integers.
struct Linear {
  std::uint64_t slope = 0;
  std::uint64_t intercept = 0;

  std::uint64_t at(std::uint64_t t) const { return slope * t + intercept; }
  Linear operator+(const Linear& o) const { return {slope + o.slope, intercept + o.intercept}; }
  friend bool operator==(const Linear&, const Linear&) = default;
};

/// im2col costs of one convolution over a chunk of T output frames.
struct CostBreakdown {
  Linear column_size;  // X = B * H_o * W_o * C_i * H_f * W_f (depthwise: channels as batch)
  Linear filter_size;  // Y = C_i * H_f * W_f * C_o (per group for depthwise)
  Linear macs;         // X * output channels per group; biases excluded
};

/// Closed-form cost of `geom` on inputs of frequency extent `height`.
/// Stride must be 1 so that W_o = T.
inline CostBreakdown im2col_cost(const ConvGeometry& geom, std::size_t height) {
  geom.validate();
  if (geom.stride_width != 1 || geom.stride_height != 1)
    throw ConfigError("im2col_cost: only stride 1 is modeled");
  const std::uint64_t per_frame = std::uint64_t(geom.column_rows(geom.out_height(height), 1)) * geom.column_width();
  const std::uint64_t cout_per_group = geom.out_channels / geom.groups;
  const std::uint64_t filter = std::uint64_t(geom.column_width()) * geom.out_channels;
  return {{per_frame, 0}, {0, filter}, {per_frame * cout_per_group, 0}};
}

struct LayerGeometry {
  std::string name;
  ConvGeometry geometry;
  std::size_t height = 1;
};

/// The six layer shapes of the residual-block cost table: Vocos (1D, 512
/// channels) and Wavehax (2D, 32 channels over 241 bins).
inline std::vector<LayerGeometry> table2_geometries() {
  auto g = [](std::size_t cin, std::size_t cout, std::size_t groups, std::size_t fh, std::size_t fw) {
    ConvGeometry c;
    c.in_channels = cin;
    c.out_channels = cout;
    c.groups = groups;
    c.filter_height = fh;
    c.filter_width = fw;
    c.padding = TimePadding::symmetric;
    return c;
  };
  return {{"DW 1D", g(512, 512, 512, 1, 7), 1},     {"PW-1st 1D", g(512, 1536, 1, 1, 1), 1},
          {"PW-2nd 1D", g(1536, 512, 1, 1, 1), 1},  {"DW 2D", g(32, 32, 32, 7, 7), 241},
          {"PW-1st 2D", g(32, 64, 1, 1, 1), 241},   {"PW-2nd 2D", g(64, 32, 1, 1, 1), 241}};
}

enum class BlockKind { vocos_1d, wavehax_2d };

inline std::string block_kind_name(BlockKind k) { return k == BlockKind::vocos_1d ? "vocos_1d" : "wavehax_2d"; }

struct LayerCost {
  std::string name;
  CostBreakdown cost;
};

/// One residual block: DW + PW-1st + PW-2nd.
struct BlockCostProfile {
  BlockKind kind = BlockKind::vocos_1d;
  std::vector<LayerCost> layers;

  /// Total matrix size X + Y summed over the layers.
  Linear aggregate() const {
    Linear a;
    for (const auto& l : layers) a = a + l.cost.column_size + l.cost.filter_size;
    return a;
  }
  Linear macs() const {
    Linear a;
    for (const auto& l : layers) a = a + l.cost.macs;
    return a;
  }
};

inline BlockCostProfile aggregate_profile(BlockKind kind) {
  BlockCostProfile p{kind, {}};
  const auto rows = table2_geometries();
  const std::size_t first = kind == BlockKind::vocos_1d ? 0 : 3;
  for (std::size_t i = first; i < first + 3; ++i)
    p.layers.push_back({rows[i].name, im2col_cost(rows[i].geometry, rows[i].height)});
  return p;
}

/// Chunk size at which two aggregate curves meet; nullopt when the slopes
/// are equal (parallel or identical lines never cross at a single T).
inline std::optional<double> crossover_chunk(const BlockCostProfile& a, const BlockCostProfile& b) {
  const Linear x = a.aggregate(), y = b.aggregate();
  if (x.slope == y.slope) return std::nullopt;
  return (double(y.intercept) - double(x.intercept)) / (double(x.slope) - double(y.slope));
}

// ---------------------------------------------------------------------------
// Whole-model counters.

/// How the spectral transforms enter MAC totals: as dense DFT matrix
/// products, or not at all.
enum class StftAccounting { transform_as_matrix, transform_excluded };

struct LayerCount {
  std::string name;
  std::uint64_t weights = 0;
  std::uint64_t biases = 0;
  std::uint64_t macs_per_frame = 0;
};

struct ModelCount {
  std::vector<LayerCount> layers;

  std::uint64_t parameters() const {
    std::uint64_t n = 0;
    for (const auto& l : layers) n += l.weights + l.biases;
    return n;
  }
  std::uint64_t macs_per_frame() const {
    std::uint64_t n = 0;
    for (const auto& l : layers) n += l.macs_per_frame;
    return n;
  }
  /// Sum over the layers whose name starts with `prefix`.
  std::uint64_t macs_per_frame(const std::string& prefix) const {
    std::uint64_t n = 0;
    for (const auto& l : layers)
      if (l.name.rfind(prefix, 0) == 0) n += l.macs_per_frame;
    return n;
  }
};

namespace detail {

inline LayerCount conv_count(const std::string& name, const ConvLayer& layer, std::size_t height) {
  const ConvGeometry& g = layer.geometry();
  const std::uint64_t w = std::uint64_t(g.out_channels) * (g.in_channels / g.groups) * g.taps();
  return {name, w, g.out_channels, w * height};
}

}  // namespace detail

/// Per-layer parameters and MACs for one 10 ms feature frame. Batch-norm
/// layers contribute their scale and shift as parameters and no MACs (they
/// fold into the neighbouring convolution at deploy time).
inline ModelCount count_model(const Model& model, StftAccounting mode = StftAccounting::transform_as_matrix) {
  const ModelConfig& cfg = model.config();
  const std::size_t h = cfg.trunk_height(), hidden = cfg.hidden();
  ModelCount c;
  auto bn = [&](const std::string& name) { c.layers.push_back({name, 2 * hidden, 0, 0}); };

  const dsp::StftConfig sc = cfg.stft_config();
  const std::uint64_t stft_frames = cfg.hop / cfg.streams() / sc.hop * cfg.streams();  // per feature frame
  const std::uint64_t dft_macs = mode == StftAccounting::transform_as_matrix
                                     ? std::uint64_t(sc.frame_length) * 2 * sc.bins() * stft_frames
                                     : 0;
  const std::uint64_t filter_macs = std::uint64_t(cfg.hop) * cfg.filter_taps;  // K streams * hop/K * taps

  if (model.analysis()) c.layers.push_back({"analysis_filter", cfg.streams() * cfg.filter_taps, 0, filter_macs});
  if (cfg.two_dimensional()) {
    c.layers.push_back({"stft", 0, 0, dft_macs});
    c.layers.push_back(detail::conv_count("mel_proj", *model.mel_projection(), 1));
  }
  c.layers.push_back(detail::conv_count("stem", model.stem(), h));
  bn("stem_bn");
  for (std::size_t b = 0; b < model.blocks().size(); ++b) {
    const auto& blk = model.blocks()[b];
    const std::string p = "blocks." + std::to_string(b);
    c.layers.push_back(detail::conv_count(p + ".dw", blk.dw, h));
    bn(p + ".bn");
    c.layers.push_back(detail::conv_count(p + ".pw1", blk.pw1, h));
    c.layers.push_back(detail::conv_count(p + ".pw2", blk.pw2, h));
  }
  bn("final_bn");
  c.layers.push_back(detail::conv_count("head", model.head(), h));
  c.layers.push_back({"istft", 0, 0, dft_macs});
  if (cfg.multi_stream()) c.layers.push_back({"synthesis_filter", cfg.streams() * cfg.filter_taps, 0, filter_macs});
  return c;
}

inline std::uint64_t count_params(const Model& model) { return count_model(model).parameters(); }

/// Total MACs to synthesize `seconds` of audio.
inline std::uint64_t count_macs(const Model& model, double seconds,
                                StftAccounting mode = StftAccounting::transform_as_matrix) {
  const auto frames = static_cast<std::uint64_t>(seconds * double(model.config().sample_rate) /
                                                 double(model.config().hop) + 0.5);
  return count_model(model, mode).macs_per_frame() * frames;
}

}  // namespace wavestream::cost
