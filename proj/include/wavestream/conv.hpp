// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wavestream/gemm.hpp"
#include "wavestream/tensor.hpp"

namespace wavestream {

// Padding applied along the time (width, innermost) axis. The height axis,
// which carries frequency in 2D models, is always padded symmetrically.
enum class TimePadding { causal, symmetric, none };

/// Symbolic convolution shape. Tensors are (B, C, H, W) with W = time;
/// weights are (C_o, C_i / groups, H_f, W_f). Dilation is always 1.
struct ConvGeometry {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t groups = 1;
  std::size_t filter_height = 1;
  std::size_t filter_width = 1;
  std::size_t stride_height = 1;
  std::size_t stride_width = 1;
  TimePadding padding = TimePadding::none;

  bool depthwise() const { return groups > 1; }
  std::size_t taps() const { return filter_height * filter_width; }

  void validate() const {
    if (in_channels == 0 || out_channels == 0 || groups == 0 || filter_height == 0 ||
        filter_width == 0 || stride_width == 0)
      throw ConfigError("ConvGeometry: zero extent");
    if (in_channels % groups != 0 || out_channels % groups != 0)
      throw ConfigError("ConvGeometry: channels not divisible by groups");
    if (groups != 1 && (groups != in_channels || out_channels != in_channels))
      throw ConfigError("ConvGeometry: only standard (groups=1) and depthwise "
                        "(groups=C_i=C_o) convolutions are supported");
    if (stride_height != 1) throw ConfigError("ConvGeometry: height stride must be 1");
    if (filter_height % 2 == 0)
      throw ConfigError("ConvGeometry: symmetric height padding needs an odd filter height");
    if (padding == TimePadding::symmetric && filter_width % 2 == 0)
      throw ConfigError("ConvGeometry: symmetric time padding needs an odd filter width");
  }

  std::size_t pad_top() const { return (filter_height - 1) / 2; }
  std::size_t pad_left() const {
    switch (padding) {
      case TimePadding::causal: return filter_width - 1;
      case TimePadding::symmetric: return (filter_width - 1) / 2;
      case TimePadding::none: return 0;
    }
    return 0;
  }
  std::size_t pad_right() const {
    return padding == TimePadding::symmetric ? (filter_width - 1) / 2 : 0;
  }
  /// Frames of future input each output frame depends on.
  std::size_t future_frames() const { return pad_right(); }

  std::size_t out_height(std::size_t in_height) const { return in_height; }
  std::size_t out_width(std::size_t in_width) const {
    const std::size_t padded = in_width + pad_left() + pad_right();
    if (padded < filter_width) return 0;
    return (padded - filter_width) / stride_width + 1;
  }

  /// im2col matrix width: C_i * H_f * W_f, or H_f * W_f per channel when
  /// depthwise (channel dimension folded into the batch).
  std::size_t column_width() const {
    return depthwise() ? taps() : in_channels * taps();
  }
  std::size_t column_rows(std::size_t h_out, std::size_t w_out) const {
    return (depthwise() ? batch * in_channels : batch) * h_out * w_out;
  }
};

namespace detail {

struct Dims4 {
  std::size_t b, c, h, w;
};

inline Dims4 dims4(const Shape& s) {
  if (s.rank() == 4) return {s[0], s[1], s[2], s[3]};
  if (s.rank() == 3) return {1, s[0], s[1], s[2]};
  if (s.rank() == 2) return {1, s[0], 1, s[1]};
  throw ConfigError("conv: expected rank 2, 3 or 4 input, got " + s.to_string());
}

inline void check_input(const Dims4& d, const ConvGeometry& g) {
  if (d.b != g.batch || d.c != g.in_channels)
    throw ConfigError("conv: input (B=" + std::to_string(d.b) + ", C=" + std::to_string(d.c) +
                      ") does not match geometry (B=" + std::to_string(g.batch) +
                      ", C_i=" + std::to_string(g.in_channels) + ")");
}

}  // namespace detail

/// Writes the im2col matrix for output frames [w_begin, w_end) into `out`.
/// Row order is (b, h, w) for standard convolution and (b, c, h, w) for
/// depthwise; column order is (c, i, j), respectively (i, j). Padding is
/// virtual: out-of-range taps read zero. Returns the element count written.
inline std::size_t im2col_range(ConstView input, const ConvGeometry& g, std::size_t w_begin,
                                std::size_t w_end, std::span<float> out) {
  const auto d = detail::dims4(input.shape);
  detail::check_input(d, g);
  const std::size_t h_out = g.out_height(d.h);
  const std::size_t nw = w_end - w_begin;
  const std::size_t cols = g.column_width();
  const std::size_t rows = g.column_rows(h_out, nw);
  const std::size_t total = rows * cols;
  if (out.size() < total) throw ConfigError("im2col: destination too small");

  const float* x = input.data.data();
  const std::ptrdiff_t pad_t = static_cast<std::ptrdiff_t>(g.pad_top());
  const std::ptrdiff_t pad_l = static_cast<std::ptrdiff_t>(g.pad_left());
  const auto H = static_cast<std::ptrdiff_t>(d.h);
  const auto W = static_cast<std::ptrdiff_t>(d.w);

  auto fill_patch = [&](float* dst, const float* plane, std::size_t h, std::size_t w) {
    for (std::size_t i = 0; i < g.filter_height; ++i) {
      const std::ptrdiff_t hin = static_cast<std::ptrdiff_t>(h + i) - pad_t;
      const bool hvalid = hin >= 0 && hin < H;
      for (std::size_t j = 0; j < g.filter_width; ++j) {
        const std::ptrdiff_t win =
            static_cast<std::ptrdiff_t>(w * g.stride_width + j) - pad_l;
        *dst++ = (hvalid && win >= 0 && win < W) ? plane[hin * W + win] : 0.0f;
      }
    }
  };

  float* dst = out.data();
  const std::size_t plane = d.h * d.w;
  if (g.depthwise()) {
    for (std::size_t b = 0; b < d.b; ++b)
      for (std::size_t c = 0; c < d.c; ++c) {
        const float* p = x + (b * d.c + c) * plane;
        for (std::size_t h = 0; h < h_out; ++h)
          for (std::size_t w = w_begin; w < w_end; ++w) {
            fill_patch(dst, p, h, w);
            dst += cols;
          }
      }
  } else {
    for (std::size_t b = 0; b < d.b; ++b)
      for (std::size_t h = 0; h < h_out; ++h)
        for (std::size_t w = w_begin; w < w_end; ++w)
          for (std::size_t c = 0; c < d.c; ++c) {
            fill_patch(dst, x + (b * d.c + c) * plane, h, w);
            dst += g.taps();
          }
  }
  return total;
}

/// Full im2col matrix, shape [rows, column_width].
inline Tensor im2col(const Tensor& input, const ConvGeometry& g) {
  g.validate();
  const auto d = detail::dims4(input.shape());
  detail::check_input(d, g);
  const std::size_t h_out = g.out_height(d.h);
  const std::size_t w_out = g.out_width(d.w);
  Tensor out(Shape{g.column_rows(h_out, w_out), g.column_width()});
  im2col_range(input.view(), g, 0, w_out, out.data());
  return out;
}

/// Weights (C_o, C_i/groups, H_f, W_f) rearranged into the GeMM filter
/// matrix (C_i H_f W_f, C_o); depthwise filters stay as C_o contiguous
/// (H_f W_f) vectors.
inline std::vector<float> pack_filter(const Tensor& weights, const ConvGeometry& g) {
  const Shape expected{g.out_channels, g.in_channels / g.groups, g.filter_height,
                       g.filter_width};
  if (!(weights.shape() == expected))
    throw ConfigError("conv: weights " + weights.shape().to_string() + " expected " +
                      expected.to_string());
  if (g.depthwise()) return weights.values();
  const std::size_t k = g.column_width();
  std::vector<float> packed(k * g.out_channels);
  for (std::size_t o = 0; o < g.out_channels; ++o)
    for (std::size_t r = 0; r < k; ++r) packed[r * g.out_channels + o] = weights[o * k + r];
  return packed;
}

/// Scratch owned by the caller so repeated convolutions do not allocate.
struct ConvWorkspace {
  std::vector<float> columns;
  std::vector<float> product;

  void reserve(std::size_t column_elems, std::size_t product_elems) {
    if (columns.size() < column_elems) columns.resize(column_elems);
    if (product.size() < product_elems) product.resize(product_elems);
  }
  std::size_t bytes() const {
    return (columns.capacity() + product.capacity()) * sizeof(float);
  }
};

/// A convolution in deploy form: packed filter matrix plus bias.
class ConvLayer {
 public:
  ConvLayer() = default;
  ConvLayer(const Tensor& weights, std::optional<Tensor> bias, ConvGeometry geom)
      : geom_(geom) {
    geom_.validate();
    packed_ = pack_filter(weights, geom_);
    bias_.assign(geom_.out_channels, 0.0f);
    if (bias) {
      if (bias->size() != geom_.out_channels)
        throw ConfigError("conv: bias length " + std::to_string(bias->size()) +
                          " expected " + std::to_string(geom_.out_channels));
      std::copy(bias->data().begin(), bias->data().end(), bias_.begin());
    }
  }

  const ConvGeometry& geometry() const { return geom_; }
  std::size_t parameter_count() const { return packed_.size() + bias_.size(); }

  /// Largest scratch any call with `frames` output frames at height `h` needs.
  std::pair<std::size_t, std::size_t> workspace_need(std::size_t h, std::size_t frames) const {
    const std::size_t rows = geom_.column_rows(h, frames);
    const std::size_t prod = geom_.depthwise() ? h * frames : geom_.batch * h * frames * geom_.out_channels;
    return {rows * geom_.column_width(), prod};
  }

  /// Computes output frames [w_begin, w_end) of the convolution of `input`
  /// under `padding`, writing them to frames [out_begin, out_begin + w_end -
  /// w_begin) of `out`.
  void run(ConstView input, TimePadding padding, std::size_t w_begin, std::size_t w_end,
           MutView out, std::size_t out_begin, ConvWorkspace& ws,
           std::uint64_t* column_elements = nullptr) const {
    ConvGeometry g = geom_;
    g.padding = padding;
    const auto d = detail::dims4(input.shape);
    const auto od = detail::dims4(out.shape);
    const std::size_t h_out = g.out_height(d.h);
    if (od.b != g.batch || od.c != g.out_channels || od.h != h_out ||
        od.w < out_begin + (w_end - w_begin))
      throw ConfigError("conv: output view " + out.shape.to_string() + " incompatible");
    const std::size_t nw = w_end - w_begin;
    if (nw == 0) return;
    const auto [col_need, prod_need] = workspace_need(h_out, nw);
    ws.reserve(col_need, prod_need);
    const std::size_t n_col = im2col_range(input, g, w_begin, w_end, ws.columns);
    if (column_elements) *column_elements += n_col;

    const std::size_t k = g.column_width();
    float* y = out.data.data();
    const std::size_t out_plane = od.h * od.w;
    if (g.depthwise()) {
      const std::size_t rows = h_out * nw;
      for (std::size_t b = 0; b < g.batch; ++b)
        for (std::size_t c = 0; c < g.in_channels; ++c) {
          const std::size_t block = b * g.in_channels + c;
          gemm_into(std::span<const float>(ws.columns).subspan(block * rows * k, rows * k),
                    std::span<const float>(packed_).subspan(c * k, k), ws.product, rows, k, 1);
          float* dst = y + (b * od.c + c) * out_plane;
          const float bias = bias_[c];
          for (std::size_t h = 0; h < h_out; ++h)
            for (std::size_t w = 0; w < nw; ++w)
              dst[h * od.w + out_begin + w] = ws.product[h * nw + w] + bias;
        }
    } else {
      const std::size_t rows = g.batch * h_out * nw;
      const std::size_t n = g.out_channels;
      gemm_into(ws.columns, packed_, ws.product, rows, k, n);
      for (std::size_t b = 0; b < g.batch; ++b)
        for (std::size_t o = 0; o < n; ++o) {
          float* dst = y + (b * od.c + o) * out_plane;
          const float bias = bias_[o];
          for (std::size_t h = 0; h < h_out; ++h) {
            const float* src = ws.product.data() + ((b * h_out + h) * nw) * n + o;
            for (std::size_t w = 0; w < nw; ++w) dst[h * od.w + out_begin + w] = src[w * n] + bias;
          }
        }
    }
  }

  /// Whole-sequence convolution with the layer's own time padding. Output
  /// frames are produced in tiles so the column buffer stays bounded.
  Tensor forward(const Tensor& input, ConvWorkspace& ws,
                 std::uint64_t* column_elements = nullptr) const {
    const auto d = detail::dims4(input.shape());
    detail::check_input(d, geom_);
    const std::size_t h_out = geom_.out_height(d.h);
    const std::size_t w_out = geom_.out_width(d.w);
    Tensor out(input.shape().rank() == 4
                   ? Shape{geom_.batch, geom_.out_channels, h_out, w_out}
                   : (input.shape().rank() == 3 ? Shape{geom_.out_channels, h_out, w_out}
                                                : Shape{geom_.out_channels, w_out}));
    const std::size_t per_frame = geom_.column_rows(h_out, 1) * geom_.column_width();
    constexpr std::size_t kColumnBudget = std::size_t{1} << 22;
    const std::size_t tile = std::max<std::size_t>(1, kColumnBudget / std::max<std::size_t>(1, per_frame));
    for (std::size_t w0 = 0; w0 < w_out; w0 += tile)
      run(input.view(), geom_.padding, w0, std::min(w_out, w0 + tile), out.view(), w0, ws,
          column_elements);
    return out;
  }

  Tensor forward(const Tensor& input) const {
    ConvWorkspace ws;
    return forward(input, ws);
  }

 private:
  ConvGeometry geom_;
  std::vector<float> packed_;
  std::vector<float> bias_;
};

/// im2col + GeMM convolution.
inline Tensor conv(const Tensor& input, const Tensor& weights, const std::optional<Tensor>& bias,
                   const ConvGeometry& geom) {
  return ConvLayer(weights, bias, geom).forward(input);
}

/// Reference nested-loop convolution. Every tap, including zero padding,
/// counts as one multiply-accumulate in `macs`.
inline Tensor conv_direct(const Tensor& input, const Tensor& weights,
                          const std::optional<Tensor>& bias, const ConvGeometry& g,
                          std::uint64_t* macs = nullptr) {
  g.validate();
  const auto d = detail::dims4(input.shape());
  detail::check_input(d, g);
  const Shape wshape{g.out_channels, g.in_channels / g.groups, g.filter_height, g.filter_width};
  if (!(weights.shape() == wshape)) throw ConfigError("conv_direct: weight shape mismatch");
  const std::size_t h_out = g.out_height(d.h);
  const std::size_t w_out = g.out_width(d.w);
  Tensor out(input.shape().rank() == 4 ? Shape{d.b, g.out_channels, h_out, w_out}
                                       : (input.shape().rank() == 3
                                              ? Shape{g.out_channels, h_out, w_out}
                                              : Shape{g.out_channels, w_out}));
  const std::size_t cin_per_group = g.in_channels / g.groups;
  const std::size_t cout_per_group = g.out_channels / g.groups;
  std::uint64_t count = 0;
  for (std::size_t b = 0; b < d.b; ++b)
    for (std::size_t o = 0; o < g.out_channels; ++o) {
      const std::size_t grp = o / cout_per_group;
      for (std::size_t h = 0; h < h_out; ++h)
        for (std::size_t w = 0; w < w_out; ++w) {
          float acc = 0.0f;
          for (std::size_t ci = 0; ci < cin_per_group; ++ci) {
            const std::size_t c = grp * cin_per_group + ci;
            for (std::size_t i = 0; i < g.filter_height; ++i)
              for (std::size_t j = 0; j < g.filter_width; ++j) {
                const auto hin = static_cast<std::ptrdiff_t>(h + i) -
                                 static_cast<std::ptrdiff_t>(g.pad_top());
                const auto win = static_cast<std::ptrdiff_t>(w * g.stride_width + j) -
                                 static_cast<std::ptrdiff_t>(g.pad_left());
                float x = 0.0f;
                if (hin >= 0 && hin < static_cast<std::ptrdiff_t>(d.h) && win >= 0 &&
                    win < static_cast<std::ptrdiff_t>(d.w))
                  x = input[((b * d.c + c) * d.h + hin) * d.w + win];
                acc += weights[((o * cin_per_group + ci) * g.filter_height + i) * g.filter_width + j] * x;
                ++count;
              }
          }
          if (bias) acc += (*bias)[o];
          out[((b * g.out_channels + o) * h_out + h) * w_out + w] = acc;
        }
    }
  if (macs) *macs += count;
  return out;
}

/// Stride-`stride` transposed FIR summed over input channels:
/// out[n] = sum_m sum_c input[c, m] * weights[c, n - stride*m]. Equivalent to
/// zero-insertion upsampling followed by causal FIR filtering. The output is
/// trimmed to input_length * stride samples.
inline Tensor transposed_conv_strided(const Tensor& input, const Tensor& weights,
                                      std::size_t stride) {
  if (stride < 1) throw ConfigError("transposed_conv_strided: stride must be >= 1");
  const bool one_d = input.shape().rank() == 1;
  const std::size_t channels = one_d ? 1 : input.dim(0);
  const std::size_t length = one_d ? input.dim(0) : input.dim(1);
  const std::size_t taps = weights.shape().rank() == 1 ? weights.dim(0) : weights.dim(1);
  if (weights.size() != channels * taps)
    throw ConfigError("transposed_conv_strided: weights " + weights.shape().to_string() +
                      " do not match " + std::to_string(channels) + " channels");
  const std::size_t n_out = length * stride;
  Tensor out(Shape{n_out});
  for (std::size_t m = 0; m < length; ++m)
    for (std::size_t c = 0; c < channels; ++c) {
      const float u = input[c * length + m];
      const float* g = weights.raw() + c * taps;
      const std::size_t base = m * stride;
      const std::size_t lim = std::min(taps, n_out - base);
      for (std::size_t j = 0; j < lim; ++j) out[base + j] += u * g[j];
    }
  return out;
}

}  // namespace wavestream
