// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "test_util.hpp"
#include "wavestream/conv.hpp"
#include "wavestream/gemm.hpp"
#include "wavestream/ops.hpp"

namespace wavestream {
namespace {

using testing::random_tensor;

ConvGeometry depthwise(std::size_t c, std::size_t kh, std::size_t kw, TimePadding p) {
  ConvGeometry g;
  g.in_channels = g.out_channels = g.groups = c;
  g.filter_height = kh;
  g.filter_width = kw;
  g.padding = p;
  return g;
}

TEST(Im2col, Depthwise1dColumnCountAtChunkOne) {
  Tensor x(Shape{1, 512, 1, 1});
  EXPECT_EQ(im2col(x, depthwise(512, 1, 7, TimePadding::causal)).size(), 3584u);
}

TEST(Im2col, Depthwise2dColumnCountAtChunkOne) {
  Tensor x(Shape{1, 32, 241, 1});
  const Tensor cols = im2col(x, depthwise(32, 7, 7, TimePadding::causal));
  EXPECT_EQ(cols.size(), 377888u);
  EXPECT_EQ(cols.dim(0), 32u * 241u);
  EXPECT_EQ(cols.dim(1), 49u);
}

TEST(Im2col, EmptyChunkGivesNoRows) {
  Tensor x(Shape{1, 8, 5, 0});
  const Tensor cols = im2col(x, depthwise(8, 3, 7, TimePadding::symmetric));
  EXPECT_EQ(cols.dim(0), 0u);
  EXPECT_EQ(cols.size(), 0u);
}

TEST(Im2col, RejectsChannelMismatch) {
  Tensor x(Shape{1, 4, 1, 3});
  EXPECT_THROW(im2col(x, depthwise(8, 1, 3, TimePadding::causal)), ConfigError);
}

TEST(Gemm, IdentityLeavesMatrixUnchanged) {
  Tensor id(Shape{2, 2}, {1, 0, 0, 1});
  Tensor m(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(gemm(id, m).values(), m.values());
}

TEST(Gemm, DotProduct) {
  Tensor a(Shape{1, 3}, {1, 2, 3});
  Tensor b(Shape{3, 1}, {4, 5, 6});
  EXPECT_EQ(gemm(a, b)[0], 32.0f);
}

TEST(Gemm, MatchesNaiveTripleLoopBitForBit) {
  std::mt19937 rng(7);
  for (auto [m, k, n] : {std::tuple{8, 8, 8}, {5, 300, 513}, {33, 17, 1}, {1, 512, 1536}}) {
    const Tensor a = random_tensor(Shape{std::size_t(m), std::size_t(k)}, rng);
    const Tensor b = random_tensor(Shape{std::size_t(k), std::size_t(n)}, rng);
    const Tensor c = gemm(a, b);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        float acc = 0.0f;
        for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
        ASSERT_TRUE(testing::bit_equal(acc, c[i * n + j])) << m << "x" << k << "x" << n;
      }
  }
}

TEST(Gemm, ThreadedSplitIsBitIdentical) {
  std::mt19937 rng(3);
  const Tensor a = random_tensor(Shape{300, 200}, rng);
  const Tensor b = random_tensor(Shape{200, 90}, rng);
  const Tensor single = gemm(a, b);
  set_gemm_threads(3);
  const Tensor multi = gemm(a, b);
  set_gemm_threads(1);
  EXPECT_EQ(single.values(), multi.values());
}

TEST(Gemm, RejectsInnerMismatch) {
  EXPECT_THROW(gemm(Tensor(Shape{2, 3}), Tensor(Shape{2, 3})), ConfigError);
}

TEST(Conv, DeltaDepthwiseKernelIsIdentity) {
  std::mt19937 rng(1);
  const Tensor x = random_tensor(Shape{1, 6, 1, 20}, rng);
  Tensor w(Shape{6, 1, 1, 7});
  for (std::size_t c = 0; c < 6; ++c) w[c * 7 + 3] = 1.0f;
  const Tensor y = conv(x, w, std::nullopt, depthwise(6, 1, 7, TimePadding::symmetric));
  EXPECT_EQ(y.values(), x.values());
}

TEST(Conv, PointwiseIdentityIsIdentity) {
  std::mt19937 rng(2);
  const Tensor x = random_tensor(Shape{1, 5, 3, 9}, rng);
  Tensor w(Shape{5, 5, 1, 1});
  for (std::size_t c = 0; c < 5; ++c) w[c * 5 + c] = 1.0f;
  ConvGeometry g;
  g.in_channels = g.out_channels = 5;
  EXPECT_EQ(conv(x, w, std::nullopt, g).values(), x.values());
}

ConvGeometry random_geometry(std::mt19937& rng) {
  std::uniform_int_distribution<int> coin(0, 1), ch(1, 6), kern(0, 3), pad(0, 2), stride(1, 3);
  ConvGeometry g;
  g.batch = 1 + coin(rng);
  g.in_channels = ch(rng);
  g.filter_height = 1 + 2 * kern(rng);
  g.filter_width = 1 + 2 * kern(rng);
  g.padding = static_cast<TimePadding>(pad(rng));
  g.stride_width = g.padding == TimePadding::symmetric ? 1 : stride(rng);
  if (coin(rng)) {
    g.groups = g.out_channels = g.in_channels;
  } else {
    g.out_channels = ch(rng);
  }
  return g;
}

TEST(Conv, Im2colGemmMatchesDirectLoopOn200Geometries) {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> ext(1, 9), tlen(0, 12);
  for (int trial = 0; trial < 200; ++trial) {
    const ConvGeometry g = random_geometry(rng);
    const std::size_t h = ext(rng);
    const std::size_t w = g.filter_width + tlen(rng);
    const Tensor x = random_tensor(Shape{g.batch, g.in_channels, h, w}, rng);
    const Tensor wt = random_tensor(
        Shape{g.out_channels, g.in_channels / g.groups, g.filter_height, g.filter_width}, rng);
    const Tensor b = random_tensor(Shape{g.out_channels}, rng);
    const Tensor fast = conv(x, wt, b, g);
    const Tensor ref = conv_direct(x, wt, b, g);
    ASSERT_EQ(fast.shape(), ref.shape());
    EXPECT_LE(max_abs_diff(fast.data(), ref.data()), 1e-6f) << "trial " << trial;
  }
}

TEST(Conv, IsLinearWithoutBias) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const ConvGeometry g = random_geometry(rng);
    const Shape xs{g.batch, g.in_channels, 4, g.filter_width + 5};
    const Tensor x = random_tensor(xs, rng), y = random_tensor(xs, rng);
    const Tensor w = random_tensor(
        Shape{g.out_channels, g.in_channels / g.groups, g.filter_height, g.filter_width}, rng);
    const float a = 0.7f, b = -1.3f;
    Tensor mix(xs);
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x[i] + b * y[i];
    const Tensor lhs = conv(mix, w, std::nullopt, g);
    const Tensor cx = conv(x, w, std::nullopt, g), cy = conv(y, w, std::nullopt, g);
    for (std::size_t i = 0; i < lhs.size(); ++i) EXPECT_NEAR(lhs[i], a * cx[i] + b * cy[i], 1e-5f);
  }
}

TEST(Conv, CausalOutputIgnoresFutureInput) {
  std::mt19937 rng(5);
  ConvGeometry g;
  g.in_channels = 3;
  g.out_channels = 4;
  g.filter_height = 3;
  g.filter_width = 7;
  g.padding = TimePadding::causal;
  const Tensor w = random_tensor(Shape{4, 3, 3, 7}, rng);
  const Tensor x = random_tensor(Shape{1, 3, 5, 30}, rng);
  const Tensor base = conv(x, w, std::nullopt, g);
  for (std::size_t t_cut : {0u, 9u, 29u}) {
    Tensor x2 = x;
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t h = 0; h < 5; ++h)
        for (std::size_t t = t_cut + 1; t < 30; ++t) x2[(c * 5 + h) * 30 + t] += 100.0f;
    const Tensor pert = conv(x2, w, std::nullopt, g);
    for (std::size_t o = 0; o < 4; ++o)
      for (std::size_t h = 0; h < 5; ++h)
        for (std::size_t t = 0; t <= t_cut; ++t) {
          const std::size_t i = (o * 5 + h) * 30 + t;
          ASSERT_TRUE(testing::bit_equal(base[i], pert[i]));
        }
  }
}

TEST(Conv, DirectLoopCountsEveryTap) {
  Tensor x(Shape{1, 32, 241, 3});
  Tensor w(Shape{32, 1, 7, 7});
  std::uint64_t macs = 0;
  conv_direct(x, w, std::nullopt, depthwise(32, 7, 7, TimePadding::causal), &macs);
  EXPECT_EQ(macs, 377888u * 3u);
}

TEST(Conv, RejectsBadGrouping) {
  ConvGeometry g;
  g.in_channels = 4;
  g.out_channels = 8;
  g.groups = 2;
  EXPECT_THROW(g.validate(), ConfigError);
  g.groups = 3;
  EXPECT_THROW(g.validate(), ConfigError);
}

TEST(TransposedConv, StrideOneDeltaIsIdentity) {
  Tensor x(Shape{1, 4}, {1, -2, 3, 0.5f});
  Tensor k(Shape{1, 1}, {1});
  EXPECT_EQ(transposed_conv_strided(x, k, 1).values(), x.values());
}

TEST(TransposedConv, ZeroInsertionPattern) {
  Tensor x(Shape{1, 3}, {1, 0, 0});
  Tensor k(Shape{1, 1}, {1});
  const auto y = transposed_conv_strided(x, k, 4).values();
  std::vector<float> expect(12, 0.0f);
  expect[0] = 1.0f;
  EXPECT_EQ(y, expect);
}

TEST(TransposedConv, MatchesUpsampleThenFir) {
  std::mt19937 rng(9);
  const std::size_t streams = 4, len = 50, taps = 63, stride = 4;
  const Tensor x = random_tensor(Shape{streams, len}, rng);
  const Tensor k = random_tensor(Shape{streams, taps}, rng);
  const auto y = transposed_conv_strided(x, k, stride).values();
  std::vector<double> ref(len * stride, 0.0);
  for (std::size_t c = 0; c < streams; ++c) {
    std::vector<double> up(len * stride, 0.0);
    for (std::size_t m = 0; m < len; ++m) up[m * stride] = x[c * len + m];
    for (std::size_t n = 0; n < up.size(); ++n)
      for (std::size_t j = 0; j < taps && j <= n; ++j) ref[n] += k[c * taps + j] * up[n - j];
  }
  for (std::size_t n = 0; n < ref.size(); ++n) EXPECT_NEAR(y[n], ref[n], 1e-5);
}

TEST(TransposedConv, RejectsZeroStride) {
  EXPECT_THROW(transposed_conv_strided(Tensor(Shape{1, 2}), Tensor(Shape{1, 1}), 0), ConfigError);
}

TEST(Activations, GeluAtZeroIsZero) { EXPECT_EQ(gelu(0.0f), 0.0f); }

TEST(Activations, GeluTanhApproximation) {
  EXPECT_NEAR(gelu(1.0f), 0.841192f, 1e-5f);
  EXPECT_NEAR(gelu(-3.0f), -0.00363739f, 1e-6f);
}

TEST(BatchNorm, UnitStatisticsAreIdentity) {
  BatchNormParams p{{0, 0}, {1, 1}, {1, 1}, {0, 0}, 0.0f};
  Tensor x(Shape{2, 3}, {1, -2, 3, 4, 5, -6});
  EXPECT_EQ(batchnorm_apply(x, p).values(), x.values());
}

TEST(BatchNorm, ChannelAtItsMeanMapsToBeta) {
  BatchNormParams p{{2.5f}, {4.0f}, {3.0f}, {-0.25f}, 1e-5f};
  Tensor x(Shape{1, 4}, {2.5f, 2.5f, 2.5f, 2.5f});
  const Tensor y = batchnorm_apply(x, p);
  for (float v : y.values()) EXPECT_EQ(v, -0.25f);
}

TEST(BatchNorm, FoldedAffineMatchesFormula) {
  BatchNormParams p{{0.3f, -1.0f}, {2.0f, 0.5f}, {1.5f, 0.7f}, {0.1f, -0.2f}, 1e-5f};
  std::mt19937 rng(4);
  const Tensor x = random_tensor(Shape{2, 10}, rng);
  const Tensor ref = batchnorm_apply(x, p);
  Tensor y = x;
  ChannelAffine(p).apply(y.data(), 10);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-6f);
}

TEST(BatchNorm, NegativeVarianceIsDataError) {
  BatchNormParams p{{0}, {-1}, {1}, {0}, 1e-5f};
  EXPECT_THROW(batchnorm_apply(Tensor(Shape{1, 2}), p), DataError);
}

TEST(Tensor, FromExternalRejectsNonFinite) {
  EXPECT_THROW(Tensor::from_external(Shape{2}, {1.0f, NAN}), DataError);
  EXPECT_THROW(Tensor::from_external(Shape{1}, {INFINITY}), DataError);
  EXPECT_THROW(Tensor(Shape{3}, {1.0f}), ConfigError);
}

}  // namespace
}  // namespace wavestream
