// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "wavestream/costmodel/costmodel.hpp"
#include "wavestream/storage/random_weights.hpp"

namespace wavestream::cost {
namespace {

struct Cells {
  std::uint64_t x, y, macs;
};

TEST(Im2colCost, Table2CellsAtT1) {
  const Cells expected[] = {{3584, 3584, 3584},     {512, 786432, 786432},  {1536, 786432, 786432},
                            {377888, 1568, 377888}, {7712, 2048, 493568},   {15424, 2048, 493568}};
  const auto rows = table2_geometries();
  ASSERT_EQ(rows.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    const CostBreakdown c = im2col_cost(rows[i].geometry, rows[i].height);
    EXPECT_EQ(c.column_size.at(1), expected[i].x) << rows[i].name;
    EXPECT_EQ(c.filter_size.at(1), expected[i].y) << rows[i].name;
    EXPECT_EQ(c.macs.at(1), expected[i].macs) << rows[i].name;
    EXPECT_EQ(c.column_size.intercept, 0u);
    EXPECT_EQ(c.macs.intercept, 0u);
    EXPECT_EQ(c.filter_size.slope, 0u);
  }
  const CostBreakdown pw2 = im2col_cost(rows[5].geometry, 241);
  EXPECT_EQ(pw2.column_size.at(7), 15424u * 7);
  EXPECT_EQ(pw2.macs.at(7), 493568u * 7);
}

TEST(Im2colCost, RejectsStride) {
  ConvGeometry g;
  g.stride_width = 2;
  EXPECT_THROW(im2col_cost(g, 1), ConfigError);
}

TEST(Aggregate, ReferenceProfiles) {
  const auto v = aggregate_profile(BlockKind::vocos_1d), w = aggregate_profile(BlockKind::wavehax_2d);
  EXPECT_EQ(v.aggregate(), (Linear{5632, 1576448}));
  EXPECT_EQ(w.aggregate(), (Linear{401024, 5664}));
  EXPECT_GT(v.aggregate().intercept, w.aggregate().intercept);
  EXPECT_GT(w.aggregate().slope, v.aggregate().slope);
  const auto t = crossover_chunk(v, w);
  ASSERT_TRUE(t.has_value());
  EXPECT_NEAR(*t, (1576448.0 - 5664.0) / (401024.0 - 5632.0), 1e-12);
  EXPECT_GE(*t, 3.9);
  EXPECT_LE(*t, 4.0);
  EXPECT_FALSE(crossover_chunk(v, v).has_value());
  BlockCostProfile shifted = v;
  shifted.layers[0].cost.filter_size.intercept += 100;
  EXPECT_FALSE(crossover_chunk(v, shifted).has_value());
}

// Instrumented counts from the convolution kernels equal the closed forms.
TEST(Im2colCost, MeasuredEqualsPredicted) {
  std::mt19937 rng(3);
  for (const auto& row : table2_geometries()) {
    const auto pred = im2col_cost(row.geometry, row.height);
    const auto& g = row.geometry;
    const Tensor w = testing::random_tensor(Shape{g.out_channels, g.in_channels / g.groups, g.filter_height, g.filter_width}, rng);
    ConvLayer layer(w, std::nullopt, g);
    for (std::size_t t : {1u, 5u, 16u}) {
      const Tensor x = testing::random_tensor(Shape{g.in_channels, row.height, t}, rng);
      ConvWorkspace ws;
      std::uint64_t cols = 0;
      layer.forward(x, ws, &cols);
      EXPECT_EQ(cols, pred.column_size.at(t)) << row.name << " T=" << t;
      if (t == 1) {
        std::uint64_t macs = 0;
        conv_direct(x, w, std::nullopt, g, &macs);
        EXPECT_EQ(macs, pred.macs.at(t)) << row.name;
      }
    }
  }
}

ModelConfig config(Variant v) {
  ModelConfig c;
  c.variant = v;
  return c;
}

TEST(ModelCount, VocosResidualBlocks) {
  Model m(config(Variant::vocos), generate_random_weights(config(Variant::vocos), 1));
  const ModelCount c = count_model(m);
  std::uint64_t blocks = 0;
  for (const auto& l : c.layers)
    if (l.name.rfind("blocks.", 0) == 0) blocks += l.macs_per_frame;
  EXPECT_EQ(blocks * 100, 8ull * 100 * 1576448);
  EXPECT_EQ(count_macs(m, 0.0), 0u);
}

TEST(ModelCount, WavehaxDepthwiseParams) {
  Model m(config(Variant::wavehax), generate_random_weights(config(Variant::wavehax), 1));
  const ModelCount c = count_model(m);
  for (const auto& l : c.layers)
    if (l.name == "blocks.0.dw") {
      EXPECT_EQ(l.weights, 1568u);
      EXPECT_EQ(l.biases, 32u);
    }
}

TEST(ModelCount, MultiStreamTrends) {
  Model w(config(Variant::wavehax), generate_random_weights(config(Variant::wavehax), 1));
  Model ms(config(Variant::ms_wavehax), generate_random_weights(config(Variant::ms_wavehax), 1));
  EXPECT_LT(count_params(ms), count_params(w));
  EXPECT_LT(count_macs(ms, 1.0), count_macs(w, 1.0));
  EXPECT_LT(count_macs(w, 1.0, StftAccounting::transform_excluded), count_macs(w, 1.0));
}

}  // namespace
}  // namespace wavestream::cost
