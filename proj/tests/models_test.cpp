// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_util.hpp"
#include "wavestream/models/model.hpp"
#include "wavestream/storage/features.hpp"
#include "wavestream/storage/random_weights.hpp"

namespace wavestream {
namespace {

constexpr Variant kVariants[] = {Variant::vocos, Variant::ms_vocos, Variant::wavehax, Variant::ms_wavehax};

ModelConfig config(Variant v, bool causal = false, std::size_t la = 0, std::size_t blocks = 8) {
  ModelConfig c;
  c.variant = v;
  c.causal = causal;
  c.lookahead = la;
  c.num_blocks = blocks;
  return c;
}

bool all_finite(const std::vector<float>& v) {
  for (float x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

TEST(HeadToComplex, Examples) {
  const float pi2 = std::numbers::pi_v<float> / 2;
  Tensor lm(Shape{3}, {0.0f, 0.0f, 16.0f});
  Tensor ph(Shape{3}, {0.0f, pi2, 0.0f});
  Tensor c = head_to_complex(lm, ph, 6.0f);
  EXPECT_FLOAT_EQ(c[0], 1.0f);
  EXPECT_FLOAT_EQ(c[3], 0.0f);
  EXPECT_NEAR(c[1], 0.0f, 1e-7);
  EXPECT_NEAR(c[4], 1.0f, 1e-7);
  EXPECT_FLOAT_EQ(c[2], std::exp(6.0f));
  EXPECT_THROW(head_to_complex(lm, Tensor(Shape{2}), 6.0f), ConfigError);
}

TEST(Build, StructuralConstants) {
  Model msv(config(Variant::ms_vocos), generate_random_weights(config(Variant::ms_vocos), 1));
  EXPECT_EQ(msv.head().geometry().out_channels, 968u);
  EXPECT_EQ(msv.dft().config().frame_length, 240u);
  EXPECT_EQ(msv.dft().config().hop, 60u);
  EXPECT_EQ(msv.synthesis_filter().dim(1), 63u);

  Model msw(config(Variant::ms_wavehax), generate_random_weights(config(Variant::ms_wavehax), 1));
  EXPECT_EQ(msw.stem().geometry().in_channels, 12u);
  EXPECT_EQ(msw.head().geometry().out_channels, 8u);
  EXPECT_EQ(msw.stem().geometry().out_channels, 64u);

  Model wh(config(Variant::wavehax), generate_random_weights(config(Variant::wavehax), 1));
  EXPECT_EQ(wh.stem().geometry().out_channels, 32u);
  EXPECT_EQ(wh.dft().config().bins(), 241u);

  Model v(config(Variant::vocos), generate_random_weights(config(Variant::vocos), 1));
  EXPECT_EQ(v.head().geometry().out_channels, 962u);
  EXPECT_EQ(v.stem().geometry().in_channels, 101u);
  EXPECT_EQ(v.blocks()[0].pw1.geometry().out_channels, 1536u);
}

TEST(Build, MissingOrMisshapenWeightNamesTensor) {
  const ModelConfig c = config(Variant::wavehax);
  WeightSet w = generate_random_weights(c, 3);
  WeightSet missing;
  for (const auto& [name, t] : w.tensors())
    if (name != "blocks.3.pw2.weight") missing.set(name, t);
  try {
    Model m(c, missing);
    FAIL() << "expected LoadError";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("blocks.3.pw2.weight"), std::string::npos);
  }
  WeightSet bad = w;
  bad.set("head.weight", Tensor(Shape{3, 32, 1, 1}));
  try {
    Model m(c, bad);
    FAIL() << "expected LoadError";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("head.weight"), std::string::npos);
  }
  WeightSet neg = w;
  neg.set("final_bn.var", Tensor(Shape{32}, std::vector<float>(32, -1.0f)));
  EXPECT_THROW(Model(c, neg), LoadError);
}

TEST(Build, CausalAndNonCausalShareWeights) {
  for (Variant v : kVariants) {
    WeightSet w = generate_random_weights(config(v), 5);
    EXPECT_NO_THROW(Model(config(v, true, 1, 2), generate_random_weights(config(v, true, 1, 2), 5)));
    EXPECT_NO_THROW(Model(config(v, true, 0), w));
  }
}

TEST(ForwardBatch, LengthContract) {
  for (Variant v : kVariants)
    for (bool causal : {false, true}) {
      const ModelConfig c = config(v, causal, causal ? 1 : 0, 2);
      Model m(c, generate_random_weights(c, 11));
      for (std::size_t t : {1u, 2u, 7u, 100u}) {
        Features f = synthetic_features(t, 4);
        const auto wave = m.forward_batch(f.mel, f.f0);
        EXPECT_EQ(wave.size(), t * 240) << c.name() << " T=" << t;
        EXPECT_TRUE(all_finite(wave)) << c.name();
      }
      EXPECT_TRUE(m.forward_batch(Tensor(Shape{100, 0}), std::vector<float>{}).empty());
    }
}

TEST(ForwardBatch, ZeroHeadGivesSilence) {
  for (Variant v : {Variant::ms_vocos, Variant::wavehax, Variant::ms_wavehax}) {
    const ModelConfig c = config(v, false, 0, 2);
    WeightSet w = generate_random_weights(c, 2);
    w.set("head.weight", Tensor(w.get("head.weight").shape()));
    Model m(c, w);
    const std::vector<float> f0(10, 0.0f);
    const auto wave = m.forward_batch(Tensor(Shape{100, 10}), f0);
    if (c.two_dimensional()) {
      for (float x : wave) ASSERT_EQ(x, 0.0f);
    } else {
      // exp(0) magnitudes with zero phase: a deterministic, finite output.
      EXPECT_TRUE(all_finite(wave));
    }
  }
}

TEST(ForwardBatch, BitwiseStable) {
  for (Variant v : kVariants) {
    const ModelConfig c = config(v, false, 0, 8);
    Model m(c, generate_random_weights(c, 21));
    Features f = synthetic_features(100, 9);
    const auto a = m.forward_batch(f.mel, f.f0);
    const auto b = m.forward_batch(f.mel, f.f0);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_TRUE(testing::bit_equal(a[i], b[i]));
  }
}

TEST(ForwardBatch, RejectsBadInput) {
  const ModelConfig c = config(Variant::wavehax, false, 0, 1);
  Model m(c, generate_random_weights(c, 1));
  Features f = synthetic_features(5, 1);
  Tensor nan_mel = f.mel;
  nan_mel[7] = std::nanf("");
  EXPECT_THROW(m.forward_batch(nan_mel, f.f0), DataError);
  auto neg = f.f0;
  neg[2] = -1.0f;
  EXPECT_THROW(m.forward_batch(f.mel, neg), DataError);
  EXPECT_THROW(m.forward_batch(Tensor(Shape{80, 5}), f.f0), DataError);
}

TEST(ForwardBatch, CausalityContract) {
  for (Variant v : kVariants)
    for (std::size_t la : {0u, 1u}) {
      const ModelConfig c = config(v, true, la, 2);
      Model m(c, generate_random_weights(c, 8));
      Features f = synthetic_features(30, 6);
      const auto base = m.forward_batch(f.mel, f.f0);
      const std::size_t p = 12;
      Features g = f;
      for (std::size_t t = p; t < 30; ++t) {
        for (std::size_t b = 0; b < 100; ++b) g.mel[b * 30 + t] += 0.5f;
        g.f0[t] = g.f0[t] > 0 ? g.f0[t] * 1.3f : 180.0f;
      }
      const auto pert = m.forward_batch(g.mel, g.f0);
      const std::size_t safe = (p - la) * 240;
      for (std::size_t n = 0; n < safe; ++n)
        ASSERT_TRUE(testing::bit_equal(base[n], pert[n])) << c.name() << " n=" << n;
      float diff = 0.0f;
      for (std::size_t n = safe; n < base.size(); ++n) diff = std::max(diff, std::fabs(base[n] - pert[n]));
      EXPECT_GT(diff, 0.0f) << c.name();
    }
}

TEST(ReceptiveField, StructuralSums) {
  auto rf = [](const ModelConfig& c) { return Model(c, generate_random_weights(c, 1)).receptive_field(); };
  EXPECT_EQ(rf(config(Variant::wavehax, true, 0)).future_frames, 0u);
  EXPECT_EQ(rf(config(Variant::ms_wavehax, true, 1)).future_frames, 1u);
  EXPECT_EQ(rf(config(Variant::vocos)).future_frames, 27u);
  EXPECT_EQ(rf(config(Variant::ms_vocos, false, 0, 4)).future_frames, 15u);
  // The time-convolutional mel projection adds its own 3-frame margin.
  EXPECT_EQ(rf(config(Variant::wavehax)).future_frames, 30u);
  EXPECT_EQ(rf(config(Variant::ms_wavehax)).future_frames, 30u);
}

TEST(Weights, RandomGenerationDeterministic) {
  const ModelConfig c = config(Variant::ms_wavehax);
  const WeightSet a = generate_random_weights(c, 7), b = generate_random_weights(c, 7),
                  d = generate_random_weights(c, 8);
  bool differs = false;
  for (const auto& [name, t] : a.tensors()) {
    const Tensor& u = b.get(name);
    for (std::size_t i = 0; i < t.size(); ++i) ASSERT_TRUE(testing::bit_equal(t[i], u[i])) << name;
    const Tensor& w = d.get(name);
    for (std::size_t i = 0; i < t.size(); ++i) differs |= t[i] != w[i];
  }
  EXPECT_TRUE(differs);
  EXPECT_EQ(a.get("stem_bn.var")[0], 1.0f);
  EXPECT_EQ(a.get("stem.bias")[0], 0.0f);
  Model m(c, a);
  Features f = synthetic_features(100, 1);
  EXPECT_TRUE(all_finite(m.forward_batch(f.mel, f.f0)));
}

}  // namespace
}  // namespace wavestream
