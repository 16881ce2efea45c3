// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <numbers>
#include <random>

#include "test_util.hpp"
#include "wavestream/dsp/filterbank.hpp"
#include "wavestream/dsp/prior.hpp"
#include "wavestream/dsp/stft.hpp"

namespace wavestream::dsp {
namespace {

constexpr double kPi = std::numbers::pi;

std::vector<float> sine(double freq, double rate, std::size_t n, double amp = 0.5) {
  std::vector<float> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<float>(amp * std::sin(2 * kPi * freq * i / rate));
  return x;
}

std::vector<float> noise(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> d(0.0f, 0.3f);
  std::vector<float> x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

const StftConfig kFullBand{480, 240, 24000.0};
const StftConfig kSubscale{120, 60, 6000.0};

TEST(Stft, ZeroInZeroOut) {
  const Tensor s = stft(std::vector<float>(4800, 0.0f), kFullBand);
  for (float v : s.values()) EXPECT_EQ(v, 0.0f);
  EXPECT_EQ(s.dim(0), 2u);
  EXPECT_EQ(s.dim(1), 241u);
  EXPECT_EQ(s.dim(2), 1u + 4800u / 240u);
}

TEST(Stft, DcInputConcentratesInBinZero) {
  const Tensor s = stft(std::vector<float>(4800, 1.0f), kFullBand);
  const std::size_t frames = s.dim(2);
  for (std::size_t t = 2; t + 2 < frames; ++t) {
    EXPECT_NEAR(s[0 * frames + t], 240.0f, 1e-3f);
    for (std::size_t k = 0; k < 241; ++k) EXPECT_NEAR(s[(241 + k) * frames + t], 0.0f, 1e-3f);
  }
}

TEST(Stft, OneKilohertzPeaksAtBinTwentyAndMatchesDirectDft) {
  const auto x = sine(1000.0, 24000.0, 24000);
  const Tensor s = stft(x, kFullBand);
  const std::size_t frames = s.dim(2);
  const auto w = hann_window(480);
  for (std::size_t t : {5u, 50u, 90u}) {
    std::size_t best = 0;
    float best_mag = -1.0f;
    for (std::size_t k = 0; k < 241; ++k) {
      const float re = s[k * frames + t], im = s[(241 + k) * frames + t];
      const float mag = std::hypot(re, im);
      if (mag > best_mag) best_mag = mag, best = k;
      // Direct DFT of the frame centred at t * hop (interior, no padding).
      std::complex<double> acc = 0.0;
      for (std::size_t n = 0; n < 480; ++n) {
        const double v = x[t * 240 - 240 + n] * double(w[n]);
        acc += v * std::polar(1.0, -2 * kPi * double(k * n) / 480.0);
      }
      EXPECT_NEAR(re, acc.real(), 2e-3);
      EXPECT_NEAR(im, acc.imag(), 2e-3);
    }
    EXPECT_EQ(best, 20u);
  }
}

TEST(Stft, EmptyWaveIsDataError) {
  EXPECT_THROW(stft(std::vector<float>{}, kFullBand), DataError);
}

TEST(Stft, IsLinear) {
  const auto a = noise(4800, 1), b = noise(4800, 2);
  std::vector<float> mix(4800);
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 0.5f * a[i] - 2.0f * b[i];
  const Tensor sa = stft(a, kFullBand), sb = stft(b, kFullBand), sm = stft(mix, kFullBand);
  for (std::size_t i = 0; i < sm.size(); ++i) EXPECT_NEAR(sm[i], 0.5f * sa[i] - 2.0f * sb[i], 1e-4f);
  const auto ia = istft(sa, kFullBand), ib = istft(sb, kFullBand), im = istft(sm, kFullBand);
  for (std::size_t i = 0; i < im.size(); ++i) EXPECT_NEAR(im[i], 0.5f * ia[i] - 2.0f * ib[i], 1e-5f);
}

TEST(Istft, ZeroSpectrogramGivesZeroWave) {
  const auto y = istft(Tensor(Shape{2, 241, 11}), kFullBand);
  EXPECT_EQ(y.size(), 2400u);
  for (float v : y) EXPECT_EQ(v, 0.0f);
}

float interior_round_trip_error(const std::vector<float>& x, const StftConfig& cfg) {
  const auto y = istft(stft(x, cfg), cfg, Centering::reflect, x.size());
  float err = 0.0f;
  for (std::size_t i = cfg.frame_length; i + cfg.frame_length < x.size(); ++i)
    err = std::max(err, std::fabs(y[i] - x[i]));
  return err;
}

TEST(Istft, RoundTripSineTenSeconds) {
  EXPECT_LE(interior_round_trip_error(sine(440.0, 24000.0, 240000), kFullBand), 1e-5f);
}

TEST(Istft, RoundTripNoise) {
  EXPECT_LE(interior_round_trip_error(noise(48000, 3), kFullBand), 1e-5f);
}

TEST(Istft, RoundTripSubscaleConfig) {
  EXPECT_LE(interior_round_trip_error(sine(440.0, 6000.0, 60000), kSubscale), 1e-5f);
  EXPECT_LE(interior_round_trip_error(noise(12000, 4), kSubscale), 1e-5f);
}

TEST(Istft, CausalFramingRoundTripIsPureDelay) {
  for (const auto& cfg : {kFullBand, kSubscale, StftConfig{960, 240, 24000.0}}) {
    const auto x = noise(cfg.hop * 40, 5);
    const auto y = istft(stft(x, cfg, Centering::causal), cfg, Centering::causal);
    ASSERT_EQ(y.size(), x.size());
    const std::size_t delay = cfg.frame_length - cfg.hop;
    for (std::size_t n = 0; n < delay; ++n) EXPECT_NEAR(y[n], 0.0f, 1e-6f);
    for (std::size_t n = delay; n < y.size(); ++n) EXPECT_NEAR(y[n], x[n - delay], 1e-5f);
  }
}

TEST(Istft, RejectsMismatchedBins) {
  EXPECT_THROW(istft(Tensor(Shape{2, 240, 3}), kFullBand), ConfigError);
}

TEST(Window, OverlapAddConstancy) {
  // Hann at hop N/2 sums to a constant; its square does so at hop N/4.
  for (std::size_t n : {120u, 480u, 960u}) {
    const auto w = hann_window(n);
    for (std::size_t r = 0; r < n / 2; ++r)
      EXPECT_NEAR(w[r] + w[r + n / 2], 1.0f, 1e-6f);
    const float ref = 1.5f;
    for (std::size_t r = 0; r < n / 4; ++r) {
      float s = 0.0f;
      for (std::size_t j = r; j < n; j += n / 4) s += w[j] * w[j];
      EXPECT_NEAR(s / ref, 1.0f, 1e-6f);
    }
  }
}

TEST(HarmonicPrior, UnvoicedWithoutNoiseIsSilent) {
  PriorConfig cfg;
  cfg.unvoiced_noise_std = 0.0f;
  for (float v : harmonic_prior(std::vector<float>(10, 0.0f), cfg)) EXPECT_EQ(v, 0.0f);
}

TEST(HarmonicPrior, HarmonicCountBelowNyquist) {
  PriorConfig cfg;
  EXPECT_EQ(cfg.harmonics(200.0), 60u);
  EXPECT_EQ(cfg.harmonics(440.0), 27u);
}

TEST(HarmonicPrior, MatchesGlobalPhaseOracle) {
  PriorConfig cfg;
  const double f0 = 440.0;
  const auto y = harmonic_prior(std::vector<float>(50, float(f0)), cfg);
  const std::size_t k_max = 27;
  double max_err = 0.0;
  for (std::size_t n = 0; n < y.size(); ++n) {
    const double phase = 2 * kPi * f0 * double(n + 1) / 24000.0;
    double acc = 0.0;
    for (std::size_t k = 1; k <= k_max; ++k) acc += std::sin(double(k) * phase);
    max_err = std::max(max_err, std::fabs(0.1 / std::sqrt(27.0) * acc - y[n]));
  }
  EXPECT_LE(max_err, 1e-5);
  // Periodic with period rate / f0 = 54.5454... samples; 11 periods = 600 samples.
  for (std::size_t n = 0; n + 600 < y.size(); ++n) EXPECT_NEAR(y[n], y[n + 600], 1e-4f);
}

TEST(HarmonicPrior, ChunkedEqualsOneShotBitExact) {
  std::mt19937 rng(8);
  std::uniform_real_distribution<float> f(80.0f, 400.0f);
  std::vector<float> f0(100);
  for (std::size_t i = 0; i < f0.size(); ++i) f0[i] = (i / 7) % 3 == 0 ? 0.0f : f(rng);
  PriorConfig cfg;
  cfg.seed = 99;
  const auto batch = harmonic_prior(f0, cfg);
  PriorState state;
  std::vector<float> streamed(batch.size());
  std::size_t pos = 0;
  for (std::size_t chunk : {1u, 3u, 16u, 80u}) {
    harmonic_prior_step(std::span(f0).subspan(pos, chunk), cfg, state,
                        std::span(streamed).subspan(pos * 240, chunk * 240));
    pos += chunk;
  }
  ASSERT_EQ(std::memcmp(batch.data(), streamed.data(), batch.size() * sizeof(float)), 0);
}

TEST(HarmonicPrior, DeterministicPerSeedAndNoiseScaled) {
  PriorConfig cfg;
  cfg.seed = 5;
  const std::vector<float> f0(200, 0.0f);
  const auto a = harmonic_prior(f0, cfg), b = harmonic_prior(f0, cfg);
  EXPECT_EQ(a, b);
  double var = 0.0;
  for (float v : a) var += double(v) * v;
  EXPECT_NEAR(std::sqrt(var / a.size()), 0.003, 0.0003);
  cfg.seed = 6;
  EXPECT_NE(harmonic_prior(f0, cfg), a);
}

TEST(HarmonicPrior, NegativeF0IsDataError) {
  EXPECT_THROW(harmonic_prior(std::vector<float>{100.0f, -1.0f}, PriorConfig{}), DataError);
}

class PqmfTest : public ::testing::Test {
 protected:
  static const FilterBank& bank() {
    static const FilterBank b = design_pqmf(4, 63);
    return b;
  }
};

TEST_F(PqmfTest, ShapeAndDelay) {
  EXPECT_EQ(bank().streams, 4u);
  EXPECT_EQ(bank().taps, 63u);
  EXPECT_EQ(bank().group_delay, 62u);
  EXPECT_GE(bank().reconstruction_snr_db, 40.0);
  EXPECT_GT(bank().cutoff, 0.1);
  EXPECT_LT(bank().cutoff, 0.15);
}

TEST_F(PqmfTest, DeltaReconstructsAsDelayedDelta) {
  std::vector<float> x(400, 0.0f);
  x[0] = 1.0f;
  // Direct-convolution oracle of the cascade.
  std::vector<double> xd(x.begin(), x.end());
  const auto ref = detail::cascade<float>(xd, 4, 63, bank().analysis, bank().synthesis);
  const auto cols = analysis_apply(x, bank());
  const auto y = synthesis_apply(cols, bank());
  ASSERT_EQ(y.size(), 400u);
  std::size_t peak = 0;
  for (std::size_t n = 0; n < y.size(); ++n) {
    EXPECT_NEAR(y[n], ref[n], 1e-5);
    if (std::fabs(y[n]) > std::fabs(y[peak])) peak = n;
  }
  EXPECT_EQ(peak, 62u);
  EXPECT_NEAR(y[62], 1.0f, 0.02f);
}

TEST_F(PqmfTest, NoiseRoundTripSnrOnTenSeeds) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const auto x = noise(24000, 100 + seed);
    const auto y = reconstruct(x, bank());
    double sig = 0.0, err = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
      sig += double(x[n]) * x[n];
      err += double(y[n] - x[n]) * (y[n] - x[n]);
    }
    EXPECT_GE(10.0 * std::log10(sig / err), 40.0) << "seed " << seed;
  }
}

TEST_F(PqmfTest, ZeroWaveThroughBankIsZero) {
  const auto cols = analysis_apply(std::vector<float>(1000, 0.0f), bank());
  EXPECT_EQ(cols.dim(1), 250u);
  for (float v : synthesis_apply(cols, bank())) EXPECT_EQ(v, 0.0f);
}

TEST_F(PqmfTest, OddLengthIsZeroPadded) {
  EXPECT_EQ(analysis_apply(std::vector<float>(1001, 0.1f), bank()).dim(1), 251u);
}

TEST_F(PqmfTest, LowToneLandsInFirstSubband) {
  const auto x = sine(100.0, 24000.0, 24000);
  const auto cols = analysis_apply(x, bank());
  const std::size_t m = cols.dim(1);
  std::array<double, 4> energy{};
  for (std::size_t k = 0; k < 4; ++k) {
    // Oracle: direct filtering then decimation.
    for (std::size_t i = 100; i < m; ++i) {
      double y = 0.0;
      for (std::size_t j = 0; j < 63; ++j) y += bank().analysis[k * 63 + j] * double(x[4 * i - j]);
      EXPECT_NEAR(cols[k * m + i], y, 1e-4);
      energy[k] += y * y;
    }
  }
  for (std::size_t k = 1; k < 4; ++k) EXPECT_GT(energy[0], 1000.0 * energy[k]);
}

TEST(Pqmf, SingleStreamSingleTapIsIdentity) {
  const FilterBank b = design_pqmf(1, 1);
  const auto x = noise(100, 7);
  EXPECT_EQ(synthesis_apply(analysis_apply(x, b), b), x);
}

TEST(Pqmf, UnreachableSnrIsDesignError) {
  EXPECT_THROW(design_pqmf(4, 15), DesignError);
}

}  // namespace
}  // namespace wavestream::dsp
