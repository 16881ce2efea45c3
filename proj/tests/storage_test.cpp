// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "test_util.hpp"
#include "wavestream/models/model.hpp"
#include "wavestream/storage/extract.hpp"
#include "wavestream/storage/feature_file.hpp"
#include "wavestream/storage/random_weights.hpp"
#include "wavestream/storage/wav.hpp"
#include "wavestream/storage/weight_file.hpp"

namespace wavestream {
namespace {

namespace fs = std::filesystem;

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "wavestream_storage_test";
  fs::create_directories(dir);
  return dir / name;
}

template <class F>
std::string format_error_message(F&& f) {
  try {
    f();
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

TEST(WeightFile, ThreeTensorRoundTrip) {
  std::mt19937 rng(1);
  WeightSet w;
  w.set("a", testing::random_tensor(Shape{3, 4}, rng));
  w.set("b.weight", testing::random_tensor(Shape{2, 1, 3, 5}, rng));
  w.set("c", testing::random_tensor(Shape{7}, rng));
  const fs::path p = temp_path("three.mswt");
  write_weights(p, w);
  const WeightSet r = read_weights(p);
  ASSERT_EQ(r.size(), 3u);
  for (const auto& [name, t] : w.tensors()) {
    const Tensor& u = r.get(name);
    ASSERT_TRUE(u.shape() == t.shape()) << name;
    for (std::size_t i = 0; i < t.size(); ++i) ASSERT_TRUE(testing::bit_equal(t[i], u[i]));
  }
}

TEST(WeightFile, ExactLayout) {
  WeightSet w;
  w.set("x", Tensor(Shape{2}, {1.0f, -2.0f}));
  const auto b = encode_weights(w);
  const std::vector<std::uint8_t> expect{'M', 'S', 'W', 'T', 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 'x', 0, 1,
                                         2,   0,   0,   0,   0, 0, 0x80, 0x3f, 0, 0, 0, 0xc0};
  EXPECT_EQ(b, expect);
}

TEST(WeightFile, CorruptInputsReportOffset) {
  WeightSet w;
  w.set("x", Tensor(Shape{2}, {1.0f, 2.0f}));
  auto b = encode_weights(w);
  auto bad_magic = b;
  bad_magic[0] = 'X';
  EXPECT_NE(format_error_message([&] { decode_weights(bad_magic); }).find("magic"), std::string::npos);
  auto bad_version = b;
  bad_version[4] = 2;
  EXPECT_NE(format_error_message([&] { decode_weights(bad_version); }).find("at byte 8"), std::string::npos);
  auto truncated = b;
  truncated.resize(b.size() - 3);
  EXPECT_NE(format_error_message([&] { decode_weights(truncated); }).find("truncated"), std::string::npos);
  EXPECT_THROW(read_weights(temp_path("does_not_exist.mswt")), LoadError);
}

TEST(WeightFile, RoundTripPreservesSynthesis) {
  ModelConfig c;
  c.variant = Variant::ms_wavehax;
  c.num_blocks = 2;
  const WeightSet w = generate_random_weights(c, 9);
  const fs::path p = temp_path("ms.mswt");
  write_weights(p, w);
  const Features f = synthetic_features(20, 3);
  const auto a = Model(c, w).forward_batch(f.mel, f.f0);
  const auto b = Model(c, read_weights(p)).forward_batch(f.mel, f.f0);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_TRUE(testing::bit_equal(a[i], b[i]));
}

TEST(FeatureFile, RoundTripAndEmpty) {
  const Features f = synthetic_features(33, 2);
  const fs::path p = temp_path("f.mswf");
  write_features(p, f);
  const Features r = read_features(p);
  ASSERT_EQ(r.frames(), 33u);
  for (std::size_t i = 0; i < f.mel.size(); ++i) ASSERT_TRUE(testing::bit_equal(f.mel[i], r.mel[i]));
  EXPECT_EQ(r.f0, f.f0);
  // Frame-major payload: frame 0 bins first.
  const auto bytes = encode_features(f);
  io::ByteReader in(bytes, "x");
  in.skip(16);
  EXPECT_EQ(in.f32(), f.mel[0]);
  EXPECT_EQ(in.f32(), f.mel[33]);

  Features empty{Tensor(Shape{100, 0}), {}};
  const Features e = decode_features(encode_features(empty));
  EXPECT_EQ(e.frames(), 0u);
  EXPECT_EQ(encode_features(empty).size(), 16u);
}

TEST(FeatureFile, RejectsBadContent) {
  Features f = synthetic_features(4, 2);
  f.f0[1] = -3.0f;
  EXPECT_THROW(decode_features(encode_features(f)), FormatError);
  auto b = encode_features(synthetic_features(4, 2));
  b.pop_back();
  EXPECT_THROW(decode_features(b), FormatError);
}

TEST(Wav, Pcm16RoundTripWithinQuantization) {
  std::mt19937 rng(5);
  Audio a{24000, testing::random_vector(24000, rng, 1.0f)};
  a.samples[0] = 1.0f;
  a.samples[1] = -1.0f;
  a.samples[2] = 3.0f;  // clamps
  const fs::path p = temp_path("noise.wav");
  write_wav(p, a);
  const Audio r = read_wav(p);
  EXPECT_EQ(r.sample_rate, 24000u);
  ASSERT_EQ(r.samples.size(), a.samples.size());
  float err = 0.0f;
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    err = std::max(err, std::fabs(std::clamp(a.samples[i], -1.0f, 1.0f) - r.samples[i]));
  EXPECT_LE(err, 1.0f / 32768.0f);
}

TEST(Wav, ReadsFloat32AndRejectsStereo) {
  io::ByteWriter w;
  w.raw("RIFF");
  w.u32(36 + 8);
  w.raw("WAVE");
  w.raw("fmt ");
  w.u32(16);
  w.u16(3);
  w.u16(1);
  w.u32(16000);
  w.u32(64000);
  w.u16(4);
  w.u16(32);
  w.raw("data");
  w.u32(8);
  w.f32(0.25f);
  w.f32(-0.5f);
  const Audio a = decode_wav(w.bytes());
  EXPECT_EQ(a.sample_rate, 16000u);
  EXPECT_EQ(a.samples, (std::vector<float>{0.25f, -0.5f}));

  auto stereo = encode_wav(Audio{24000, {0.0f, 0.0f}});
  stereo[22] = 2;
  EXPECT_THROW(decode_wav(stereo), FormatError);
}

TEST(Extract, SilenceAndLength) {
  const Features f = extract_features(Audio{24000, std::vector<float>(24000 + 239, 0.0f)});
  EXPECT_EQ(f.frames(), 100u);
  for (float v : f.f0) EXPECT_EQ(v, 0.0f);
  for (float v : f.mel.values()) EXPECT_FLOAT_EQ(v, std::log(1e-5f));
  EXPECT_THROW(extract_features(Audio{16000, std::vector<float>(1600)}), DataError);
}

TEST(Extract, SawtoothPitch) {
  Audio a{24000, std::vector<float>(24000)};
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const double phase = std::fmod(200.0 * double(i) / 24000.0, 1.0);
    a.samples[i] = static_cast<float>(0.5 * (2.0 * phase - 1.0));
  }
  const Features f = extract_features(a);
  std::vector<float> voiced;
  for (float v : f.f0)
    if (v > 0) voiced.push_back(v);
  ASSERT_GT(voiced.size(), 80u);
  std::nth_element(voiced.begin(), voiced.begin() + voiced.size() / 2, voiced.end());
  EXPECT_NEAR(voiced[voiced.size() / 2], 200.0f, 5.0f);
  // Harmonics reach every band up to 8 kHz, so nothing sits at the floor.
  for (std::size_t m = 0; m < 100; ++m) EXPECT_GT(f.mel[m * f.frames() + 50], std::log(1e-5f) + 1.0f) << m;
}

}  // namespace
}  // namespace wavestream
