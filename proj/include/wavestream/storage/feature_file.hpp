// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <filesystem>

#include "wavestream/storage/binary.hpp"
#include "wavestream/storage/features.hpp"

namespace wavestream {

// Layout: "MSWF", u32 version, u32 T, u32 mel bins, mel [T x bins] f32
// (frame-major), f0 [T] f32. Little-endian.

inline std::vector<std::uint8_t> encode_features(const Features& f) {
  const std::size_t t = f.frames(), bins = f.mel.shape().rank() == 2 ? f.mel.dim(0) : 0;
  if (f.mel.shape().rank() != 2 || f.mel.dim(1) != t)
    throw DataError("features: mel " + f.mel.shape().to_string() + " does not match " + std::to_string(t) + " frames");
  io::ByteWriter out;
  out.raw("MSWF");
  out.u32(1);
  out.u32(static_cast<std::uint32_t>(t));
  out.u32(static_cast<std::uint32_t>(bins));
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t c = 0; c < bins; ++c) out.f32(f.mel[c * t + i]);
  out.f32s(f.f0);
  return std::move(out.bytes());
}

inline Features decode_features(std::span<const std::uint8_t> bytes, const std::string& what = "features") {
  io::ByteReader in(bytes, what);
  if (in.str(4) != "MSWF") in.fail("bad magic (expected MSWF)");
  if (const auto v = in.u32(); v != 1) in.fail("unsupported version " + std::to_string(v));
  const std::size_t t = in.u32();
  const std::size_t bins = in.u32();
  if (bins != 100) in.fail("mel bin count " + std::to_string(bins) + " (expected 100)");
  if (std::uint64_t(t) * (bins + 1) * 4 != in.remaining()) in.fail("payload length does not match header");
  Features f{Tensor(Shape{bins, t}), std::vector<float>(t)};
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t c = 0; c < bins; ++c) {
      const float v = in.f32();
      if (!std::isfinite(v)) in.fail("non-finite mel value");
      f.mel[c * t + i] = v;
    }
  for (float& v : f.f0) {
    v = in.f32();
    if (!std::isfinite(v) || v < 0.0f) in.fail("F0 must be finite and >= 0");
  }
  return f;
}

inline void write_features(const std::filesystem::path& path, const Features& f) {
  io::write_file(path, encode_features(f));
}

inline Features read_features(const std::filesystem::path& path) {
  return decode_features(io::read_file(path), path.string());
}

}  // namespace wavestream
