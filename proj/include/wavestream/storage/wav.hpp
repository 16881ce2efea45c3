// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "wavestream/storage/binary.hpp"

namespace wavestream {

struct Audio {
  std::uint32_t sample_rate = 24000;
  std::vector<float> samples;
};

/// Mono 16-bit PCM. Samples are clamped to [-1, 1] and scaled by 32768.
inline std::vector<std::uint8_t> encode_wav(const Audio& a) {
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(a.samples.size() * 2);
  io::ByteWriter out;
  out.raw("RIFF");
  out.u32(36 + data_bytes);
  out.raw("WAVE");
  out.raw("fmt ");
  out.u32(16);
  out.u16(1);
  out.u16(1);
  out.u32(a.sample_rate);
  out.u32(a.sample_rate * 2);
  out.u16(2);
  out.u16(16);
  out.raw("data");
  out.u32(data_bytes);
  for (float x : a.samples) {
    const double q = std::round(std::clamp(double(x), -1.0, 1.0) * 32768.0);
    out.u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0))));
  }
  return std::move(out.bytes());
}

/// Accepts mono 16-bit PCM or 32-bit IEEE float.
inline Audio decode_wav(std::span<const std::uint8_t> bytes, const std::string& what = "wav") {
  io::ByteReader in(bytes, what);
  if (in.str(4) != "RIFF") in.fail("bad magic (expected RIFF)");
  in.u32();
  if (in.str(4) != "WAVE") in.fail("not a WAVE file");
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  while (true) {
    const std::string id = in.str(4);
    const std::uint32_t size = in.u32();
    if (id == "fmt ") {
      if (size < 16) in.fail("fmt chunk too short");
      format = in.u16();
      channels = in.u16();
      rate = in.u32();
      in.u32();
      in.u16();
      bits = in.u16();
      std::size_t used = 16;
      if (format == 0xFFFE && size >= 26) {
        in.skip(8);  // cbSize, valid bits, channel mask
        format = in.u16();
        used = 26;
      }
      in.skip(size - used + (size & 1));
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) in.fail("data chunk before fmt chunk");
      if (channels != 1) in.fail("expected mono audio, found " + std::to_string(channels) + " channels");
      Audio a;
      a.sample_rate = rate;
      in.need(size);
      if (format == 1 && bits == 16) {
        a.samples.resize(size / 2);
        for (float& v : a.samples) v = float(static_cast<std::int16_t>(in.u16())) / 32768.0f;
      } else if (format == 3 && bits == 32) {
        a.samples.resize(size / 4);
        in.f32s(a.samples);
      } else {
        in.fail("unsupported sample format " + std::to_string(format) + "/" + std::to_string(bits) + " bit");
      }
      return a;
    } else {
      in.skip(size + (size & 1));
    }
  }
}

inline void write_wav(const std::filesystem::path& path, const Audio& a) { io::write_file(path, encode_wav(a)); }

inline Audio read_wav(const std::filesystem::path& path) { return decode_wav(io::read_file(path), path.string()); }

}  // namespace wavestream
