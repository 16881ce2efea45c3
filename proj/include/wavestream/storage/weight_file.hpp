// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <set>

#include "wavestream/models/weights.hpp"
#include "wavestream/storage/binary.hpp"

namespace wavestream {

// Layout: "MSWT", u32 version, u32 count, then per tensor: u16 name length,
// name, u8 dtype (0 = f32), u8 rank, u32 dims, f32 payload. Little-endian.

inline std::vector<std::uint8_t> encode_weights(const WeightSet& w) {
  io::ByteWriter out;
  out.raw("MSWT");
  out.u32(1);
  out.u32(static_cast<std::uint32_t>(w.size()));
  for (const auto& [name, t] : w.tensors()) {
    if (name.size() > 0xFFFF) throw FormatError("tensor name too long: " + name.substr(0, 32));
    out.u16(static_cast<std::uint16_t>(name.size()));
    out.raw(name);
    out.u8(0);
    out.u8(static_cast<std::uint8_t>(t.shape().rank()));
    for (std::size_t d : t.shape().dims()) out.u32(static_cast<std::uint32_t>(d));
    out.f32s(t.data());
  }
  return std::move(out.bytes());
}

inline WeightSet decode_weights(std::span<const std::uint8_t> bytes, const std::string& what = "weights") {
  io::ByteReader in(bytes, what);
  if (in.str(4) != "MSWT") in.fail("bad magic (expected MSWT)");
  if (const auto v = in.u32(); v != 1) in.fail("unsupported version " + std::to_string(v));
  const std::uint32_t count = in.u32();
  WeightSet w;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = in.str(in.u16());
    if (w.contains(name)) in.fail("duplicate tensor '" + name + "'");
    if (const auto dtype = in.u8(); dtype != 0) in.fail("unsupported dtype " + std::to_string(dtype));
    const std::size_t rank = in.u8();
    if (rank > 4) in.fail("tensor '" + name + "' has rank " + std::to_string(rank));
    std::vector<std::size_t> dims(rank);
    std::uint64_t numel = 1;
    for (auto& d : dims) {
      d = in.u32();
      numel *= d;
    }
    if (numel * 4 > in.remaining()) in.fail("tensor '" + name + "' payload truncated");
    std::vector<float> data(numel);
    in.f32s(data);
    w.set(name, Tensor(Shape(std::span<const std::size_t>(dims)), std::move(data)));
  }
  if (in.remaining() != 0) in.fail("trailing bytes after last tensor");
  return w;
}

inline void write_weights(const std::filesystem::path& path, const WeightSet& w) {
  io::write_file(path, encode_weights(w));
}

inline WeightSet read_weights(const std::filesystem::path& path) {
  return decode_weights(io::read_file(path), path.string());
}

}  // namespace wavestream
