// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wavestream/tensor.hpp"

namespace wavestream {

/// Fixed-capacity history of the most recent values. Storage is allocated
/// once; positions never written read as zero.
template <class T>
class RingBuffer {
 public:
  RingBuffer() = default;
  explicit RingBuffer(std::size_t capacity) : data_(capacity, T{}) {}

  std::size_t capacity() const { return data_.size(); }
  std::uint64_t written() const { return written_; }

  void push(const T& v) {
    if (data_.empty()) return;
    data_[cursor_] = v;
    cursor_ = cursor_ + 1 == data_.size() ? 0 : cursor_ + 1;
    ++written_;
  }
  void push(std::span<const T> values) {
    // Only the newest capacity() values can survive.
    const std::size_t skip = values.size() > data_.size() ? values.size() - data_.size() : 0;
    if (skip) {
      cursor_ = (cursor_ + skip) % std::max<std::size_t>(1, data_.size());
      written_ += skip;
    }
    for (std::size_t i = skip; i < values.size(); ++i) push(values[i]);
  }

  /// i-th most recent value (0 = newest).
  T back(std::size_t i) const {
    if (i >= data_.size()) throw ConfigError("RingBuffer: index beyond capacity");
    return data_[(cursor_ + data_.size() - 1 - i) % data_.size()];
  }

  /// Copies the last k values, oldest first.
  void copy_last(std::size_t k, std::span<T> dst) const {
    if (k > data_.size() || dst.size() < k) throw ConfigError("RingBuffer: bad copy_last extent");
    std::size_t pos = (cursor_ + data_.size() - k) % std::max<std::size_t>(1, data_.size());
    for (std::size_t i = 0; i < k; ++i) {
      dst[i] = data_[pos];
      pos = pos + 1 == data_.size() ? 0 : pos + 1;
    }
  }

  void clear() {
    std::fill(data_.begin(), data_.end(), T{});
    cursor_ = 0;
    written_ = 0;
  }

  std::size_t bytes() const { return data_.capacity() * sizeof(T); }

 private:
  std::vector<T> data_;
  std::size_t cursor_ = 0;
  std::uint64_t written_ = 0;
};

}  // namespace wavestream
