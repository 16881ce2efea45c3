// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wavestream {

// Error taxonomy. The CLI maps ConfigError/DataError/FormatError to exit
// code 2 and NumericError/StateError to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
// Missing or ill-shaped tensor in a WeightSet.
class LoadError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Extents of a dense tensor, outermost first. Rank is capped at 4 so a
/// shape never touches the heap.
class Shape {
 public:
  static constexpr std::size_t kMaxRank = 4;

  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims) {
    if (dims.size() > kMaxRank) throw ConfigError("Shape: rank above 4");
    for (std::size_t d : dims) dims_[rank_++] = d;
  }
  explicit Shape(std::span<const std::size_t> dims) {
    if (dims.size() > kMaxRank) throw ConfigError("Shape: rank above 4");
    for (std::size_t d : dims) dims_[rank_++] = d;
  }

  std::size_t rank() const { return rank_; }
  std::size_t operator[](std::size_t i) const { return dims_[i]; }
  std::span<const std::size_t> dims() const { return {dims_.data(), rank_}; }

  std::size_t numel() const {
    std::size_t n = 1;
    for (std::size_t i = 0; i < rank_; ++i) n *= dims_[i];
    return n;
  }

  friend bool operator==(const Shape& a, const Shape& b) {
    if (a.rank_ != b.rank_) return false;
    for (std::size_t i = 0; i < a.rank_; ++i)
      if (a.dims_[i] != b.dims_[i]) return false;
    return true;
  }

  std::string to_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < rank_; ++i) {
      if (i) s += ", ";
      s += std::to_string(dims_[i]);
    }
    return s + "]";
  }

 private:
  std::array<std::size_t, kMaxRank> dims_{};
  std::size_t rank_ = 0;
};

/// Non-owning views used by the allocation-free kernels.
struct ConstView {
  Shape shape;
  std::span<const float> data;
};

struct MutView {
  Shape shape;
  std::span<float> data;
  operator ConstView() const { return {shape, data}; }
};

/// Dense row-major float32 tensor.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(shape), data_(shape.numel(), 0.0f) {}
  Tensor(Shape shape, std::vector<float> data)
      : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.numel())
      throw ConfigError("Tensor: data length " + std::to_string(data_.size()) +
                        " does not match shape " + shape_.to_string());
  }

  /// Construction from untrusted input: rejects NaN and Inf.
  static Tensor from_external(Shape shape, std::vector<float> data) {
    Tensor t(shape, std::move(data));
    if (!t.all_finite())
      throw DataError("Tensor: non-finite value in external input");
    return t;
  }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  float* raw() { return data_.data(); }
  const float* raw() const { return data_.data(); }
  const std::vector<float>& values() const { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  MutView view() { return {shape_, data_}; }
  ConstView view() const { return {shape_, data_}; }
  ConstView cview() const { return {shape_, data_}; }

  /// Reinterprets the extents; element count must be unchanged.
  void reshape(Shape shape) {
    if (shape.numel() != data_.size())
      throw ConfigError("Tensor::reshape: " + shape_.to_string() + " -> " +
                        shape.to_string());
    shape_ = shape;
  }

  /// Changes extents, reusing existing capacity when possible.
  void resize(Shape shape) {
    shape_ = shape;
    data_.resize(shape.numel());
  }

  void reserve(std::size_t n) { data_.reserve(n); }
  std::size_t capacity() const { return data_.capacity(); }
  void fill(float v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](float v) { return std::isfinite(v); });
  }

 private:
  Shape shape_;
  std::vector<float> data_;
};

inline float max_abs_diff(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size())
    throw DataError("max_abs_diff: length mismatch " + std::to_string(a.size()) +
                    " vs " + std::to_string(b.size()));
  float m = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace wavestream
