// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "wavestream/tensor.hpp"

namespace wavestream {

/// tanh-approximated GELU.
inline float gelu(float x) {
  constexpr float kSqrt2OverPi = 0.7978845608028654f;
  return 0.5f * x * (1.0f + std::tanh(kSqrt2OverPi * (x + 0.044715f * x * x * x)));
}

inline void gelu_inplace(std::span<float> x) {
  for (float& v : x) v = gelu(v);
}

inline Tensor gelu(const Tensor& input) {
  Tensor out = input;
  gelu_inplace(out.data());
  return out;
}

struct BatchNormParams {
  std::vector<float> mean, var, gamma, beta;
  float epsilon = 1e-5f;

  std::size_t channels() const { return mean.size(); }
  void validate() const {
    const std::size_t c = mean.size();
    if (var.size() != c || gamma.size() != c || beta.size() != c)
      throw ConfigError("batchnorm: parameter lengths disagree");
    for (float v : var)
      if (!(v >= 0.0f)) throw DataError("batchnorm: negative variance");
  }
};

/// (x - mean) / sqrt(var + eps) * gamma + beta over dimension 0 (channels).
inline Tensor batchnorm_apply(const Tensor& input, const BatchNormParams& p) {
  p.validate();
  if (input.shape().rank() == 0 || input.dim(0) != p.channels())
    throw ConfigError("batchnorm: channel extent " +
                      std::to_string(input.shape().rank() ? input.dim(0) : 0) + " vs " +
                      std::to_string(p.channels()) + " parameters");
  Tensor out = input;
  const std::size_t inner = input.size() / p.channels();
  for (std::size_t c = 0; c < p.channels(); ++c) {
    const float denom = std::sqrt(p.var[c] + p.epsilon);
    float* x = out.raw() + c * inner;
    for (std::size_t i = 0; i < inner; ++i) x[i] = (x[i] - p.mean[c]) / denom * p.gamma[c] + p.beta[c];
  }
  return out;
}

/// Inference batch norm folded to y = x * scale + shift per channel.
class ChannelAffine {
 public:
  ChannelAffine() = default;
  explicit ChannelAffine(const BatchNormParams& p) {
    p.validate();
    scale_.resize(p.channels());
    shift_.resize(p.channels());
    for (std::size_t c = 0; c < p.channels(); ++c) {
      scale_[c] = p.gamma[c] / std::sqrt(p.var[c] + p.epsilon);
      shift_[c] = p.beta[c] - p.mean[c] * scale_[c];
    }
  }

  std::size_t channels() const { return scale_.size(); }

  /// `x` holds channels() contiguous blocks of `inner` values.
  void apply(std::span<float> x, std::size_t inner) const {
    for (std::size_t c = 0; c < scale_.size(); ++c) {
      const float s = scale_[c], t = shift_[c];
      float* p = x.data() + c * inner;
      for (std::size_t i = 0; i < inner; ++i) p[i] = p[i] * s + t;
    }
  }

 private:
  std::vector<float> scale_, shift_;
};

}  // namespace wavestream
