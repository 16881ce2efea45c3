// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "wavestream/models/config.hpp"
#include "wavestream/ops.hpp"
#include "wavestream/tensor.hpp"

namespace wavestream {

/// Named parameter tensors, ordered by name.
class WeightSet {
 public:
  void set(const std::string& name, Tensor t) { tensors_[name] = std::move(t); }
  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  std::size_t size() const { return tensors_.size(); }
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }

  const Tensor& get(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw LoadError("missing weight tensor '" + name + "'");
    return it->second;
  }

  const Tensor& get(const std::string& name, const Shape& expected) const {
    const Tensor& t = get(name);
    if (!(t.shape() == expected))
      throw LoadError("weight tensor '" + name + "' has shape " + t.shape().to_string() +
                      ", expected " + expected.to_string());
    return t;
  }

  BatchNormParams batchnorm(const std::string& prefix, std::size_t channels) const {
    const Shape s{channels};
    BatchNormParams p{get(prefix + ".mean", s).values(), get(prefix + ".var", s).values(),
                      get(prefix + ".gamma", s).values(), get(prefix + ".beta", s).values(),
                      1e-5f};
    for (float v : p.var)
      if (!(v >= 0.0f)) throw LoadError("weight tensor '" + prefix + ".var' has negative variance");
    return p;
  }

 private:
  std::map<std::string, Tensor> tensors_;
};

enum class ParamKind { conv_weight, bias, bn_mean, bn_var, bn_gamma, bn_beta, analysis_filter, synthesis_filter };

struct ParamSpec {
  std::string name;
  Shape shape;
  ParamKind kind;
  std::size_t fan_in = 0;  // conv weights only
};

namespace detail {

inline void add_conv(std::vector<ParamSpec>& out, const std::string& name, std::size_t c_out,
                     std::size_t c_in_per_group, std::size_t kh, std::size_t kw) {
  out.push_back({name + ".weight", Shape{c_out, c_in_per_group, kh, kw}, ParamKind::conv_weight,
                 c_in_per_group * kh * kw});
  out.push_back({name + ".bias", Shape{c_out}, ParamKind::bias});
}

inline void add_bn(std::vector<ParamSpec>& out, const std::string& name, std::size_t c) {
  out.push_back({name + ".mean", Shape{c}, ParamKind::bn_mean});
  out.push_back({name + ".var", Shape{c}, ParamKind::bn_var});
  out.push_back({name + ".gamma", Shape{c}, ParamKind::bn_gamma});
  out.push_back({name + ".beta", Shape{c}, ParamKind::bn_beta});
}

}  // namespace detail

/// Every tensor a model of this configuration needs, with its exact shape.
/// Causal and non-causal variants share one layout.
inline std::vector<ParamSpec> parameter_specs(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<ParamSpec> out;
  const std::size_t hidden = cfg.hidden(), k = cfg.kernel_size;
  const std::size_t kh = cfg.two_dimensional() ? k : 1;
  if (cfg.two_dimensional()) {
    detail::add_conv(out, "mel_proj", cfg.mel_projection_channels() * cfg.bins(), cfg.mel_bins, 1, k);
    detail::add_conv(out, "stem", hidden, cfg.trunk_input_channels(), k, k);
  } else {
    detail::add_conv(out, "stem", hidden, cfg.trunk_input_channels(), 1, k);
  }
  detail::add_bn(out, "stem_bn", hidden);
  for (std::size_t b = 0; b < cfg.num_blocks; ++b) {
    const std::string p = "blocks." + std::to_string(b);
    detail::add_conv(out, p + ".dw", hidden, 1, kh, k);
    detail::add_bn(out, p + ".bn", hidden);
    detail::add_conv(out, p + ".pw1", cfg.expanded(), hidden, 1, 1);
    detail::add_conv(out, p + ".pw2", hidden, cfg.expanded(), 1, 1);
  }
  detail::add_bn(out, "final_bn", hidden);
  detail::add_conv(out, "head", cfg.head_channels(), hidden, 1, 1);
  if (cfg.variant == Variant::ms_wavehax)
    out.push_back({"analysis_filter", Shape{cfg.streams(), cfg.filter_taps}, ParamKind::analysis_filter});
  if (cfg.multi_stream())
    out.push_back({"synthesis_filter", Shape{cfg.streams(), cfg.filter_taps}, ParamKind::synthesis_filter});
  return out;
}

}  // namespace wavestream
