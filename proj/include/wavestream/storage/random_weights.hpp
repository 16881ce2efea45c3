// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>

#include "wavestream/dsp/filterbank.hpp"
#include "wavestream/models/weights.hpp"

namespace wavestream {

namespace detail {

// mt19937_64 is specified bit-for-bit by the standard; the distributions are
// not, so the uniform mapping is done by hand to keep files portable.
inline float uniform_symmetric(std::mt19937_64& rng, double bound) {
  const double u = double(rng() >> 11) * 0x1.0p-53;
  return static_cast<float>((2.0 * u - 1.0) * bound);
}

}  // namespace detail

/// Seeded desk-scale initialization: He-uniform convolution weights, zero
/// biases, identity batch-norm statistics, PQMF filter banks.
inline WeightSet generate_random_weights(const ModelConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  WeightSet out;
  std::optional<dsp::FilterBank> bank;
  for (const ParamSpec& spec : parameter_specs(cfg)) {
    Tensor t(spec.shape);
    switch (spec.kind) {
      case ParamKind::conv_weight: {
        const double bound = std::sqrt(6.0 / double(spec.fan_in));
        for (float& v : t.data()) v = detail::uniform_symmetric(rng, bound);
        break;
      }
      case ParamKind::bn_var:
      case ParamKind::bn_gamma:
        t.fill(1.0f);
        break;
      case ParamKind::analysis_filter:
      case ParamKind::synthesis_filter:
        if (!bank) bank = dsp::design_pqmf(cfg.streams(), cfg.filter_taps);
        t = spec.kind == ParamKind::analysis_filter ? bank->analysis_tensor() : bank->synthesis_tensor();
        break;
      default:
        break;  // biases, means and shifts stay zero
    }
    out.set(spec.name, std::move(t));
  }
  return out;
}

}  // namespace wavestream
