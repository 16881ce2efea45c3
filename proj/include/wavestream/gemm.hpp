// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <span>
#include <thread>
#include <vector>

#include "wavestream/tensor.hpp"

namespace wavestream {

namespace detail {

inline std::atomic<unsigned>& gemm_thread_setting() {
  static std::atomic<unsigned> threads{1};
  return threads;
}

// Row block [row_begin, row_end) of c = a * b.
//
// Every output element is accumulated as ((0 + a0*b0) + a1*b1) + ... with
// the reduction index ascending, which is the order of the naive triple
// loop. Blocking over rows, columns and the reduction dimension only changes
// which elements are live at once, never the order of additions into one
// element, so results are bit-identical to the naive loop (given
// -ffp-contract=off) and independent of how callers tile M.
inline void gemm_rows(const float* a, const float* b, float* c, std::size_t row_begin,
                      std::size_t row_end, std::size_t k, std::size_t n) {
  constexpr std::size_t kRowBlock = 4;
  constexpr std::size_t kColBlock = 256;
  constexpr std::size_t kDepthBlock = 256;

  if (n == 1) {
    // Matrix-vector: interleave 8 independent rows for ILP.
    constexpr std::size_t kLanes = 8;
    std::size_t i = row_begin;
    for (; i + kLanes <= row_end; i += kLanes) {
      float acc[kLanes] = {};
      for (std::size_t p = 0; p < k; ++p) {
        const float bv = b[p];
        for (std::size_t r = 0; r < kLanes; ++r) acc[r] += a[(i + r) * k + p] * bv;
      }
      for (std::size_t r = 0; r < kLanes; ++r) c[i + r] = acc[r];
    }
    for (; i < row_end; ++i) {
      float acc = 0.0f;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p];
      c[i] = acc;
    }
    return;
  }

  for (std::size_t i = row_begin; i < row_end; ++i)
    std::fill(c + i * n, c + (i + 1) * n, 0.0f);

  alignas(64) float acc[kRowBlock][kColBlock];
  for (std::size_t j0 = 0; j0 < n; j0 += kColBlock) {
    const std::size_t cols = std::min(kColBlock, n - j0);
    for (std::size_t p0 = 0; p0 < k; p0 += kDepthBlock) {
      const std::size_t p1 = std::min(k, p0 + kDepthBlock);
      for (std::size_t i0 = row_begin; i0 < row_end; i0 += kRowBlock) {
        const std::size_t rows = std::min(kRowBlock, row_end - i0);
        for (std::size_t r = 0; r < rows; ++r)
          std::copy(c + (i0 + r) * n + j0, c + (i0 + r) * n + j0 + cols, acc[r]);
        for (std::size_t p = p0; p < p1; ++p) {
          const float* brow = b + p * n + j0;
          for (std::size_t r = 0; r < rows; ++r) {
            const float av = a[(i0 + r) * k + p];
            float* accr = acc[r];
            for (std::size_t j = 0; j < cols; ++j) accr[j] += av * brow[j];
          }
        }
        for (std::size_t r = 0; r < rows; ++r)
          std::copy(acc[r], acc[r] + cols, c + (i0 + r) * n + j0);
      }
    }
  }
}

}  // namespace detail

/// Number of threads a single gemm call may split its rows across. Default 1.
/// Results do not depend on this value.
inline void set_gemm_threads(unsigned threads) {
  detail::gemm_thread_setting().store(std::max(1u, threads));
}
inline unsigned gemm_threads() { return detail::gemm_thread_setting().load(); }

/// c[m x n] = a[m x k] * b[k x n], all row-major.
inline void gemm_into(std::span<const float> a, std::span<const float> b,
                      std::span<float> c, std::size_t m, std::size_t k, std::size_t n) {
  if (a.size() < m * k || b.size() < k * n || c.size() < m * n)
    throw ConfigError("gemm: buffer smaller than declared dimensions");
  const unsigned threads = gemm_threads();
  if (threads <= 1 || m * n * k < (1u << 18) || m < 2 * threads) {
    detail::gemm_rows(a.data(), b.data(), c.data(), 0, m, k, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t per = (m + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t r0 = t * per;
    const std::size_t r1 = std::min(m, r0 + per);
    if (r0 >= r1) break;
    pool.emplace_back([&, r0, r1] { detail::gemm_rows(a.data(), b.data(), c.data(), r0, r1, k, n); });
  }
  for (auto& th : pool) th.join();
}

/// Matrix product of two rank-2 tensors.
inline Tensor gemm(const Tensor& a, const Tensor& b) {
  if (a.shape().rank() != 2 || b.shape().rank() != 2)
    throw ConfigError("gemm: operands must be matrices, got " + a.shape().to_string() +
                      " and " + b.shape().to_string());
  if (a.dim(1) != b.dim(0))
    throw ConfigError("gemm: inner dimensions disagree " + a.shape().to_string() + " x " +
                      b.shape().to_string());
  Tensor c(Shape{a.dim(0), b.dim(1)});
  gemm_into(a.data(), b.data(), c.data(), a.dim(0), a.dim(1), b.dim(1));
  return c;
}

}  // namespace wavestream
