// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// End-to-end acceptance checks shared by `wavestream verify` and the
// acceptance test binary. Each check returns a verdict with a one-line
// detail and never throws.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "wavestream/bench/bench.hpp"
#include "wavestream/costmodel/costmodel.hpp"
#include "wavestream/costmodel/report.hpp"
#include "wavestream/dsp/filterbank.hpp"
#include "wavestream/dsp/stft.hpp"
#include "wavestream/models/model.hpp"
#include "wavestream/storage/features.hpp"
#include "wavestream/storage/random_weights.hpp"
#include "wavestream/streaming/session.hpp"

namespace wavestream::acceptance {

struct Options {
  std::uint64_t seed = 1234;
  /// Runs the full timing protocol for the RTF check instead of the smoke plan.
  bool full_bench = false;
  /// Total heap allocations so far; needed by the memory check.
  std::function<std::uint64_t()> allocation_count;
  std::function<void(const std::string&)> log;
};

struct Result {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

inline constexpr int kCriteria = 11;

namespace detail {

constexpr Variant kVariants[] = {Variant::vocos, Variant::ms_vocos, Variant::wavehax, Variant::ms_wavehax};

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

inline ModelConfig config(Variant v, bool causal = false, std::size_t la = 0) {
  ModelConfig c;
  c.variant = v;
  c.causal = causal;
  c.lookahead = la;
  return c;
}

inline void note(const Options& o, const std::string& s) {
  if (o.log) o.log(s);
}

// Streams every chunk through a fresh session and appends the tail.
inline std::vector<float> stream_all(const Model& m, const Features& f, std::size_t chunk) {
  const auto chunks = bench::detail::slice_chunks(f, chunk);
  StreamSession s(m, chunk);
  std::vector<float> out;
  out.reserve(f.frames() * m.config().hop);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const std::size_t n = chunks[i].dim(1);
    const auto part = s.process_chunk(chunks[i], std::span<const float>(f.f0).subspan(i * chunk, n));
    out.insert(out.end(), part.begin(), part.end());
  }
  const auto tail = s.finish();
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

}  // namespace detail

inline Result table2_cells(const Options&) {
  struct Cells {
    std::uint64_t x, y, macs;
  };
  static constexpr Cells kExpected[] = {{3584, 3584, 3584},     {512, 786432, 786432}, {1536, 786432, 786432},
                                        {377888, 1568, 377888}, {7712, 2048, 493568},  {15424, 2048, 493568}};
  Result r{1, "Reference layer costs exact", false, {}, 0.0};
  const auto rows = cost::table2_rows();
  std::size_t matched = 0;
  for (std::size_t i = 0; i < rows.size() && i < 6; ++i) {
    const auto& c = rows[i].cost;
    matched += c.column_size.at(1) == kExpected[i].x;
    matched += c.filter_size.at(1) == kExpected[i].y;
    matched += c.macs.at(1) == kExpected[i].macs;
  }
  r.passed = rows.size() == 6 && matched == 18;
  r.detail = std::to_string(matched) + "/18 cells equal";
  return r;
}

inline Result aggregate_profiles(const Options&) {
  Result r{2, "Aggregate profiles and crossover", false, {}, 0.0};
  const auto v = cost::aggregate_profile(cost::BlockKind::vocos_1d);
  const auto w = cost::aggregate_profile(cost::BlockKind::wavehax_2d);
  const auto a = v.aggregate(), b = w.aggregate();
  const auto t = cost::crossover_chunk(v, w);
  r.passed = a == cost::Linear{5632, 1576448} && b == cost::Linear{401024, 5664} && a.intercept > b.intercept &&
             b.slope > a.slope && t && *t >= 3.9 && *t <= 4.0;
  r.detail = "1D " + cost::symbolic(a) + ", 2D " + cost::symbolic(b) + ", T* = " + (t ? detail::fmt("%.4f", *t) : "none");
  return r;
}

inline Result measured_equals_predicted(const Options& o) {
  Result r{3, "Measured im2col equals prediction", false, {}, 0.0};
  std::mt19937 rng(static_cast<unsigned>(o.seed));
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  auto random = [&](Shape s) {
    Tensor t(s);
    for (auto& x : t.data()) x = dist(rng);
    return t;
  };
  std::size_t checks = 0, failures = 0;
  std::string first_failure;
  for (const auto& row : cost::table2_geometries()) {
    const auto pred = cost::im2col_cost(row.geometry, row.height);
    const auto& g = row.geometry;
    const Tensor w = random(Shape{g.out_channels, g.in_channels / g.groups, g.filter_height, g.filter_width});
    const ConvLayer layer(w, std::nullopt, g);
    ConvWorkspace ws;
    for (std::size_t t = 1; t <= 16; ++t) {
      const Tensor x = random(Shape{g.in_channels, row.height, t});
      std::uint64_t cols = 0, macs = 0;
      layer.forward(x, ws, &cols);
      conv_direct(x, w, std::nullopt, g, &macs);
      checks += 2;
      if (cols != pred.column_size.at(t) || macs != pred.macs.at(t)) {
        ++failures;
        if (first_failure.empty()) first_failure = ", first mismatch " + row.name + " T=" + std::to_string(t);
      }
    }
  }
  r.passed = failures == 0;
  r.detail = std::to_string(checks) + " counts over 6 geometries x T=1..16, " + std::to_string(failures) +
             " mismatches" + first_failure;
  return r;
}

inline Result streaming_equals_batch(const Options& o) {
  Result r{4, "Streaming equals batch", false, {}, 0.0};
  const Features f = synthetic_features(1000, o.seed);
  double worst = 0.0;
  std::size_t cases = 0, failures = 0;
  std::string where;
  for (Variant v : detail::kVariants)
    for (int mode = 0; mode < 3; ++mode) {
      const ModelConfig c = detail::config(v, mode > 0, mode == 2 ? 1 : 0);
      const Model m(c, generate_random_weights(c, o.seed));
      const auto batch = m.forward_batch(f.mel, f.f0);
      for (std::size_t chunk : {1u, 2u, 4u, 8u, 16u}) {
        detail::note(o, c.name() + " chunk " + std::to_string(chunk));
        const auto s = detail::stream_all(m, f, chunk);
        ++cases;
        double diff = s.size() == batch.size() ? 0.0 : INFINITY;
        for (std::size_t i = 0; i < s.size() && i < batch.size(); ++i)
          diff = std::max(diff, double(std::fabs(s[i] - batch[i])));
        if (!(diff <= 1e-4)) {
          ++failures;
          if (where.empty()) where = ", worst case " + c.name() + " chunk " + std::to_string(chunk);
        }
        worst = std::max(worst, diff);
      }
    }
  r.passed = failures == 0;
  r.detail = std::to_string(cases) + " cases, max |stream - batch| = " + detail::fmt("%.3g", worst) + where;
  return r;
}

inline Result causality(const Options& o) {
  Result r{5, "Causality contract", false, {}, 0.0};
  constexpr std::size_t kFrames = 64;
  const Features f = synthetic_features(kFrames, o.seed);
  std::size_t cases = 0, failures = 0;
  std::string where;
  for (Variant v : detail::kVariants)
    for (std::size_t la : {0u, 1u}) {
      const ModelConfig c = detail::config(v, true, la);
      const Model m(c, generate_random_weights(c, o.seed));
      const auto base = m.forward_batch(f.mel, f.f0);
      for (std::size_t p : {5u, 50u}) {
        Features g = f;
        for (std::size_t t = p; t < kFrames; ++t) {
          for (std::size_t b = 0; b < g.mel.dim(0); ++b) g.mel[b * kFrames + t] += 0.75f;
          g.f0[t] = g.f0[t] > 0 ? g.f0[t] * 1.25f : 150.0f;
        }
        const auto pert = m.forward_batch(g.mel, g.f0);
        ++cases;
        bool ok = pert.size() == base.size();
        for (std::size_t n = 0; ok && n < base.size() && n / c.hop + la < p; ++n)
          ok = std::memcmp(&base[n], &pert[n], sizeof(float)) == 0;
        if (!ok) {
          ++failures;
          if (where.empty()) where = ", first violation " + c.name() + " p=" + std::to_string(p);
        }
      }
    }
  r.passed = failures == 0;
  r.detail = std::to_string(cases - failures) + "/" + std::to_string(cases) + " bit-exact prefixes" + where;
  return r;
}

inline Result dsp_round_trips(const Options& o) {
  Result r{6, "DSP round trips", false, {}, 0.0};
  using dsp::StftConfig;
  auto sine = [](double freq, double rate, std::size_t n) {
    std::vector<float> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = float(0.5 * std::sin(2 * std::numbers::pi * freq * double(i) / rate));
    return x;
  };
  std::mt19937 rng(static_cast<unsigned>(o.seed));
  auto noise = [&](std::size_t n) {
    std::normal_distribution<float> d(0.0f, 0.3f);
    std::vector<float> x(n);
    for (auto& v : x) v = d(rng);
    return x;
  };
  auto interior_error = [](const std::vector<float>& x, const StftConfig& cfg) {
    const auto y = dsp::istft(dsp::stft(x, cfg), cfg, dsp::Centering::reflect, x.size());
    double err = 0.0;
    for (std::size_t i = cfg.frame_length; i + cfg.frame_length < x.size(); ++i)
      err = std::max(err, double(std::fabs(y[i] - x[i])));
    return err;
  };
  const StftConfig full{480, 240, 24000.0}, sub{120, 60, 6000.0};
  double stft_err = 0.0;
  stft_err = std::max(stft_err, interior_error(sine(440.0, 24000.0, 48000), full));
  stft_err = std::max(stft_err, interior_error(noise(48000), full));
  stft_err = std::max(stft_err, interior_error(sine(440.0, 6000.0, 12000), sub));
  stft_err = std::max(stft_err, interior_error(noise(12000), sub));

  double snr = INFINITY;
  std::size_t delay = 0;
  try {
    const dsp::FilterBank bank = dsp::design_pqmf(4, 63);
    delay = bank.group_delay;
    const auto x = noise(24000);
    const auto y = dsp::reconstruct(x, bank);
    double sig = 0.0, err = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
      sig += double(x[n]) * x[n];
      err += double(y[n] - x[n]) * (y[n] - x[n]);
    }
    snr = err == 0.0 ? INFINITY : 10.0 * std::log10(sig / err);
  } catch (const std::exception&) {
    snr = -INFINITY;
  }
  r.passed = stft_err <= 1e-5 && snr >= 40.0 && delay == 62;
  r.detail = "STFT interior error " + detail::fmt("%.3g", stft_err) + ", cascade SNR " + detail::fmt("%.2f", snr) +
             " dB, delay " + std::to_string(delay);
  return r;
}

inline Result structural_constants(const Options& o) {
  Result r{7, "Structural constants", false, {}, 0.0};
  std::vector<std::string> bad;
  auto expect = [&](const char* what, std::size_t got, std::size_t want) {
    if (got != want) bad.push_back(std::string(what) + " " + std::to_string(got) + " != " + std::to_string(want));
  };
  auto built = [&](Variant v) {
    const ModelConfig c = detail::config(v);
    return Model(c, generate_random_weights(c, o.seed));
  };
  const Model msv = built(Variant::ms_vocos), msw = built(Variant::ms_wavehax), wh = built(Variant::wavehax);
  expect("ms-vocos head", msv.head().geometry().out_channels, 968);
  expect("ms-vocos istft frame", msv.dft().config().frame_length, 240);
  expect("ms-vocos istft hop", msv.dft().config().hop, 60);
  expect("ms-vocos filter taps", msv.synthesis_filter().dim(1), 63);
  expect("ms-wavehax trunk input", msw.stem().geometry().in_channels, 12);
  expect("ms-wavehax head", msw.head().geometry().out_channels, 8);
  expect("ms-wavehax hidden", msw.stem().geometry().out_channels, 64);
  expect("ms-wavehax filter taps", msw.synthesis_filter().dim(1), 63);
  expect("wavehax hidden", wh.stem().geometry().out_channels, 32);
  expect("wavehax bins", wh.dft().config().bins(), 241);
  r.passed = bad.empty();
  r.detail = bad.empty() ? "10 built-model constants match, static assertions compiled" : bad.front();
  return r;
}

inline Result latency_accounting(const Options&) {
  Result r{8, "Latency accounting", false, {}, 0.0};
  bool ok = true;
  double buffering = 0.0, lookahead = 0.0;
  for (Variant v : detail::kVariants) {
    const ModelConfig c0 = detail::config(v, true, 0), c1 = detail::config(v, true, 1);
    buffering = latency_report(c0, 8).total_ms - latency_report(c0, 1).total_ms;
    lookahead = latency_report(c1, 1).algorithmic_lookahead_ms - latency_report(c0, 1).algorithmic_lookahead_ms;
    ok = ok && buffering == 70.0 && lookahead == 10.0 &&
         latency_report(c1, 8).total_ms - latency_report(c0, 8).total_ms == 10.0;
  }
  r.passed = ok;
  r.detail = "chunk 8 vs 1: +" + detail::fmt("%g", buffering) + " ms; LA=1 vs LA=0: +" + detail::fmt("%g", lookahead) +
             " ms";
  return r;
}

inline Result param_mac_trends(const Options& o) {
  Result r{9, "Parameter and MAC trends", false, {}, 0.0};
  auto built = [&](Variant v) {
    const ModelConfig c = detail::config(v);
    return Model(c, generate_random_weights(c, o.seed));
  };
  const Model v = built(Variant::vocos), w = built(Variant::wavehax), ms = built(Variant::ms_wavehax);
  const auto pw = cost::count_params(w), pms = cost::count_params(ms);
  const auto mw = cost::count_macs(w, 1.0, cost::StftAccounting::transform_as_matrix);
  const auto mms = cost::count_macs(ms, 1.0, cost::StftAccounting::transform_as_matrix);
  const auto blocks = cost::count_model(v).macs_per_frame("blocks.") * 100;
  r.passed = pms < pw && mms < mw && blocks == 8ull * 100 * 1576448;
  r.detail = "params " + std::to_string(pms) + " < " + std::to_string(pw) + ", MACs/s " + std::to_string(mms) +
             " < " + std::to_string(mw) + ", vocos blocks " + std::to_string(blocks) + " MACs/s";
  return r;
}

inline Result rtf_trend(const Options& o) {
  Result r{10, "RTF trend", false, {}, 0.0};
  const bench::BenchPlan plan = o.full_bench ? bench::BenchPlan::default_plan() : bench::BenchPlan::smoke_plan();
  const auto res = bench::run_plan(plan, bench::random_weight_source(o.seed), o.seed, o.log);
  if (!res.errors.empty()) {
    r.detail = "bench error: " + res.errors.front();
    return r;
  }
  const auto cells = bench::summarize(res.records);
  bool ok = true;
  std::string detail;
  for (const auto& cfg : plan.models) {
    const auto* c1 = bench::find_cell(cells, cfg.name(), bench::Mode::stream, 1);
    const auto* c16 = bench::find_cell(cells, cfg.name(), bench::Mode::stream, 16);
    if (!c1 || !c16) {
      ok = false;
      continue;
    }
    ok = ok && c16->mean < c1->mean;
    detail += (detail.empty() ? "" : "; ") + std::string(variant_name(cfg.variant)) + " " +
              detail::fmt("%.3f", c1->mean) + " -> " + detail::fmt("%.3f", c16->mean);
  }
  r.passed = ok;
  r.detail = std::string(o.full_bench ? "full" : "smoke") + " plan, mean RTF chunk 1 -> 16: " + detail;
  return r;
}

inline Result memory_constancy(const Options& o) {
  Result r{11, "Streaming memory constancy", false, {}, 0.0};
  if (!o.allocation_count) {
    r.detail = "no allocation counter installed in this program";
    return r;
  }
  constexpr std::size_t kChunk = 16;
  std::uint64_t allocations = 0;
  bool footprint_ok = true;
  std::string sizes;
  for (Variant v : detail::kVariants) {
    const ModelConfig c = detail::config(v, true, 1);
    const Model m(c, generate_random_weights(c, o.seed));
    std::size_t footprint[2] = {0, 0};
    const std::size_t lengths[2] = {100, 6000};  // 1 s and 60 s
    for (int k = 0; k < 2; ++k) {
      detail::note(o, c.name() + " " + std::to_string(lengths[k] / 100) + " s");
      const Features f = synthetic_features(lengths[k], o.seed);
      const auto chunks = bench::detail::slice_chunks(f, kChunk);
      StreamSession s(m, kChunk);
      std::vector<float> out(s.max_chunk_samples()), tail(s.max_finish_samples());
      const std::size_t initial = s.footprint_bytes();
      s.process_chunk(chunks[0].view(), std::span<const float>(f.f0).first(chunks[0].dim(1)), out);
      const std::uint64_t before = o.allocation_count();
      for (std::size_t i = 1; i < chunks.size(); ++i) {
        s.process_chunk(chunks[i].view(), std::span<const float>(f.f0).subspan(i * kChunk, chunks[i].dim(1)), out);
        footprint_ok = footprint_ok && s.footprint_bytes() == initial;
      }
      s.finish(tail);
      allocations += o.allocation_count() - before;
      footprint[k] = s.footprint_bytes();
      footprint_ok = footprint_ok && footprint[k] == initial;
    }
    footprint_ok = footprint_ok && footprint[0] == footprint[1];
    sizes += (sizes.empty() ? "" : ", ") + std::string(variant_name(v)) + " " + std::to_string(footprint[0] / 1024) +
             " KiB";
  }
  r.passed = allocations == 0 && footprint_ok;
  r.detail = std::to_string(allocations) + " allocations after warm-up; footprint 1 s == 60 s: " +
             (footprint_ok ? "yes" : "no") + " (" + sizes + ")";
  return r;
}

inline Result run(int id, const Options& o) {
  using Fn = Result (*)(const Options&);
  static constexpr Fn kChecks[kCriteria] = {table2_cells,      aggregate_profiles,   measured_equals_predicted,
                                            streaming_equals_batch, causality,       dsp_round_trips,
                                            structural_constants,   latency_accounting, param_mac_trends,
                                            rtf_trend,              memory_constancy};
  Result r;
  r.id = id;
  const auto t0 = std::chrono::steady_clock::now();
  if (id < 1 || id > kCriteria) {
    r.detail = "no such criterion";
    return r;
  }
  try {
    r = kChecks[id - 1](o);
  } catch (const std::exception& e) {
    r.id = id;
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// Criteria grouped by the `verify --suite` names.
inline std::vector<int> suite(const std::string& name) {
  if (name == "all") return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  if (name == "cost") return {1, 2, 3, 9};
  if (name == "dsp") return {6, 7};
  if (name == "stream") return {4, 5, 8, 11};
  if (name == "bench") return {10};
  throw ConfigError("unknown suite '" + name + "' (all, cost, dsp, stream, bench)");
}

inline std::string format(const Result& r) {
  char head[96];
  std::snprintf(head, sizeof(head), "[%s] criterion %2d  %-36s", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str());
  return std::string(head) + r.detail + " (" + detail::fmt("%.1f", r.seconds) + " s)";
}

}  // namespace wavestream::acceptance
