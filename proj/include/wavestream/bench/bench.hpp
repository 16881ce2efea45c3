// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#if defined(__linux__)
#include <sched.h>
#endif

#include "json.hpp"

#include "wavestream/gemm.hpp"
#include "wavestream/models/model.hpp"
#include "wavestream/storage/features.hpp"
#include "wavestream/storage/random_weights.hpp"
#include "wavestream/streaming/session.hpp"

namespace wavestream::bench {

enum class Mode { batch, stream };

inline std::string mode_name(Mode m) { return m == Mode::batch ? "batch" : "stream"; }

inline Mode parse_mode(const std::string& s) {
  if (s == "batch") return Mode::batch;
  if (s == "stream") return Mode::stream;
  throw ConfigError("unknown bench mode '" + s + "'");
}

struct BenchPlan {
  std::vector<ModelConfig> models;
  std::vector<Mode> modes{Mode::batch, Mode::stream};
  std::vector<std::size_t> chunk_sizes{1, 2, 4, 8, 16};
  std::size_t runs = 30;
  std::size_t warmup = 5;
  double audio_seconds = 10.0;
  unsigned threads = 1;

  std::size_t frames() const { return static_cast<std::size_t>(std::llround(audio_seconds * 100.0)); }

  void validate() const {
    if (models.empty()) throw ConfigError("bench plan: no models");
    if (modes.empty()) throw ConfigError("bench plan: no modes");
    if (runs < 1) throw ConfigError("bench plan: runs must be >= 1");
    if (threads < 1) throw ConfigError("bench plan: threads must be >= 1");
    if (!(audio_seconds > 0.0) || std::fabs(audio_seconds * 100.0 - double(frames())) > 1e-9)
      throw ConfigError("bench plan: audio_seconds * 100 must be a positive integer");
    for (std::size_t c : chunk_sizes)
      if (c == 0) throw ConfigError("bench plan: chunk sizes must be >= 1");
    for (const auto& m : models) m.validate();
  }

  /// Streaming variants of all four models (causal, one frame of lookahead),
  /// 30 runs of 10 s after 5 warm-ups.
  static BenchPlan default_plan() {
    BenchPlan p;
    for (Variant v : {Variant::vocos, Variant::ms_vocos, Variant::wavehax, Variant::ms_wavehax}) {
      ModelConfig c;
      c.variant = v;
      c.causal = true;
      c.lookahead = 1;
      p.models.push_back(c);
    }
    return p;
  }

  /// Reduced protocol for quick trend checks: streaming at chunk 1 and 16,
  /// 3 runs of 2 s after 1 warm-up.
  static BenchPlan smoke_plan() {
    BenchPlan p = default_plan();
    p.modes = {Mode::stream};
    p.chunk_sizes = {1, 16};
    p.runs = 3;
    p.warmup = 1;
    p.audio_seconds = 2.0;
    return p;
  }
};

/// Plan file (JSON): {"models": [{"variant": "wavehax", "causal": true,
/// "lookahead": 1, "blocks": 8}], "modes": ["batch", "stream"],
/// "chunk_sizes": [1, 2], "runs": 30, "warmup": 5, "audio_seconds": 10,
/// "threads": 1}. Missing keys keep their defaults.
inline BenchPlan parse_plan(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("bench plan: ") + e.what());
  }
  BenchPlan p;
  try {
    if (j.contains("models")) {
      p.models.clear();
      for (const auto& m : j.at("models")) {
        ModelConfig c;
        c.variant = parse_variant(m.at("variant").get<std::string>());
        c.causal = m.value("causal", false);
        c.lookahead = m.value("lookahead", 0u);
        c.num_blocks = m.value("blocks", 8u);
        p.models.push_back(c);
      }
    }
    if (j.contains("modes")) {
      p.modes.clear();
      for (const auto& m : j.at("modes")) p.modes.push_back(parse_mode(m.get<std::string>()));
    }
    if (j.contains("chunk_sizes")) p.chunk_sizes = j.at("chunk_sizes").get<std::vector<std::size_t>>();
    p.runs = j.value("runs", p.runs);
    p.warmup = j.value("warmup", p.warmup);
    p.audio_seconds = j.value("audio_seconds", p.audio_seconds);
    p.threads = j.value("threads", p.threads);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bench plan: ") + e.what());
  }
  p.validate();
  return p;
}

inline BenchPlan load_plan(const std::string& path_or_name) {
  if (path_or_name == "default") return BenchPlan::default_plan();
  if (path_or_name == "smoke") return BenchPlan::smoke_plan();
  std::ifstream in(path_or_name);
  if (!in) throw LoadError("cannot open bench plan '" + path_or_name + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_plan(ss.str());
}

struct BenchRecord {
  std::string model;
  Mode mode = Mode::batch;
  std::size_t chunk = 0;  // 0 for batch
  std::size_t run = 0;
  unsigned threads = 1;
  double synth_seconds = 0.0;
  double audio_seconds = 0.0;
  double rtf = 0.0;
};

struct BenchResult {
  std::vector<BenchRecord> records;
  std::vector<std::string> errors;    // one per model that failed to build or run
  std::vector<std::string> metadata;  // "key: value" lines
};

/// Weight provider for a configuration; the default draws seeded random
/// weights.
using WeightSource = std::function<WeightSet(const ModelConfig&)>;

inline WeightSource random_weight_source(std::uint64_t seed) {
  return [seed](const ModelConfig& c) { return generate_random_weights(c, seed); };
}

namespace detail {

inline std::string read_first_line_matching(const std::string& path, const std::string& key) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(key, 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        std::string v = line.substr(colon + 1);
        v.erase(0, v.find_first_not_of(" \t"));
        return v;
      }
    }
  return "";
}

inline std::vector<std::string> hardware_metadata() {
  std::vector<std::string> out;
  const std::string cpu = read_first_line_matching("/proc/cpuinfo", "model name");
  out.push_back("cpu: " + (cpu.empty() ? std::string("unknown") : cpu));
  out.push_back("hardware_threads: " + std::to_string(std::thread::hardware_concurrency()));
  for (int i = 0; i < 8; ++i) {
    const std::string base = "/sys/devices/system/cpu/cpu0/cache/index" + std::to_string(i) + "/";
    std::ifstream level(base + "level"), type(base + "type"), size(base + "size");
    std::string l, t, s;
    if (!(level >> l) || !(type >> t) || !(size >> s)) break;
    out.push_back("cache_L" + l + "_" + t + ": " + s);
  }
  return out;
}

// Best effort; returns a description for the metadata.
inline std::string pin_to_one_cpu() {
#if defined(__linux__)
  cpu_set_t current;
  if (sched_getaffinity(0, sizeof(current), &current) == 0) {
    for (int c = 0; c < CPU_SETSIZE; ++c)
      if (CPU_ISSET(c, &current)) {
        cpu_set_t one;
        CPU_ZERO(&one);
        CPU_SET(c, &one);
        if (sched_setaffinity(0, sizeof(one), &one) == 0) return "pinned to cpu " + std::to_string(c);
        break;
      }
  }
  return "pinning failed";
#else
  return "pinning unsupported";
#endif
}

inline std::vector<Tensor> slice_chunks(const Features& f, std::size_t chunk) {
  std::vector<Tensor> out;
  const std::size_t t_total = f.frames(), bins = f.mel.dim(0);
  for (std::size_t t = 0; t < t_total; t += chunk) {
    const std::size_t n = std::min(chunk, t_total - t);
    Tensor m(Shape{bins, n});
    for (std::size_t c = 0; c < bins; ++c) std::copy_n(f.mel.raw() + c * t_total + t, n, m.raw() + c * n);
    out.push_back(std::move(m));
  }
  return out;
}

// Synthesizes the features once; returns wall-clock seconds.
inline double time_stream(const Model& model, const Features& f, const std::vector<Tensor>& chunks,
                          std::size_t chunk, std::vector<float>& out, std::vector<float>& tail) {
  StreamSession session(model, chunk);
  out.resize(session.max_chunk_samples());
  tail.resize(session.max_finish_samples());
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < chunks.size(); ++i)
    session.process_chunk(chunks[i].view(),
                          std::span<const float>(f.f0).subspan(i * chunk, chunks[i].dim(1)), out);
  session.finish(tail);
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

inline double time_batch(const Model& model, const Features& f) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto wave = model.forward_batch(f.mel, f.f0);
  const auto t1 = std::chrono::steady_clock::now();
  if (wave.size() != f.frames() * model.config().hop) throw StateError("bench: batch output length mismatch");
  return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace detail

/// Runs every (model, mode, chunk) cell: `warmup` unrecorded runs, then
/// `runs` timed runs on the same seeded features. Only synthesis is timed.
/// Records come out grouped by cell.
inline BenchResult run_plan(const BenchPlan& plan, const WeightSource& weights, std::uint64_t seed,
                            const std::function<void(const std::string&)>& progress = {}) {
  plan.validate();
  BenchResult result;
  result.metadata = detail::hardware_metadata();
  result.metadata.push_back("affinity: " + (plan.threads == 1 ? detail::pin_to_one_cpu() : std::string("unpinned")));
  result.metadata.push_back("gemm_threads: " + std::to_string(plan.threads));
  result.metadata.push_back("protocol: " + std::to_string(plan.runs) + " runs x " + std::to_string(plan.audio_seconds) +
                            " s after " + std::to_string(plan.warmup) + " warm-ups");
  result.metadata.push_back("seed: " + std::to_string(seed));
  using clock = std::chrono::steady_clock;
  if (double(clock::period::num) / double(clock::period::den) > 1e-3)
    result.metadata.push_back("warning: timer resolution coarser than 1 ms");

  const unsigned saved_threads = gemm_threads();
  set_gemm_threads(plan.threads);
  const Features features = synthetic_features(plan.frames(), seed);
  std::vector<float> out, tail;
  for (const ModelConfig& cfg : plan.models) {
    try {
      const Model model(cfg, weights(cfg));
      struct Cell {
        Mode mode;
        std::size_t chunk;
        std::vector<Tensor> sliced;
      };
      std::vector<Cell> cells;
      for (Mode mode : plan.modes) {
        if (mode == Mode::batch) cells.push_back({mode, 0, {}});
        else
          for (std::size_t chunk : plan.chunk_sizes) cells.push_back({mode, chunk, detail::slice_chunks(features, chunk)});
      }
      // Runs are interleaved across cells so slow drifts in machine load
      // spread evenly instead of biasing whichever cell runs last.
      std::vector<std::vector<BenchRecord>> per_cell(cells.size());
      for (std::size_t r = 0; r < plan.warmup + plan.runs; ++r) {
        if (progress) progress(cfg.name() + (r < plan.warmup ? " warm-up " : " run ") + std::to_string(r + 1));
        for (std::size_t i = 0; i < cells.size(); ++i) {
          const Cell& c = cells[i];
          const double secs = c.chunk ? detail::time_stream(model, features, c.sliced, c.chunk, out, tail)
                                      : detail::time_batch(model, features);
          if (r < plan.warmup) continue;
          per_cell[i].push_back({cfg.name(), c.mode, c.chunk, r - plan.warmup, plan.threads, secs,
                                 plan.audio_seconds, secs / plan.audio_seconds});
        }
      }
      for (auto& v : per_cell) result.records.insert(result.records.end(), v.begin(), v.end());
    } catch (const std::exception& e) {
      result.errors.push_back(cfg.name() + ": " + e.what());
    }
  }
  set_gemm_threads(saved_threads);
  return result;
}

struct CellSummary {
  std::string model;
  Mode mode = Mode::batch;
  std::size_t chunk = 0;
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
};

/// Per-cell RTF statistics, ordered by (model, mode, chunk). The result
/// does not depend on record order.
inline std::vector<CellSummary> summarize(const std::vector<BenchRecord>& records) {
  if (records.empty()) throw DataError("summarize: no records");
  std::map<std::tuple<std::string, int, std::size_t>, std::vector<double>> cells;
  for (const auto& r : records) cells[{r.model, int(r.mode), r.chunk}].push_back(r.rtf);
  std::vector<CellSummary> out;
  for (auto& [key, v] : cells) {
    std::sort(v.begin(), v.end());  // fixed summation order
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = sum / double(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    out.push_back({std::get<0>(key), Mode(std::get<1>(key)), std::get<2>(key), v.size(), mean,
                   v.size() > 1 ? std::sqrt(ss / double(v.size() - 1)) : 0.0, v.front()});
  }
  return out;
}

inline const CellSummary* find_cell(const std::vector<CellSummary>& s, const std::string& model, Mode mode,
                                    std::size_t chunk) {
  for (const auto& c : s)
    if (c.model == model && c.mode == mode && c.chunk == chunk) return &c;
  return nullptr;
}

inline std::string format_g9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline constexpr const char* kCsvHeader = "model,mode,chunk,run,threads,synth_seconds,audio_seconds,rtf";

inline void emit_csv(const BenchResult& result, std::ostream& os) {
  for (const auto& m : result.metadata) os << "# " << m << "\n";
  for (const auto& e : result.errors) os << "# error: " << e << "\n";
  os << kCsvHeader << "\n";
  for (const auto& r : result.records)
    os << r.model << ',' << mode_name(r.mode) << ',' << r.chunk << ',' << r.run << ',' << r.threads << ','
       << format_g9(r.synth_seconds) << ',' << format_g9(r.audio_seconds) << ',' << format_g9(r.rtf) << "\n";
}

inline void emit_summary_csv(const std::vector<CellSummary>& s, std::ostream& os) {
  os << "model,mode,chunk,runs,rtf_mean,rtf_stddev,rtf_min\n";
  for (const auto& c : s)
    os << c.model << ',' << mode_name(c.mode) << ',' << c.chunk << ',' << c.count << ',' << format_g9(c.mean)
       << ',' << format_g9(c.stddev) << ',' << format_g9(c.min) << "\n";
}

/// Parses emit_csv output; comment lines are skipped.
inline std::vector<BenchRecord> parse_csv(std::istream& is) {
  std::vector<BenchRecord> out;
  std::string line;
  bool header = false;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != kCsvHeader) throw FormatError("bench csv: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw FormatError("bench csv: line " + std::to_string(line_no) + " has " + std::to_string(f.size()) + " fields");
    try {
      out.push_back({f[0], parse_mode(f[1]), std::stoul(f[2]), std::stoul(f[3]), unsigned(std::stoul(f[4])),
                     std::stod(f[5]), std::stod(f[6]), std::stod(f[7])});
    } catch (const std::exception&) {
      throw FormatError("bench csv: malformed value on line " + std::to_string(line_no));
    }
  }
  if (!header) throw FormatError("bench csv: missing header");
  return out;
}

}  // namespace wavestream::bench
