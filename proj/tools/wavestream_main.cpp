// Copyright 2026 The wavestream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// `wavestream` command-line tool. Exit codes: 0 success, 1 numeric or
// runtime failure, 2 input, format or usage error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "wavestream/acceptance.hpp"
#include "wavestream/bench/bench.hpp"
#include "wavestream/bench/plot.hpp"
#include "wavestream/costmodel/report.hpp"
#include "wavestream/storage/extract.hpp"
#include "wavestream/storage/feature_file.hpp"
#include "wavestream/storage/wav.hpp"
#include "wavestream/storage/weight_file.hpp"
#include "wavestream/testing/allocation_counter.hpp"

namespace ws = wavestream;

namespace {

constexpr int kOk = 0, kRuntime = 1, kUsage = 2;

struct ModelFlags {
  std::string model = "ms-wavehax";
  bool causal = false;
  std::size_t lookahead = 0;
  std::size_t blocks = 8;
  std::string weights;
  std::uint64_t seed = 0;

  ws::ModelConfig config() const {
    ws::ModelConfig c;
    c.variant = ws::parse_variant(model);
    c.causal = causal;
    c.lookahead = lookahead;
    c.num_blocks = blocks;
    c.noise_seed = seed;
    c.validate();
    return c;
  }

  // Weights come from --weights when given, otherwise from --seed.
  ws::Model build() const {
    const ws::ModelConfig c = config();
    return ws::Model(c, weights.empty() ? ws::generate_random_weights(c, seed) : ws::read_weights(weights));
  }
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
  cmd->add_option("--model", f.model, "Variant")
      ->check(CLI::IsMember({"vocos", "ms-vocos", "wavehax", "ms-wavehax"}))
      ->capture_default_str();
  auto* causal = cmd->add_flag("--causal", f.causal, "Causal convolutions");
  cmd->add_option("--lookahead", f.lookahead, "Look-ahead frames of a causal model")
      ->check(CLI::Range(0, 1))
      ->needs(causal);
  cmd->add_option("--blocks", f.blocks, "Residual blocks")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--weights", f.weights, "Weight file; random weights from --seed when absent");
}

void add_seed(CLI::App* cmd, std::uint64_t& seed) {
  cmd->add_option("--seed", seed, "Seed for every random draw")->capture_default_str();
}

void write_or_print(const std::string& path, const std::function<void(std::ostream&)>& emit) {
  if (path.empty()) {
    emit(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ws::LoadError("cannot write '" + path + "'");
  emit(out);
  if (!out) throw ws::LoadError("write failed for '" + path + "'");
}

ws::Audio to_audio(std::vector<float> samples, const ws::ModelConfig& c) {
  ws::Audio a;
  a.sample_rate = static_cast<std::uint32_t>(c.sample_rate);
  a.samples = std::move(samples);
  return a;
}

double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) return INFINITY;
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, double(std::fabs(a[i] - b[i])));
  return d;
}

int run_synth(const ModelFlags& mf, const std::string& features, const std::string& out) {
  const ws::Model model = mf.build();
  const ws::Features f = ws::read_features(features);
  ws::write_wav(out, to_audio(model.forward_batch(f.mel, f.f0), model.config()));
  std::printf("wrote %zu samples to %s\n", f.frames() * model.config().hop, out.c_str());
  return kOk;
}

int run_stream(const ModelFlags& mf, const std::string& features, std::size_t chunk, const std::string& out,
               bool verify) {
  const ws::Model model = mf.build();
  const ws::Features f = ws::read_features(features);
  if (f.mel.dim(0) != model.config().mel_bins) throw ws::DataError("feature file has wrong mel bin count");
  const auto report = ws::latency_report(model.config(), chunk);
  std::printf("buffering latency: %g ms\n", report.chunk_buffering_ms);
  std::printf("algorithmic lookahead: %g ms\n", report.algorithmic_lookahead_ms);

  ws::StreamSession session(model, chunk);
  std::vector<float> wave;
  wave.reserve(f.frames() * model.config().hop);
  for (std::size_t t = 0; t < f.frames(); t += chunk) {
    const std::size_t n = std::min(chunk, f.frames() - t);
    ws::Tensor mel(ws::Shape{f.mel.dim(0), n});
    for (std::size_t b = 0; b < f.mel.dim(0); ++b)
      std::copy_n(f.mel.raw() + b * f.frames() + t, n, mel.raw() + b * n);
    const auto part = session.process_chunk(mel, std::span<const float>(f.f0).subspan(t, n));
    wave.insert(wave.end(), part.begin(), part.end());
  }
  const auto tail = session.finish();
  wave.insert(wave.end(), tail.begin(), tail.end());
  if (!out.empty()) ws::write_wav(out, to_audio(wave, model.config()));
  std::printf("streamed %zu frames in chunks of %zu: %zu samples\n", f.frames(), chunk, wave.size());
  if (verify) {
    const double diff = max_abs_diff(wave, model.forward_batch(f.mel, f.f0));
    std::printf("max abs difference vs batch: %.9g\n", diff);
    if (!(diff <= 1e-4)) {
      std::fprintf(stderr, "error: streaming output differs from batch by more than 1e-4\n");
      return kRuntime;
    }
  }
  return kOk;
}

int run_bench(const std::string& plan_name, const std::string& out, const std::string& summary,
              std::optional<unsigned> threads, std::uint64_t seed) {
  ws::bench::BenchPlan plan = ws::bench::load_plan(plan_name);
  if (threads) plan.threads = *threads;
  plan.validate();
  const auto result = ws::bench::run_plan(plan, ws::bench::random_weight_source(seed), seed,
                                          [](const std::string& s) { std::fprintf(stderr, "bench: %s\n", s.c_str()); });
  write_or_print(out, [&](std::ostream& os) { ws::bench::emit_csv(result, os); });
  if (!result.records.empty()) {
    const auto cells = ws::bench::summarize(result.records);
    if (!summary.empty()) write_or_print(summary, [&](std::ostream& os) { ws::bench::emit_summary_csv(cells, os); });
    for (const auto& c : cells)
      std::fprintf(stderr, "%-26s %-6s chunk %2zu  mean RTF %.4f  sd %.4f  (n=%zu)\n", c.model.c_str(),
                   ws::bench::mode_name(c.mode).c_str(), c.chunk, c.mean, c.stddev, c.count);
  }
  for (const auto& e : result.errors) std::fprintf(stderr, "error: %s\n", e.c_str());
  return result.errors.empty() ? kOk : kRuntime;
}

int run_cost(const std::string& report, const std::string& out, const ModelFlags& mf) {
  const bool svg = out.size() >= 4 && out.compare(out.size() - 4, 4, ".svg") == 0;
  if (svg && report != "aggregate") throw CLI::ValidationError("--out", "SVG output is only available for --report aggregate");
  if (report == "table2") {
    write_or_print(out, [](std::ostream& os) { ws::cost::write_table2(os); });
  } else if (report == "aggregate") {
    if (svg) {
      std::vector<std::uint64_t> t;
      for (std::uint64_t i = 1; i <= 16; ++i) t.push_back(i);
      write_or_print(out, [&](std::ostream& os) {
        ws::bench::emit_matrix_size_plot({ws::cost::aggregate_profile(ws::cost::BlockKind::vocos_1d),
                                          ws::cost::aggregate_profile(ws::cost::BlockKind::wavehax_2d)},
                                         t, os);
      });
    } else {
      write_or_print(out, [](std::ostream& os) { ws::cost::write_aggregate(os); });
    }
  } else {
    const ws::Model model = mf.build();
    write_or_print(out, [&](std::ostream& os) { ws::cost::write_model_counts(os, model); });
  }
  return kOk;
}

int run_verify(const std::string& suite, bool full_bench, std::uint64_t seed) {
  namespace acc = ws::acceptance;
  acc::Options opts;
  opts.full_bench = full_bench;
  if (seed) opts.seed = seed;
  opts.allocation_count = ws::testing::allocation_count;
  int failed = 0;
  const auto ids = acc::suite(suite);
  for (int id : ids) {
    const auto r = acc::run(id, opts);
    std::printf("%s\n", acc::format(r).c_str());
    std::fflush(stdout);
    failed += !r.passed;
  }
  std::printf("%zu criteria, %d failed\n", ids.size(), failed);
  return failed ? kRuntime : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming neural vocoder engine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "wavestream 0.1.0");
  ModelFlags mf;

  std::string features, out, wav, plan = "default", summary, report, suite = "all";
  std::size_t chunk = 0;
  bool verify = false, full_bench = false;
  std::optional<unsigned> threads;

  auto* synth = app.add_subcommand("synth", "Batch synthesis of a feature file to WAV");
  add_model_flags(synth, mf);
  add_seed(synth, mf.seed);
  synth->add_option("--features", features, "Feature file")->required();
  synth->add_option("--out", out, "Output WAV")->required();

  auto* stream = app.add_subcommand("stream", "Chunked streaming synthesis");
  add_model_flags(stream, mf);
  add_seed(stream, mf.seed);
  stream->add_option("--features", features, "Feature file")->required();
  stream->add_option("--chunk", chunk, "Frames per chunk")
      ->required()
      ->check(CLI::Validator([](std::string& v) { return v == "0" ? std::string("chunk must be at least 1 frame") : std::string(); }, "FRAMES"));
  stream->add_option("--out", out, "Output WAV");
  stream->add_flag("--verify", verify, "Compare against batch synthesis (tolerance 1e-4)");

  auto* bench = app.add_subcommand("bench", "Real-time-factor benchmark");
  add_seed(bench, mf.seed);
  bench->add_option("--plan", plan, "default, smoke or a JSON plan file")->capture_default_str();
  bench->add_option("--out", out, "Per-run CSV (stdout when absent)");
  bench->add_option("--summary", summary, "Per-cell summary CSV");
  bench->add_option("--threads", threads, "GEMM threads, overriding the plan")->check(CLI::PositiveNumber);

  auto* cost = app.add_subcommand("cost", "Analytical cost reports");
  add_model_flags(cost, mf);
  add_seed(cost, mf.seed);
  cost->add_option("--report", report, "table2, aggregate or model")
      ->required()
      ->check(CLI::IsMember({"table2", "aggregate", "model"}));
  cost->add_option("--out", out, "CSV, or SVG for the aggregate plot (stdout when absent)");

  auto* gen = app.add_subcommand("gen-weights", "Write seeded random weights");
  add_model_flags(gen, mf);
  add_seed(gen, mf.seed);
  gen->add_option("--out", out, "Weight file")->required();

  auto* feats = app.add_subcommand("features", "Extract log-mel and F0 from a 24 kHz mono WAV");
  feats->add_option("--wav", wav, "Input WAV")->required();
  feats->add_option("--out", out, "Feature file")->required();

  auto* ver = app.add_subcommand("verify", "Run acceptance checks");
  add_seed(ver, mf.seed);
  ver->add_option("--suite", suite, "all, stream, dsp, cost or bench")
      ->check(CLI::IsMember({"all", "stream", "dsp", "cost", "bench"}))
      ->capture_default_str();
  ver->add_flag("--full-bench", full_bench, "Full timing protocol for the RTF check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) return run_synth(mf, features, out);
    if (*stream) return run_stream(mf, features, chunk, out, verify);
    if (*bench) return run_bench(plan, out, summary, threads, mf.seed);
    if (*cost) return run_cost(report, out, mf);
    if (*gen) {
      ws::write_weights(out, ws::generate_random_weights(mf.config(), mf.seed));
      std::printf("wrote %s weights to %s\n", mf.config().name().c_str(), out.c_str());
      return kOk;
    }
    if (*feats) {
      const ws::Features f = ws::extract_features(ws::read_wav(wav));
      ws::write_features(out, f);
      std::printf("wrote %zu frames to %s\n", f.frames(), out.c_str());
      return kOk;
    }
    if (*ver) return run_verify(suite, full_bench, mf.seed);
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const ws::FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const ws::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const ws::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return kUsage;
}
