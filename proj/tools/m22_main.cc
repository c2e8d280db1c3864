// Copyright 2026 The m22 Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

// Command-line front end: experiment runs, table design and compressor
// micro-benchmarks. Exit status 0 on success, 1 on a run failure, 2 on a
// configuration or usage error.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "m22/codebook_table.h"
#include "m22/codec.h"
#include "m22/compressors.h"
#include "m22/distributions.h"
#include "m22/error.h"
#include "m22/experiment.h"
#include "m22/fedsim.h"
#include "m22/quantizer.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitConfig = 2;

template <typename T>
std::vector<T> ParseList(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::stringstream is(item);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof()) {
      throw m22::Error(m22::ErrorCode::kInvalidArgument, std::string("bad ") + what + " list '" + text + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw m22::Error(m22::ErrorCode::kInvalidArgument, std::string("empty ") + what + " list");
  return out;
}

// "lo:hi:step" or an explicit comma list.
std::vector<double> ParseGrid(const std::string& text) {
  if (text.find(':') == std::string::npos) return ParseList<double>(text, "shape grid");
  double lo = 0, hi = 0, step = 0;
  char c1 = 0, c2 = 0;
  std::stringstream ss(text);
  if (!(ss >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':') {
    throw m22::Error(m22::ErrorCode::kInvalidArgument, "shape grid must look like lo:hi:step");
  }
  return m22::ShapeGrid(lo, hi, step);
}

int ExitFor(const m22::Error& e) {
  switch (e.code()) {
    case m22::ErrorCode::kConfigError:
    case m22::ErrorCode::kUnknownScheme:
    case m22::ErrorCode::kInvalidArgument:
    case m22::ErrorCode::kInvalidFamily:
      return kExitConfig;
    default:
      return kExitRunFailure;
  }
}

int CmdRun(const std::string& path, bool dry_run, const std::string& out_dir) {
  m22::ExperimentConfig cfg;
  try {
    cfg = m22::LoadExperimentConfig(path);
  } catch (const m22::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  const m22::ExperimentResult res = m22::RunExperiment(cfg, dry_run);
  for (const auto& run : res.runs) {
    if (!run.ok) {
      std::cerr << "run " << run.id << " failed: " << run.error << '\n';
    } else if (!dry_run && run.mode == m22::RunMode::kTrain) {
      std::printf("%-28s %-14s R=%-6g M=%-4g acc=%.4f pba=%.3e\n", run.id.c_str(), run.scheme.c_str(), run.R,
                  run.M, run.final_accuracy, run.per_bit_accuracy);
    } else if (!dry_run) {
      std::printf("%-28s %-14s R=%-6g M=%-4g bits=%.0f/%.0f distortion=%.4e\n", run.id.c_str(),
                  run.scheme.c_str(), run.R, run.M, run.max_bits, run.budget_bits, run.mean_distortion);
    }
  }
  for (const auto& f : res.files) std::cout << "wrote " << f << '\n';
  return res.exit_code == 0 ? kExitOk : kExitRunFailure;
}

int CmdDesignTable(const std::string& family_name, const std::string& grid_text, const std::string& rates_text,
                   const std::string& ms_text, const std::string& out, double tol, int max_iter) {
  const m22::Family family = m22::ParseFamily(family_name);
  const std::vector<double> grid = ParseGrid(grid_text);
  const std::vector<int> rates = ParseList<int>(rates_text, "rate");
  const std::vector<double> Ms = ParseList<double>(ms_text, "M");
  m22::TableOptions opts;
  opts.tol = tol;
  opts.max_iter = max_iter;
  opts.threads = m22::ThreadsFromEnv();
  const auto t0 = std::chrono::steady_clock::now();
  const m22::CodebookTable table = m22::BuildTable(family, grid, rates, Ms, opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  table.Save(out);
  std::printf("designed %zu codebooks (%zu shapes x %zu rates x %zu Ms) in %.2f s -> %s\n",
              grid.size() * rates.size() * Ms.size(), grid.size(), rates.size(), Ms.size(), secs, out.c_str());
  return kExitOk;
}

struct BenchArgs {
  std::size_t dim = 100000;
  double bits_per_dim = 1.0;
  double rate = 1.0;
  double M = 2.0;
  std::string family = "gennorm";
  double shape = 1.2;
  int reps = 5;
  std::uint64_t seed = 1;
  bool wire = false;
  std::size_t depth = 5;
};

int CmdBench(const std::string& scheme, const BenchArgs& a) {
  m22::CompressorSpec spec;
  spec.scheme = scheme;
  spec.bits_per_dim = a.bits_per_dim;
  spec.rate = scheme == "topk-fp8" ? 8 : scheme == "topk-fp4" ? 4 : a.rate;
  spec.M = scheme == "tinyscript" ? 0.0 : a.M;
  spec.sketch_depth = a.depth;
  m22::DistributionFit source{m22::ParseFamily(a.family), 0.0, 1.0, a.shape, false};
  m22::ValidateFit(source);
  const std::vector<double> grad = m22::Sample(source, a.dim, a.seed);

  m22::TableCache tables;
  auto t0 = std::chrono::steady_clock::now();
  const auto comp = m22::MakeCompressor(spec, a.dim, {}, tables);
  const double setup = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  double compress_s = 0, decompress_s = 0, wire_s = 0, bits = 0, distortion = 0;
  std::size_t bytes = 0;
  for (int r = 0; r < a.reps; ++r) {
    t0 = std::chrono::steady_clock::now();
    m22::ClientMessage msg = comp->Compress(grad);
    auto t1 = std::chrono::steady_clock::now();
    compress_s += std::chrono::duration<double>(t1 - t0).count();
    if (a.wire) {
      bytes = 0;
      for (auto& part : msg.parts) {
        const auto enc = m22::Encode(part);
        bytes += enc.size();
        part = m22::Decode(enc);
      }
      auto t2 = std::chrono::steady_clock::now();
      wire_s += std::chrono::duration<double>(t2 - t1).count();
      t1 = t2;
    }
    const std::vector<double> rec = comp->Decompress(msg);
    decompress_s += std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
    bits = msg.analytic_bits;
    distortion = m22::WeightedDistortion(grad, rec, spec.M);
  }
  const double n = a.reps;
  std::printf("scheme=%s d=%zu R=%g rate=%g M=%g\n", scheme.c_str(), a.dim, a.bits_per_dim, spec.rate, spec.M);
  std::printf("  setup          %.4f s\n", setup);
  std::printf("  compress       %.4f s/rep\n", compress_s / n);
  if (a.wire) std::printf("  encode+decode  %.4f s/rep (%zu bytes)\n", wire_s / n, bytes);
  std::printf("  decompress     %.4f s/rep\n", decompress_s / n);
  std::printf("  analytic bits  %.1f of %.1f budget\n", bits, a.bits_per_dim * static_cast<double>(a.dim));
  std::printf("  weighted distortion (M=%g) %.6e\n", spec.M, distortion);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"m22: magnitude-weighted gradient compression and a federated averaging simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  bool dry_run = false;
  auto* run = app.add_subcommand("run", "Execute every run in a YAML experiment config");
  run->add_option("config", config_path, "Experiment config file")->required();
  run->add_flag("--dry-run", dry_run, "Validate and write the manifest without running");
  run->add_option("--out", out_dir, "Override output_dir from the config");

  std::string family, grid, rates, ms, table_out;
  double tol = 1e-7;
  int max_iter = 500;
  auto* design = app.add_subcommand("design-table", "Design a codebook table and save it as JSON");
  design->add_option("family", family, "gennorm or dweibull")->required();
  design->add_option("grid", grid, "Shape grid as lo:hi:step or a comma list")->required();
  design->add_option("rates", rates, "Comma list of rates in bits")->required();
  design->add_option("Ms", ms, "Comma list of weight exponents M")->required();
  design->add_option("-o,--output", table_out, "Output file")->required();
  design->add_option("--tol", tol, "Center movement tolerance");
  design->add_option("--max-iter", max_iter, "Maximum Lloyd sweeps");

  std::string scheme;
  BenchArgs bench;
  auto* bc = app.add_subcommand("bench-compress", "Time one compressor on synthetic gradients");
  bc->add_option("scheme", scheme, "Compressor scheme name")->required();
  bc->add_option("--dim", bench.dim, "Gradient dimension");
  bc->add_option("--bits-per-dim", bench.bits_per_dim, "Budget R in bits per dimension");
  bc->add_option("--rate", bench.rate, "Per-entry bits");
  bc->add_option("--M", bench.M, "Weight exponent");
  bc->add_option("--family", bench.family, "Source family for the synthetic gradient");
  bc->add_option("--shape", bench.shape, "Source shape parameter");
  bc->add_option("--reps", bench.reps, "Repetitions")->check(CLI::PositiveNumber);
  bc->add_option("--seed", bench.seed, "Sampling seed");
  bc->add_option("--depth", bench.depth, "Count-sketch depth");
  bc->add_flag("--wire", bench.wire, "Also encode and decode every payload");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return CmdRun(config_path, dry_run, out_dir);
    if (*design) return CmdDesignTable(family, grid, rates, ms, table_out, tol, max_iter);
    if (*bc) return CmdBench(scheme, bench);
  } catch (const m22::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitFor(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRunFailure;
  }
  return kExitConfig;
}
