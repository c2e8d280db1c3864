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

#ifndef M22_EXPERIMENT_H_
#define M22_EXPERIMENT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "m22/distributions.h"
#include "m22/fedsim.h"

namespace m22 {

enum class RunMode { kTrain, kBench };

// Compression-only run on synthetic gradients drawn from a fitted model.
struct BenchSpec {
  std::size_t dim = 10000;
  DistributionFit source{Family::kGenNorm, 0.0, 1.0, 1.2, false};
  bool wire = false;
};

struct RunSpec {
  std::string id;
  RunMode mode = RunMode::kTrain;
  TrainConfig train;
  BenchSpec bench;
  // Exactly one of these is set in the file; the other is derived from d.
  std::optional<double> budget_bits;
  std::optional<double> budget_bits_per_dim;
  std::vector<std::string> table_files;
};

struct ExperimentConfig {
  std::string source;  // file path, for diagnostics and the manifest
  std::string output_dir = "results";
  unsigned threads = 0;  // 0 = M22_THREADS or hardware concurrency
  std::vector<RunSpec> runs;
};

/// Parses and validates a YAML config. Lists given for `M` or `seed` expand
/// into one run per value. Throws kConfigError naming the line and field,
/// or kUnknownScheme.
ExperimentConfig ParseExperimentConfig(const std::string& text, const std::string& source = "<string>");
ExperimentConfig LoadExperimentConfig(const std::string& path);

// Model dimension a run will use.
std::size_t RunDimension(const RunSpec& run);

// Budget in bits per dimension once d is known.
double BitsPerDim(const RunSpec& run);

struct RunSummary {
  std::string id;
  std::string scheme;
  RunMode mode = RunMode::kTrain;
  double R = 0.0;
  double M = 0.0;
  std::size_t dim = 0;
  double budget_bits = 0.0;
  double max_bits = 0.0;
  double final_accuracy = 0.0;
  double per_bit_accuracy = 0.0;
  double mean_distortion = 0.0;
  bool ok = true;
  std::string error;
  MetricsLog log;  // training runs only
};

struct ExperimentResult {
  int exit_code = 0;  // 0 success, 1 a run failed
  std::vector<RunSummary> runs;
  std::vector<std::string> files;
};

/// Executes every run (concurrently when threads allow) and writes
/// <id>.csv per run, summary.csv, manifest.json and the plot tables into
/// the output directory. With dry_run only the manifest is written.
ExperimentResult RunExperiment(const ExperimentConfig& cfg, bool dry_run = false);

/// Long-format tables: plot_rounds.csv (run_id,round,metric,value) and
/// plot_m.csv (series,M,metric,value). Returns the paths written.
std::vector<std::string> EmitPlotData(const std::vector<RunSummary>& runs, const std::string& dir);

// Thread count from M22_THREADS, else `fallback`, else hardware concurrency.
unsigned ThreadsFromEnv(unsigned fallback = 0);

}  // namespace m22

#endif  // M22_EXPERIMENT_H_
