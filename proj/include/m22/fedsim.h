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

#ifndef M22_FEDSIM_H_
#define M22_FEDSIM_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "m22/compressors.h"
#include "m22/model.h"

namespace m22 {

/// Two-class Gaussian blobs. Each class is a mixture of `clusters_per_class`
/// isotropic blobs with standard deviation `noise`; with one cluster per
/// class the class means sit at ±separation/2 along a random unit direction.
/// `separable` (one cluster per class only) pushes every point at least
/// margin/2 onto its own side of that direction.
struct DatasetSpec {
  std::size_t dim = 50;
  std::size_t train = 2000;
  std::size_t test = 1000;
  std::size_t clusters_per_class = 1;
  double separation = 2.0;
  double noise = 1.0;
  bool separable = false;
  double margin = 0.0;
};

struct FederatedData {
  std::vector<Dataset> shards;  // sizes differ by at most one
  Dataset pooled;               // concatenation of the shards
  Dataset test;
};

FederatedData GenerateDataset(const DatasetSpec& spec, std::size_t clients, std::uint64_t seed);

// Deterministic minibatch rows; batch 0 or >= shard size means the full shard.
std::vector<std::size_t> MinibatchRows(std::size_t shard_size, std::size_t batch, std::uint64_t seed);

std::vector<double> LocalGradient(const ModelSpec& spec, std::span<const double> w,
                                  const Dataset& shard, std::size_t batch, std::uint64_t seed);

struct TrainConfig {
  std::size_t clients = 2;   // N
  std::size_t rounds = 100;  // T
  double lr = 0.1;
  double lr_decay = 0.0;  // eta_t = lr / (1 + lr_decay t)
  std::size_t batch = 0;  // 0 = full shard
  std::uint64_t seed = 1;
  bool wire = true;             // route every payload through Encode/Decode
  bool compute_reference = true;  // also train uncompressed for per-bit accuracy
  ModelSpec model;
  DatasetSpec data;
  CompressorSpec compressor;
};

void ValidateTrainConfig(const TrainConfig& cfg);

double LearningRate(const TrainConfig& cfg, std::size_t round);

struct RoundMetrics {
  std::size_t round = 0;  // 1-based
  double loss = 0.0;      // pooled training loss after the update
  double accuracy = 0.0;  // test accuracy after the update
  double bits = 0.0;      // largest analytic upload among clients
  double distortion = 0.0;  // weighted distortion of the aggregate vs the true mean gradient
  std::size_t failed_clients = 0;
  bool over_budget = false;
  bool operator==(const RoundMetrics&) const = default;
};

struct MetricsLog {
  std::vector<RoundMetrics> rounds;
  std::size_t dim = 0;
  double budget_bits = 0.0;  // per client per round
  double final_loss = 0.0;
  double final_accuracy = 0.0;
  double reference_loss = 0.0;  // uncompressed run on the same seeds
  double reference_accuracy = 0.0;
  double per_bit_accuracy = 0.0;
  std::map<std::string, double> compressor_parameters;
  std::vector<std::string> warnings;

  bool operator==(const MetricsLog&) const = default;
};

/// Server state for one run.
struct Simulation {
  ModelParams params;
  FederatedData data;
};

Simulation InitSimulation(const TrainConfig& cfg);

/// One FedAvg round: clients compute and compress gradients, the server
/// aggregates with equal weights and steps. A client whose compressor
/// throws contributes a zero update and is recorded in `warnings`.
RoundMetrics RunRound(Simulation& sim, const TrainConfig& cfg, const Compressor& compressor,
                      std::size_t round, std::vector<std::string>* warnings = nullptr);

MetricsLog RunTraining(const TrainConfig& cfg, TableCache& tables);

/// (L(w_T) - G_R(w_hat_T)) / (d R T).
double PerBitAccuracy(double loss_uncompressed, double loss_compressed, double d, double R, double T);

// "round,loss,accuracy,bits,distortion" with one row per round.
void WriteMetricsCsv(const MetricsLog& log, std::ostream& out);

// Stable hash for deriving per-round and per-client seeds.
std::uint64_t MixSeed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0);

}  // namespace m22

#endif  // M22_FEDSIM_H_
