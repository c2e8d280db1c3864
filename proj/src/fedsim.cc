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

#include "m22/fedsim.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>

#include "m22/codec.h"
#include "m22/error.h"
#include "m22/quantizer.h"

namespace m22 {
namespace {

void AppendSamples(Dataset& out, std::size_t n, const std::vector<std::vector<double>>& centers,
                   const DatasetSpec& spec, const std::vector<double>& direction, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t per_class = spec.clusters_per_class;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const std::size_t cluster = (i / 2) % per_class;
    const std::vector<double>& c = centers[static_cast<std::size_t>(label) * per_class + cluster];
    const std::size_t base = out.x.size();
    for (std::size_t j = 0; j < spec.dim; ++j) out.x.push_back(c[j] + spec.noise * gauss(rng));
    if (spec.separable) {
      const double side = label ? 1.0 : -1.0;
      double proj = 0.0;
      for (std::size_t j = 0; j < spec.dim; ++j) proj += out.x[base + j] * direction[j];
      const double deficit = 0.5 * spec.margin - side * proj;
      if (deficit > 0.0) {
        for (std::size_t j = 0; j < spec.dim; ++j) out.x[base + j] += side * deficit * direction[j];
      }
    }
    out.y.push_back(label);
  }
}

Dataset Slice(const Dataset& d, std::size_t begin, std::size_t end) {
  Dataset s;
  s.dim = d.dim;
  s.x.assign(d.x.begin() + static_cast<std::ptrdiff_t>(begin * d.dim),
             d.x.begin() + static_cast<std::ptrdiff_t>(end * d.dim));
  s.y.assign(d.y.begin() + static_cast<std::ptrdiff_t>(begin), d.y.begin() + static_cast<std::ptrdiff_t>(end));
  return s;
}

double EffectiveBitsPerDim(const TrainConfig& cfg) {
  // The uncompressed reference ships raw f64 values.
  return cfg.compressor.scheme == "identity" ? 64.0 : cfg.compressor.bits_per_dim;
}

std::string FormatNumber(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

std::uint64_t MixSeed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  // splitmix64 finalizer over a simple combination.
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(a) ^ b) ^ c);
}

FederatedData GenerateDataset(const DatasetSpec& spec, std::size_t clients, std::uint64_t seed) {
  if (spec.dim == 0 || clients == 0 || spec.train < clients || spec.clusters_per_class == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "dataset needs dim >= 1, clusters >= 1 and at least one training point per client");
  }
  if (spec.separable && spec.clusters_per_class != 1) {
    throw Error(ErrorCode::kInvalidArgument, "the separable construction needs one cluster per class");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto unit = [&] {
    std::vector<double> v(spec.dim);
    double norm = 0.0;
    for (double& x : v) {
      x = gauss(rng);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
  };
  const std::vector<double> direction = unit();
  std::vector<std::vector<double>> centers;
  if (spec.clusters_per_class == 1) {
    for (double side : {-1.0, 1.0}) {
      std::vector<double> c(direction);
      for (double& x : c) x *= 0.5 * spec.separation * side;
      centers.push_back(std::move(c));
    }
  } else {
    for (std::size_t k = 0; k < 2 * spec.clusters_per_class; ++k) {
      std::vector<double> c = unit();
      for (double& x : c) x *= spec.separation;
      centers.push_back(std::move(c));
    }
  }

  FederatedData fd;
  fd.pooled.dim = spec.dim;
  fd.test.dim = spec.dim;
  AppendSamples(fd.pooled, spec.train, centers, spec, direction, rng);
  AppendSamples(fd.test, spec.test, centers, spec, direction, rng);
  std::size_t begin = 0;
  for (std::size_t k = 0; k < clients; ++k) {
    const std::size_t end = begin + spec.train / clients + (k < spec.train % clients ? 1 : 0);
    fd.shards.push_back(Slice(fd.pooled, begin, end));
    begin = end;
  }
  return fd;
}

std::vector<std::size_t> MinibatchRows(std::size_t shard_size, std::size_t batch, std::uint64_t seed) {
  std::vector<std::size_t> rows(shard_size);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (batch == 0 || batch >= shard_size) return rows;
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first `batch` slots are a uniform sample.
  for (std::size_t i = 0; i < batch; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, shard_size - 1);
    std::swap(rows[i], rows[pick(rng)]);
  }
  rows.resize(batch);
  std::sort(rows.begin(), rows.end());
  return rows;
}

std::vector<double> LocalGradient(const ModelSpec& spec, std::span<const double> w,
                                  const Dataset& shard, std::size_t batch, std::uint64_t seed) {
  const std::vector<std::size_t> rows = MinibatchRows(shard.size(), batch, seed);
  return Gradient(spec, w, shard, rows);
}

void ValidateTrainConfig(const TrainConfig& cfg) {
  if (cfg.clients == 0) throw Error(ErrorCode::kConfigError, "N (clients) must be >= 1");
  if (cfg.rounds == 0) throw Error(ErrorCode::kConfigError, "T (rounds) must be >= 1");
  if (!(cfg.lr > 0.0)) throw Error(ErrorCode::kConfigError, "lr must be > 0");
  if (!(cfg.lr_decay >= 0.0)) throw Error(ErrorCode::kConfigError, "lr_decay must be >= 0");
  if (!(cfg.compressor.bits_per_dim > 0.0)) {
    throw Error(ErrorCode::kConfigError, "budget must be positive");
  }
}

double LearningRate(const TrainConfig& cfg, std::size_t round) {
  return cfg.lr / (1.0 + cfg.lr_decay * static_cast<double>(round - 1));
}

Simulation InitSimulation(const TrainConfig& cfg) {
  ValidateTrainConfig(cfg);
  Simulation sim;
  sim.data = GenerateDataset(cfg.data, cfg.clients, MixSeed(cfg.seed, 0xDA7A));
  ModelSpec model = cfg.model;
  model.input_dim = cfg.data.dim;
  sim.params = InitModel(model, MixSeed(cfg.seed, 0x1417));
  return sim;
}

RoundMetrics RunRound(Simulation& sim, const TrainConfig& cfg, const Compressor& compressor,
                      std::size_t round, std::vector<std::string>* warnings) {
  ModelSpec model = cfg.model;
  model.input_dim = cfg.data.dim;
  const std::size_t d = sim.params.w.size();
  const double budget = static_cast<double>(d) * EffectiveBitsPerDim(cfg);

  RoundMetrics m;
  m.round = round;
  std::vector<double> true_mean(d, 0.0);
  std::vector<ClientMessage> delivered;
  for (std::size_t k = 0; k < sim.data.shards.size(); ++k) {
    const std::vector<double> g =
        LocalGradient(model, sim.params.w, sim.data.shards[k], cfg.batch, MixSeed(cfg.seed, round, k + 1));
    for (std::size_t i = 0; i < d; ++i) true_mean[i] += g[i];
    try {
      ClientMessage msg = compressor.Compress(g);
      if (cfg.wire) {
        for (CompressedUpdate& part : msg.parts) part = Decode(Encode(part));
      }
      m.bits = std::max(m.bits, msg.analytic_bits);
      m.over_budget = m.over_budget || msg.over_budget || msg.analytic_bits > budget;
      delivered.push_back(std::move(msg));
    } catch (const Error& e) {
      ++m.failed_clients;
      if (warnings) {
        warnings->push_back("round " + std::to_string(round) + " client " + std::to_string(k) +
                            " sent a zero update: " + e.what());
      }
    }
  }
  const double n = static_cast<double>(sim.data.shards.size());
  for (double& v : true_mean) v /= n;

  std::vector<double> agg = compressor.Aggregate(delivered);
  // Failed clients count as zero updates in the equal-weight mean.
  const double keep = static_cast<double>(delivered.size()) / n;
  if (keep != 1.0) {
    for (double& v : agg) v *= keep;
  }
  m.distortion = WeightedDistortion(true_mean, agg, cfg.compressor.M);

  const double eta = LearningRate(cfg, round);
  for (std::size_t i = 0; i < d; ++i) sim.params.w[i] -= eta * agg[i];
  m.loss = Loss(model, sim.params.w, sim.data.pooled);
  m.accuracy = Accuracy(model, sim.params.w, sim.data.test);
  return m;
}

MetricsLog RunTraining(const TrainConfig& cfg, TableCache& tables) {
  Simulation sim = InitSimulation(cfg);
  const std::size_t d = sim.params.w.size();
  const auto compressor = MakeCompressor(cfg.compressor, d, sim.params.blocks, tables);

  MetricsLog log;
  log.dim = d;
  log.budget_bits = static_cast<double>(d) * EffectiveBitsPerDim(cfg);
  log.compressor_parameters = compressor->Parameters();
  bool flagged = false;
  for (std::size_t t = 1; t <= cfg.rounds; ++t) {
    log.rounds.push_back(RunRound(sim, cfg, *compressor, t, &log.warnings));
    if (log.rounds.back().over_budget && !flagged) {
      log.warnings.push_back("analytic upload exceeds the budget (K override)");
      flagged = true;
    }
  }
  log.final_loss = log.rounds.back().loss;
  log.final_accuracy = log.rounds.back().accuracy;

  if (cfg.compressor.scheme == "identity" || !cfg.compute_reference) {
    log.reference_loss = log.final_loss;
    log.reference_accuracy = log.final_accuracy;
  } else {
    TrainConfig ref = cfg;
    ref.compressor = CompressorSpec{};
    ref.compressor.scheme = "identity";
    ref.compressor.M = cfg.compressor.M;
    ref.compute_reference = false;
    ref.wire = false;
    const MetricsLog ref_log = RunTraining(ref, tables);
    log.reference_loss = ref_log.final_loss;
    log.reference_accuracy = ref_log.final_accuracy;
  }
  log.per_bit_accuracy = PerBitAccuracy(log.reference_loss, log.final_loss, static_cast<double>(d),
                                        EffectiveBitsPerDim(cfg), static_cast<double>(cfg.rounds));
  return log;
}

double PerBitAccuracy(double loss_uncompressed, double loss_compressed, double d, double R, double T) {
  if (!(d > 0.0) || !(R > 0.0) || !(T > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "per-bit accuracy needs d, R, T > 0");
  }
  return (loss_uncompressed - loss_compressed) / (d * R * T);
}

void WriteMetricsCsv(const MetricsLog& log, std::ostream& out) {
  out << "round,loss,accuracy,bits,distortion\n";
  for (const RoundMetrics& r : log.rounds) {
    out << r.round << ',' << FormatNumber(r.loss) << ',' << FormatNumber(r.accuracy) << ','
        << FormatNumber(r.bits) << ',' << FormatNumber(r.distortion) << '\n';
  }
}

}  // namespace m22
