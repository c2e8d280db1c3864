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

#include "m22/experiment.h"

#include <yaml-cpp/yaml.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "m22/codec.h"
#include "m22/error.h"
#include "m22/quantizer.h"

namespace m22 {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::set<std::string> kTopKeys = {"output_dir", "threads", "defaults", "runs"};
const std::set<std::string> kRunKeys = {
    "id",     "mode",  "scheme", "budget_bits", "budget_bits_per_dim", "rate",  "M",
    "k_override", "seed", "model", "hidden", "T", "N", "lr", "lr_decay", "batch", "wire",
    "reference", "dataset", "sketch", "table", "dim", "source"};
const std::set<std::string> kDatasetKeys = {"dim",        "train", "test",      "clusters_per_class",
                                            "separation", "noise", "separable", "margin"};
const std::set<std::string> kSketchKeys = {"depth", "seed"};
const std::set<std::string> kSourceKeys = {"family", "shape", "scale"};

std::string FormatNumber(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Reads typed fields while keeping enough context for a useful message.
class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void Fail(const YAML::Node& at, const std::string& field, const std::string& what) const {
    std::ostringstream os;
    os << source_;
    if (at.IsDefined() && at.Mark().line >= 0) {
      os << ":" << at.Mark().line + 1 << ":" << at.Mark().column + 1;
    }
    os << ": field '" << field << "': " << what;
    throw Error(ErrorCode::kConfigError, os.str());
  }

  template <typename T>
  T Get(const YAML::Node& node, const std::string& field, const char* type) const {
    if (!node.IsScalar()) Fail(node, field, std::string("expected ") + type);
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      Fail(node, field, std::string("expected ") + type + ", got '" + node.Scalar() + "'");
    }
  }

  double Number(const YAML::Node& n, const std::string& f) const {
    const double v = Get<double>(n, f, "a number");
    if (!std::isfinite(v)) Fail(n, f, "must be finite");
    return v;
  }
  double Positive(const YAML::Node& n, const std::string& f) const {
    const double v = Number(n, f);
    if (!(v > 0.0)) Fail(n, f, "must be > 0");
    return v;
  }
  std::size_t Count(const YAML::Node& n, const std::string& f) const {
    const auto v = Get<long long>(n, f, "a non-negative integer");
    if (v < 0) Fail(n, f, "must be >= 0");
    return static_cast<std::size_t>(v);
  }
  bool Bool(const YAML::Node& n, const std::string& f) const { return Get<bool>(n, f, "true or false"); }
  std::string String(const YAML::Node& n, const std::string& f) const {
    return Get<std::string>(n, f, "a string");
  }

  void CheckKeys(const YAML::Node& map, const std::string& field, const std::set<std::string>& allowed) const {
    if (!map.IsMap()) Fail(map, field, "expected a mapping");
    for (const auto& kv : map) {
      const std::string key = kv.first.as<std::string>();
      if (!allowed.count(key)) {
        Fail(kv.first, field.empty() ? key : field + "." + key, "unknown field");
      }
    }
  }

 private:
  std::string source_;
};

// Run keys override defaults; nested mappings merge one level deep. Nodes
// are shared rather than cloned so that diagnostics keep their line marks,
// and maps are built with force_insert so shared nodes are never written.
YAML::Node Merge(const YAML::Node& defaults, const YAML::Node& run) {
  // Node::operator= rebinds the shared node it refers to, so values are only
  // ever copy-constructed here.
  std::vector<std::string> order;
  std::map<std::string, YAML::Node> values;
  auto put = [&](const std::string& key, const YAML::Node& value) {
    if (values.erase(key) == 0) order.push_back(key);
    values.emplace(key, value);
  };
  const bool has_defaults = defaults.IsDefined() && defaults.IsMap();
  if (has_defaults) {
    for (const auto& kv : defaults) put(kv.first.as<std::string>(), kv.second);
  }
  for (const auto& kv : run) {
    const std::string key = kv.first.as<std::string>();
    const YAML::Node base = has_defaults ? defaults[key] : YAML::Node();
    if (kv.second.IsMap() && base.IsDefined() && base.IsMap()) {
      put(key, Merge(base, kv.second));
    } else {
      put(key, kv.second);
    }
  }
  YAML::Node out(YAML::NodeType::Map);
  for (const std::string& key : order) out.force_insert(key, values.at(key));
  return out;
}

YAML::Node With(const YAML::Node& map, const std::string& key, const YAML::Node& value) {
  YAML::Node patch(YAML::NodeType::Map);
  patch.force_insert(key, value);
  return Merge(map, patch);
}

std::vector<YAML::Node> ScalarOrList(const YAML::Node& n) {
  std::vector<YAML::Node> out;
  if (!n.IsDefined()) {
    out.emplace_back();
  } else if (n.IsSequence()) {
    for (const auto& item : n) out.push_back(item);
  } else {
    out.push_back(n);
  }
  return out;
}

void ParseRun(const Reader& rd, const YAML::Node& n, const std::string& path, RunSpec& run) {
  rd.CheckKeys(n, path, kRunKeys);
  auto f = [&](const char* key) { return path + "." + key; };
  if (!n["id"]) rd.Fail(n, f("id"), "required");
  run.id = rd.String(n["id"], f("id"));
  if (run.id.empty() || run.id.find_first_of("/\\ ,") != std::string::npos) {
    rd.Fail(n["id"], f("id"), "must be non-empty without spaces, commas or slashes");
  }
  if (n["mode"]) {
    const std::string mode = rd.String(n["mode"], f("mode"));
    if (mode == "train") {
      run.mode = RunMode::kTrain;
    } else if (mode == "bench") {
      run.mode = RunMode::kBench;
    } else {
      rd.Fail(n["mode"], f("mode"), "expected 'train' or 'bench'");
    }
  }
  TrainConfig& tc = run.train;
  CompressorSpec& cs = tc.compressor;
  if (!n["scheme"]) rd.Fail(n, f("scheme"), "required");
  cs.scheme = rd.String(n["scheme"], f("scheme"));
  bool known = false;
  for (const auto& s : SchemeNames()) known = known || s == cs.scheme;
  if (!known) {
    std::string list;
    for (const auto& s : SchemeNames()) list += (list.empty() ? "" : ", ") + s;
    std::ostringstream os;
    os << "field '" << f("scheme") << "' (line " << n["scheme"].Mark().line + 1 << "): unknown scheme '"
       << cs.scheme << "'; expected one of " << list;
    throw Error(ErrorCode::kUnknownScheme, os.str());
  }

  const bool has_total = static_cast<bool>(n["budget_bits"]);
  const bool has_rate = static_cast<bool>(n["budget_bits_per_dim"]);
  if (has_total == has_rate && cs.scheme != "identity") {
    rd.Fail(n, f("budget_bits"), "give exactly one of budget_bits (total bits d*R) or budget_bits_per_dim (R)");
  }
  if (has_total) run.budget_bits = rd.Positive(n["budget_bits"], f("budget_bits"));
  if (has_rate) run.budget_bits_per_dim = rd.Positive(n["budget_bits_per_dim"], f("budget_bits_per_dim"));
  if (!has_total && !has_rate) run.budget_bits_per_dim = 64.0;

  if (n["rate"]) {
    cs.rate = rd.Positive(n["rate"], f("rate"));
  } else if (cs.scheme == "topk-fp8") {
    cs.rate = 8;
  } else if (cs.scheme == "topk-fp4") {
    cs.rate = 4;
  } else if (cs.scheme != "identity") {
    rd.Fail(n, f("rate"), "required: per-entry bits (R_mw, R_u, p or r_sk)");
  }
  if (cs.scheme == "topk-fp8" && cs.rate != 8) rd.Fail(n["rate"], f("rate"), "topk-fp8 uses 8 bits per entry");
  if (cs.scheme == "topk-fp4" && cs.rate != 4) rd.Fail(n["rate"], f("rate"), "topk-fp4 uses 4 bits per entry");
  const bool m22 = cs.scheme == "m22-gennorm" || cs.scheme == "m22-dweibull";
  if (m22 || cs.scheme == "tinyscript" || cs.scheme == "topk-uniform") {
    if (std::abs(cs.rate - std::round(cs.rate)) > 1e-9 || cs.rate < 1 || cs.rate > (cs.scheme == "topk-uniform" ? 16 : 8)) {
      rd.Fail(n["rate"], f("rate"), "must be an integer number of bits (1..8 for codebook tables)");
    }
  }
  if (n["M"]) {
    cs.M = rd.Number(n["M"], f("M"));
    if (cs.M < 0.0 || cs.M > 12.0) rd.Fail(n["M"], f("M"), "must lie in [0, 12]");
  } else if (m22) {
    rd.Fail(n, f("M"), "required for M22 schemes");
  }
  if (cs.scheme == "tinyscript") cs.M = 0.0;
  if (n["k_override"]) cs.k_override = rd.Count(n["k_override"], f("k_override"));
  if (n["seed"]) tc.seed = rd.Count(n["seed"], f("seed"));

  if (n["model"]) {
    const std::string kind = rd.String(n["model"], f("model"));
    if (kind != "mlp" && kind != "logistic") rd.Fail(n["model"], f("model"), "expected 'mlp' or 'logistic'");
    tc.model.kind = ParseModelKind(kind);
  }
  if (n["hidden"]) tc.model.hidden = rd.Count(n["hidden"], f("hidden"));
  if (n["T"]) tc.rounds = rd.Count(n["T"], f("T"));
  if (n["N"]) tc.clients = rd.Count(n["N"], f("N"));
  if (tc.rounds == 0) rd.Fail(n["T"], f("T"), "must be >= 1");
  if (tc.clients == 0) rd.Fail(n["N"], f("N"), "must be >= 1");
  if (n["lr"]) tc.lr = rd.Positive(n["lr"], f("lr"));
  if (n["lr_decay"]) tc.lr_decay = rd.Number(n["lr_decay"], f("lr_decay"));
  if (n["batch"]) tc.batch = rd.Count(n["batch"], f("batch"));
  if (n["wire"]) {
    tc.wire = rd.Bool(n["wire"], f("wire"));
    run.bench.wire = tc.wire;
  }
  if (n["reference"]) tc.compute_reference = rd.Bool(n["reference"], f("reference"));

  if (const YAML::Node ds = n["dataset"]) {
    const std::string p = f("dataset");
    rd.CheckKeys(ds, p, kDatasetKeys);
    DatasetSpec& d = tc.data;
    if (ds["dim"]) d.dim = rd.Count(ds["dim"], p + ".dim");
    if (ds["train"]) d.train = rd.Count(ds["train"], p + ".train");
    if (ds["test"]) d.test = rd.Count(ds["test"], p + ".test");
    if (ds["clusters_per_class"]) d.clusters_per_class = rd.Count(ds["clusters_per_class"], p + ".clusters_per_class");
    if (ds["separation"]) d.separation = rd.Number(ds["separation"], p + ".separation");
    if (ds["noise"]) d.noise = rd.Number(ds["noise"], p + ".noise");
    if (ds["separable"]) d.separable = rd.Bool(ds["separable"], p + ".separable");
    if (ds["margin"]) d.margin = rd.Number(ds["margin"], p + ".margin");
    if (d.dim == 0) rd.Fail(ds, p + ".dim", "must be >= 1");
    if (d.train < tc.clients) rd.Fail(ds, p + ".train", "needs at least one point per client");
    if (d.separable && d.clusters_per_class != 1) {
      rd.Fail(ds, p + ".separable", "requires clusters_per_class = 1");
    }
  }
  if (const YAML::Node sk = n["sketch"]) {
    const std::string p = f("sketch");
    rd.CheckKeys(sk, p, kSketchKeys);
    if (sk["depth"]) cs.sketch_depth = rd.Count(sk["depth"], p + ".depth");
    if (cs.sketch_depth == 0) rd.Fail(sk["depth"], p + ".depth", "must be >= 1");
    if (sk["seed"]) cs.sketch_seed = rd.Count(sk["seed"], p + ".seed");
  }
  if (const YAML::Node t = n["table"]) {
    for (const auto& item : ScalarOrList(t)) run.table_files.push_back(rd.String(item, f("table")));
  }
  if (n["dim"]) {
    if (run.mode != RunMode::kBench) rd.Fail(n["dim"], f("dim"), "only bench runs take a dimension");
    run.bench.dim = rd.Count(n["dim"], f("dim"));
    if (run.bench.dim == 0) rd.Fail(n["dim"], f("dim"), "must be >= 1");
  }
  if (const YAML::Node src = n["source"]) {
    const std::string p = f("source");
    rd.CheckKeys(src, p, kSourceKeys);
    if (src["family"]) {
      try {
        run.bench.source.family = ParseFamily(rd.String(src["family"], p + ".family"));
      } catch (const Error&) {
        rd.Fail(src["family"], p + ".family", "expected 'gennorm' or 'dweibull'");
      }
    }
    if (src["shape"]) run.bench.source.shape = rd.Positive(src["shape"], p + ".shape");
    if (src["scale"]) run.bench.source.scale = rd.Positive(src["scale"], p + ".scale");
    try {
      ValidateFit(run.bench.source);
    } catch (const Error& e) {
      rd.Fail(src, p, e.what());
    }
  }
  if (cs.k_override && *cs.k_override > RunDimension(run)) {
    rd.Fail(n["k_override"], f("k_override"), "exceeds the model dimension " + std::to_string(RunDimension(run)));
  }
}

std::string Suffix(const YAML::Node& n) {
  std::string s = n.Scalar();
  for (char& c : s) {
    if (c == '.') c = 'p';
  }
  return s;
}

json RunToJson(const RunSpec& run) {
  const TrainConfig& tc = run.train;
  const CompressorSpec& cs = tc.compressor;
  json j;
  j["id"] = run.id;
  j["mode"] = run.mode == RunMode::kTrain ? "train" : "bench";
  j["scheme"] = cs.scheme;
  j["dim"] = RunDimension(run);
  j["budget_bits"] = BitsPerDim(run) * static_cast<double>(RunDimension(run));
  j["budget_bits_per_dim"] = BitsPerDim(run);
  j["rate"] = cs.rate;
  j["M"] = cs.M;
  j["k_override"] = cs.k_override ? json(*cs.k_override) : json(nullptr);
  j["seed"] = tc.seed;
  j["wire"] = run.mode == RunMode::kTrain ? tc.wire : run.bench.wire;
  if (cs.scheme == "count-sketch") j["sketch"] = {{"depth", cs.sketch_depth}, {"seed", cs.sketch_seed}};
  if (!run.table_files.empty()) j["table"] = run.table_files;
  if (run.mode == RunMode::kTrain) {
    j["model"] = {{"kind", std::string(ModelKindName(tc.model.kind))}, {"hidden", tc.model.hidden}};
    j["T"] = tc.rounds;
    j["N"] = tc.clients;
    j["lr"] = tc.lr;
    j["lr_decay"] = tc.lr_decay;
    j["batch"] = tc.batch;
    j["reference"] = tc.compute_reference;
    j["dataset"] = {{"dim", tc.data.dim},
                    {"train", tc.data.train},
                    {"test", tc.data.test},
                    {"clusters_per_class", tc.data.clusters_per_class},
                    {"separation", tc.data.separation},
                    {"noise", tc.data.noise},
                    {"separable", tc.data.separable},
                    {"margin", tc.data.margin}};
    j["derived_seeds"] = {{"dataset", MixSeed(tc.seed, 0xDA7A)}, {"init", MixSeed(tc.seed, 0x1417)}};
  } else {
    j["source"] = {{"family", std::string(FamilyName(run.bench.source.family))},
                   {"shape", run.bench.source.shape},
                   {"scale", run.bench.source.scale}};
  }
  // K override audit: the analytic cost it implies against the budget.
  if (cs.k_override && cs.scheme != "identity") {
    const double b = cs.rate;
    const double cost = RateCost(RunDimension(run), *cs.k_override, b);
    const double budget = BitsPerDim(run) * static_cast<double>(RunDimension(run));
    j["k_override_analytic_bits"] = cost;
    j["k_override_exceeds_budget"] = cost > budget;
    j["solver_k"] = SolveK(RunDimension(run), budget, b);
  }
  return j;
}

struct RunOutcome {
  RunSummary summary;
  json manifest;
};

RunOutcome ExecuteTrain(const RunSpec& run, TableCache& tables, const fs::path& dir) {
  RunOutcome out;
  RunSummary& s = out.summary;
  TrainConfig tc = run.train;
  tc.compressor.bits_per_dim = BitsPerDim(run);
  s.log = RunTraining(tc, tables);
  s.dim = s.log.dim;
  s.budget_bits = s.log.budget_bits;
  double total = 0.0;
  for (const RoundMetrics& r : s.log.rounds) {
    s.max_bits = std::max(s.max_bits, r.bits);
    total += r.distortion;
  }
  s.mean_distortion = total / static_cast<double>(s.log.rounds.size());
  s.final_accuracy = s.log.final_accuracy;
  s.per_bit_accuracy = s.log.per_bit_accuracy;
  std::ofstream csv(dir / (run.id + ".csv"));
  if (!csv) throw Error(ErrorCode::kIoError, "cannot write " + (dir / (run.id + ".csv")).string());
  WriteMetricsCsv(s.log, csv);
  out.manifest["final_loss"] = s.log.final_loss;
  out.manifest["reference_loss"] = s.log.reference_loss;
  out.manifest["reference_accuracy"] = s.log.reference_accuracy;
  out.manifest["per_bit_accuracy"] = s.log.per_bit_accuracy;
  out.manifest["compressor_parameters"] = s.log.compressor_parameters;
  out.manifest["warnings"] = s.log.warnings;
  return out;
}

RunOutcome ExecuteBench(const RunSpec& run, TableCache& tables, const fs::path& dir) {
  RunOutcome out;
  RunSummary& s = out.summary;
  const std::size_t d = run.bench.dim;
  CompressorSpec cs = run.train.compressor;
  cs.bits_per_dim = BitsPerDim(run);
  const std::vector<double> grad = Sample(run.bench.source, d, MixSeed(run.train.seed, 0xBE7C));
  const auto compressor = MakeCompressor(cs, d, {}, tables);
  ClientMessage msg = compressor->Compress(grad);
  std::size_t wire_bytes = 0;
  if (run.bench.wire) {
    for (CompressedUpdate& part : msg.parts) {
      const std::vector<std::uint8_t> bytes = Encode(part);
      wire_bytes += bytes.size();
      part = Decode(bytes);
    }
  }
  const std::vector<double> rec = compressor->Decompress(msg);
  s.dim = d;
  s.budget_bits = cs.bits_per_dim * static_cast<double>(d);
  s.max_bits = msg.analytic_bits;
  s.mean_distortion = WeightedDistortion(grad, rec, cs.M);
  std::ofstream csv(dir / (run.id + ".csv"));
  if (!csv) throw Error(ErrorCode::kIoError, "cannot write " + (dir / (run.id + ".csv")).string());
  std::size_t kept = 0;
  for (const auto& part : msg.parts) kept += part.indices.size();
  csv << "scheme,d,K,analytic_bits,budget_bits,weighted_distortion,over_budget,wire_bytes\n"
      << cs.scheme << ',' << d << ',' << kept << ',' << FormatNumber(msg.analytic_bits) << ','
      << FormatNumber(s.budget_bits) << ',' << FormatNumber(s.mean_distortion) << ','
      << (msg.over_budget ? 1 : 0) << ',' << wire_bytes << '\n';
  out.manifest["analytic_bits"] = msg.analytic_bits;
  out.manifest["over_budget"] = msg.over_budget;
  out.manifest["kept"] = kept;
  out.manifest["compressor_parameters"] = compressor->Parameters();
  return out;
}

void WriteSummary(const std::vector<RunSummary>& runs, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << "run_id,scheme,R,M,final_accuracy,per_bit_accuracy,mean_distortion,max_bits,budget_bits,status\n";
  for (const RunSummary& r : runs) {
    const bool train = r.mode == RunMode::kTrain;
    out << r.id << ',' << r.scheme << ',' << FormatNumber(r.R) << ',' << FormatNumber(r.M) << ','
        << (train && r.ok ? FormatNumber(r.final_accuracy) : "") << ','
        << (train && r.ok ? FormatNumber(r.per_bit_accuracy) : "") << ','
        << (r.ok ? FormatNumber(r.mean_distortion) : "") << ',' << (r.ok ? FormatNumber(r.max_bits) : "")
        << ',' << FormatNumber(r.budget_bits) << ',' << (r.ok ? "ok" : "failed") << '\n';
  }
}

}  // namespace

unsigned ThreadsFromEnv(unsigned fallback) {
  if (const char* env = std::getenv("M22_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  if (fallback > 0) return fallback;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::size_t RunDimension(const RunSpec& run) {
  if (run.mode == RunMode::kBench) return run.bench.dim;
  ModelSpec m = run.train.model;
  m.input_dim = run.train.data.dim;
  return ParameterCount(m);
}

double BitsPerDim(const RunSpec& run) {
  if (run.budget_bits_per_dim) return *run.budget_bits_per_dim;
  if (run.budget_bits) return *run.budget_bits / static_cast<double>(RunDimension(run));
  return 64.0;
}

ExperimentConfig ParseExperimentConfig(const std::string& text, const std::string& source) {
  const Reader rd(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    std::ostringstream os;
    os << source << ":" << e.mark.line + 1 << ":" << e.mark.column + 1 << ": YAML syntax error: " << e.msg;
    throw Error(ErrorCode::kConfigError, os.str());
  }
  if (!root.IsMap()) rd.Fail(root, "<root>", "expected a mapping with a 'runs' list");
  rd.CheckKeys(root, "", kTopKeys);

  ExperimentConfig cfg;
  cfg.source = source;
  if (root["output_dir"]) cfg.output_dir = rd.String(root["output_dir"], "output_dir");
  if (root["threads"]) cfg.threads = static_cast<unsigned>(rd.Count(root["threads"], "threads"));
  const YAML::Node defaults = root["defaults"];
  if (defaults && !defaults.IsMap()) rd.Fail(defaults, "defaults", "expected a mapping");
  const YAML::Node runs = root["runs"];
  if (!runs) rd.Fail(root, "runs", "required");
  if (!runs.IsSequence()) rd.Fail(runs, "runs", "expected a list of runs");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string path = "runs[" + std::to_string(i) + "]";
    if (!runs[i].IsMap()) rd.Fail(runs[i], path, "expected a mapping");
    const YAML::Node merged = Merge(defaults, runs[i]);
    const std::vector<YAML::Node> Ms = ScalarOrList(merged["M"]);
    const std::vector<YAML::Node> seeds = ScalarOrList(merged["seed"]);
    const bool sweep_m = merged["M"].IsDefined() && merged["M"].IsSequence();
    const bool sweep_seed = merged["seed"].IsDefined() && merged["seed"].IsSequence();
    for (const YAML::Node& m : Ms) {
      for (const YAML::Node& seed : seeds) {
        const YAML::Node with_m = sweep_m ? With(merged, "M", m) : merged;
        const YAML::Node one = sweep_seed ? With(with_m, "seed", seed) : with_m;
        RunSpec run;
        ParseRun(rd, one, path, run);
        if (sweep_m) run.id += "-M" + Suffix(m);
        if (sweep_seed) run.id += "-s" + Suffix(seed);
        if (!ids.insert(run.id).second) rd.Fail(runs[i]["id"], path + ".id", "duplicate run id '" + run.id + "'");
        cfg.runs.push_back(std::move(run));
      }
    }
  }
  return cfg;
}

ExperimentConfig LoadExperimentConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseExperimentConfig(ss.str(), path);
}

std::vector<std::string> EmitPlotData(const std::vector<RunSummary>& runs, const std::string& dir) {
  const fs::path rounds_path = fs::path(dir) / "plot_rounds.csv";
  const fs::path m_path = fs::path(dir) / "plot_m.csv";
  std::ofstream rounds(rounds_path);
  std::ofstream by_m(m_path);
  if (!rounds || !by_m) throw Error(ErrorCode::kIoError, "cannot write plot tables in " + dir);
  rounds << "run_id,round,metric,value\n";
  by_m << "series,M,metric,value\n";
  for (const RunSummary& r : runs) {
    if (r.mode != RunMode::kTrain || !r.ok) continue;
    for (const RoundMetrics& m : r.log.rounds) {
      rounds << r.id << ',' << m.round << ",accuracy," << FormatNumber(m.accuracy) << '\n';
    }
    const std::string series = r.scheme + "@R=" + FormatNumber(r.R);
    by_m << series << ',' << FormatNumber(r.M) << ",final_accuracy," << FormatNumber(r.final_accuracy) << '\n';
    by_m << series << ',' << FormatNumber(r.M) << ",per_bit_accuracy," << FormatNumber(r.per_bit_accuracy)
         << '\n';
  }
  return {rounds_path.string(), m_path.string()};
}

ExperimentResult RunExperiment(const ExperimentConfig& cfg, bool dry_run) {
  ExperimentResult result;
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create output directory " + dir.string());

  TableCache tables;
  for (const RunSpec& run : cfg.runs) {
    for (const std::string& file : run.table_files) {
      tables.Add(std::make_shared<const CodebookTable>(CodebookTable::Load(file)));
    }
  }

  std::vector<RunOutcome> outcomes(cfg.runs.size());
  for (std::size_t i = 0; i < cfg.runs.size(); ++i) {
    RunSummary& s = outcomes[i].summary;
    const RunSpec& run = cfg.runs[i];
    s.id = run.id;
    s.scheme = run.train.compressor.scheme;
    s.mode = run.mode;
    s.R = BitsPerDim(run);
    s.M = run.train.compressor.M;
    s.dim = RunDimension(run);
    s.budget_bits = s.R * static_cast<double>(s.dim);
  }

  if (!dry_run) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < cfg.runs.size(); i = next++) {
        const RunSpec& run = cfg.runs[i];
        RunSummary base = outcomes[i].summary;
        try {
          outcomes[i] = run.mode == RunMode::kTrain ? ExecuteTrain(run, tables, dir) : ExecuteBench(run, tables, dir);
          RunSummary& s = outcomes[i].summary;
          s.id = base.id;
          s.scheme = base.scheme;
          s.mode = base.mode;
          s.R = base.R;
          s.M = base.M;
        } catch (const std::exception& e) {
          outcomes[i].summary = base;
          outcomes[i].summary.ok = false;
          outcomes[i].summary.error = e.what();
        }
      }
    };
    const unsigned threads =
        std::min<unsigned>(ThreadsFromEnv(cfg.threads), static_cast<unsigned>(std::max<std::size_t>(1, cfg.runs.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
  }

  json manifest;
  manifest["tool"] = "m22";
  manifest["config"] = cfg.source;
  manifest["output_dir"] = cfg.output_dir;
  manifest["dry_run"] = dry_run;
  manifest["runs"] = json::array();
  for (std::size_t i = 0; i < cfg.runs.size(); ++i) {
    json j = RunToJson(cfg.runs[i]);
    const RunSummary& s = outcomes[i].summary;
    if (!dry_run) {
      j["status"] = s.ok ? "ok" : "failed";
      if (!s.ok) j["error"] = s.error;
      j["result"] = outcomes[i].manifest;
      if (s.ok) result.files.push_back((dir / (s.id + ".csv")).string());
    }
    manifest["runs"].push_back(std::move(j));
    result.runs.push_back(s);
    if (!s.ok) result.exit_code = 1;
  }
  const fs::path manifest_path = dir / "manifest.json";
  std::ofstream mf(manifest_path);
  if (!mf) throw Error(ErrorCode::kIoError, "cannot write " + manifest_path.string());
  mf << manifest.dump(2) << '\n';
  result.files.push_back(manifest_path.string());
  if (!dry_run) {
    WriteSummary(result.runs, dir / "summary.csv");
    result.files.push_back((dir / "summary.csv").string());
    for (auto& f : EmitPlotData(result.runs, cfg.output_dir)) result.files.push_back(f);
  }
  return result;
}

}  // namespace m22
