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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "m22/error.h"
#include "m22/experiment.h"

namespace fs = std::filesystem;

namespace {

fs::path Scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("m22_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t Lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

const char* kSmallDefaults = R"(
defaults:
  model: mlp
  hidden: 8
  T: 5
  N: 2
  lr: 0.3
  seed: 1
  budget_bits_per_dim: 1
  rate: 1
  dataset: {dim: 6, train: 60, test: 40}
)";

int RunCli(const std::string& args) {
  const std::string cmd = std::string(M22_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("one identity run writes T rows") {
  const auto dir = Scratch("identity");
  const auto cfg = m22::ParseExperimentConfig("output_dir: " + dir.string() + kSmallDefaults +
                                              "runs:\n  - {id: base, scheme: identity}\n");
  const auto res = m22::RunExperiment(cfg);
  CHECK(res.exit_code == 0);
  CHECK(Lines(dir / "base.csv") == 1 + 5);
  CHECK(Slurp(dir / "base.csv").rfind("round,loss,accuracy,bits,distortion\n", 0) == 0);
  CHECK(Lines(dir / "summary.csv") == 2);
  CHECK(Lines(dir / "plot_rounds.csv") == 1 + 5);
}

TEST_CASE("runs are byte-identical when repeated") {
  const auto a = Scratch("repeat_a"), b = Scratch("repeat_b");
  const std::string runs = "runs:\n  - {id: m, scheme: m22-gennorm, M: 2}\n  - {id: s, scheme: count-sketch, rate: 2}\n";
  m22::RunExperiment(m22::ParseExperimentConfig("output_dir: " + a.string() + kSmallDefaults + runs));
  m22::RunExperiment(m22::ParseExperimentConfig("output_dir: " + b.string() + kSmallDefaults + runs));
  for (const char* f : {"m.csv", "s.csv", "summary.csv", "plot_rounds.csv", "plot_m.csv"}) {
    CHECK(Slurp(a / f) == Slurp(b / f));
  }
}

TEST_CASE("large-model parameter block is echoed through the override path") {
  const auto dir = Scratch("block332k");
  const auto cfg = m22::ParseExperimentConfig("output_dir: " + dir.string() + R"(
runs:
  - id: block332k
    mode: bench
    scheme: m22-gennorm
    dim: 552874
    budget_bits: 332000
    rate: 1
    M: 2
    k_override: 331724
)");
  REQUIRE(cfg.runs.size() == 1);
  CHECK(cfg.runs[0].train.compressor.k_override == std::size_t{331724});
  const auto res = m22::RunExperiment(cfg, /*dry_run=*/true);
  CHECK(res.exit_code == 0);
  const auto manifest = nlohmann::json::parse(Slurp(dir / "manifest.json"));
  const auto& run = manifest["runs"][0];
  CHECK(run["k_override"] == 331724);
  CHECK(run["dim"] == 552874);
  CHECK(run["M"] == 2.0);
  CHECK(run.contains("k_override_analytic_bits"));
}

TEST_CASE("malformed configs name the field") {
  auto message = [](const std::string& text) -> std::string {
    try {
      m22::ParseExperimentConfig(text, "cfg.yaml");
    } catch (const m22::Error& e) {
      CHECK((e.code() == m22::ErrorCode::kConfigError || e.code() == m22::ErrorCode::kUnknownScheme));
      return e.what();
    }
    FAIL("config was accepted");
    return "";
  };
  CHECK(message("runs:\n  - {id: a, scheme: identity, lr: fast}\n").find("lr") != std::string::npos);
  CHECK(message("runs:\n  - {id: a, scheme: identity, colour: red}\n").find("colour") != std::string::npos);
  CHECK(message("runs:\n  - {id: a, scheme: identity, T: 0}\n").find("T") != std::string::npos);
  const auto bad_scheme = message("runs:\n  - {id: a, scheme: zstd}\n");
  CHECK(bad_scheme.find("scheme") != std::string::npos);
  CHECK(bad_scheme.find("line 2") != std::string::npos);
}

TEST_CASE("an M sweep gives one series per M value") {
  const auto dir = Scratch("sweep");
  const auto cfg = m22::ParseExperimentConfig("output_dir: " + dir.string() + kSmallDefaults +
                                              "runs:\n  - {id: m, scheme: m22-gennorm, M: [0, 2, 3]}\n");
  REQUIRE(cfg.runs.size() == 3);
  m22::RunExperiment(cfg);
  std::ifstream in(dir / "plot_rounds.csv");
  std::string line;
  std::getline(in, line);
  std::set<std::string> series;
  while (std::getline(in, line)) series.insert(line.substr(0, line.find(',')));
  CHECK(series == std::set<std::string>{"m-M0", "m-M2", "m-M3"});
  std::set<std::string> ms;
  std::ifstream by_m(dir / "plot_m.csv");
  std::getline(by_m, line);
  while (std::getline(by_m, line)) ms.insert(line.substr(line.find(',') + 1, 1));
  CHECK(ms == std::set<std::string>{"0", "2", "3"});
}

TEST_CASE("empty summary gives header-only plot tables") {
  const auto dir = Scratch("empty");
  m22::EmitPlotData({}, dir.string());
  CHECK(Slurp(dir / "plot_rounds.csv") == "run_id,round,metric,value\n");
  CHECK(Slurp(dir / "plot_m.csv") == "series,M,metric,value\n");
}

TEST_CASE("cli exit codes") {
  const auto dir = Scratch("cli");
  {
    std::ofstream(dir / "ok.yaml") << "output_dir: " << (dir / "out").string() << kSmallDefaults
                                   << "runs:\n  - {id: a, scheme: identity}\n";
    std::ofstream(dir / "bad.yaml") << "runs:\n  - {id: a, scheme: nope}\n";
    std::ofstream(dir / "fail.yaml") << "output_dir: " << (dir / "out2").string() << kSmallDefaults
                                     << "runs:\n  - {id: a, scheme: m22-gennorm, M: 2, table: " << (dir / "missing.json").string()
                                     << "}\n";
  }
  CHECK(RunCli("run " + (dir / "ok.yaml").string()) == 0);
  CHECK(fs::exists(dir / "out" / "a.csv"));
  CHECK(RunCli("run " + (dir / "bad.yaml").string()) == 2);
  CHECK(RunCli("run " + (dir / "absent.yaml").string()) == 2);
  CHECK(RunCli("run " + (dir / "fail.yaml").string()) == 1);
  CHECK(RunCli("bench-compress zip") == 2);
  CHECK(RunCli("bench-compress m22-gennorm --dim 2000 --M 2") == 0);
  CHECK(RunCli("design-table gennorm 1.9:2.1:0.1 1 0,2 -o " + (dir / "t.json").string()) == 0);
  CHECK(fs::exists(dir / "t.json"));
  CHECK(RunCli("design-table cauchy 1 1 0 -o " + (dir / "u.json").string()) == 2);
}
