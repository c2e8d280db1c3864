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

#include "m22/codebook_table.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "m22/error.h"

namespace m22 {

using nlohmann::json;

namespace {

constexpr const char* kFormatName = "m22-codebook-table";

bool SameM(double a, double b) { return std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(a)); }

}  // namespace

CodebookTable::CodebookTable(Family family, std::vector<double> shape_grid, std::vector<int> rates,
                             std::vector<double> Ms, std::vector<Codebook> entries)
    : family_(family),
      shape_grid_(std::move(shape_grid)),
      rates_(std::move(rates)),
      Ms_(std::move(Ms)),
      entries_(std::move(entries)) {
  if (shape_grid_.empty() || rates_.empty() || Ms_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "codebook table grids must be non-empty");
  }
  if (shape_grid_.size() > 0xFFFF) {
    throw Error(ErrorCode::kInvalidArgument, "shape grid exceeds the 16-bit token range");
  }
  for (std::size_t i = 0; i < shape_grid_.size(); ++i) {
    if (!(shape_grid_[i] > 0.0) || (i > 0 && !(shape_grid_[i] > shape_grid_[i - 1]))) {
      throw Error(ErrorCode::kInvalidArgument, "shape grid must be positive and strictly increasing");
    }
  }
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (rates_[i] == rates_[j]) throw Error(ErrorCode::kInvalidArgument, "duplicate rate in table");
    }
  }
  for (std::size_t i = 0; i < Ms_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (SameM(Ms_[i], Ms_[j])) throw Error(ErrorCode::kInvalidArgument, "duplicate M in table");
    }
  }
  if (entries_.size() != shape_grid_.size() * rates_.size() * Ms_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "codebook table entry count does not match its grids");
  }
  std::size_t k = 0;
  for (std::size_t s = 0; s < shape_grid_.size(); ++s) {
    for (int rate : rates_) {
      for (double M : Ms_) {
        const Codebook& cb = entries_[k++];
        ValidateCodebook(cb);
        if (cb.rate != rate || !SameM(cb.M, M)) {
          throw Error(ErrorCode::kInvalidArgument, "codebook table entry does not match its grid point");
        }
      }
    }
  }
}

std::uint16_t CodebookTable::NearestShape(double shape) const {
  const auto it = std::lower_bound(shape_grid_.begin(), shape_grid_.end(), shape);
  if (it == shape_grid_.begin()) return 0;
  if (it == shape_grid_.end()) return static_cast<std::uint16_t>(shape_grid_.size() - 1);
  const std::size_t hi = static_cast<std::size_t>(it - shape_grid_.begin());
  const std::size_t lo = hi - 1;
  return static_cast<std::uint16_t>(shape - shape_grid_[lo] <= shape_grid_[hi] - shape ? lo : hi);
}

std::size_t CodebookTable::RateIndex(int rate) const {
  const auto it = std::find(rates_.begin(), rates_.end(), rate);
  return static_cast<std::size_t>(it - rates_.begin());
}

std::size_t CodebookTable::MIndex(double M) const {
  for (std::size_t i = 0; i < Ms_.size(); ++i) {
    if (SameM(Ms_[i], M)) return i;
  }
  return Ms_.size();
}

bool CodebookTable::Covers(int rate, double M) const {
  return RateIndex(rate) < rates_.size() && MIndex(M) < Ms_.size();
}

const Codebook& CodebookTable::Lookup(std::uint16_t shape_token, int rate, double M) const {
  const std::size_t r = RateIndex(rate);
  const std::size_t m = MIndex(M);
  if (shape_token >= shape_grid_.size() || r >= rates_.size() || m >= Ms_.size()) {
    std::ostringstream os;
    os << "table (" << FamilyName(family_) << ") has no entry for shape token " << shape_token
       << ", rate " << rate << ", M " << M;
    throw Error(ErrorCode::kTableMismatch, os.str());
  }
  return entries_[(shape_token * rates_.size() + r) * Ms_.size() + m];
}

std::string CodebookTable::ToJson() const {
  json j;
  j["format"] = kFormatName;
  j["version"] = kFormatVersion;
  j["family"] = std::string(FamilyName(family_));
  j["shape_grid"] = shape_grid_;
  j["rates"] = rates_;
  j["Ms"] = Ms_;
  json entries = json::array();
  std::size_t k = 0;
  for (std::size_t s = 0; s < shape_grid_.size(); ++s) {
    for (int rate : rates_) {
      for (double M : Ms_) {
        const Codebook& cb = entries_[k++];
        entries.push_back({{"shape_index", s},
                           {"rate", rate},
                           {"M", M},
                           {"centers", cb.centers},
                           {"thresholds", cb.thresholds}});
      }
    }
  }
  j["entries"] = std::move(entries);
  return j.dump(1);
}

CodebookTable CodebookTable::FromJson(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedPayload, std::string("codebook table is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormatName) {
      throw Error(ErrorCode::kMalformedPayload, "not a codebook table file");
    }
    if (j.at("version").get<int>() != kFormatVersion) {
      throw Error(ErrorCode::kVersionMismatch,
                  "codebook table version " + j.at("version").dump() + " is not supported");
    }
    const Family family = ParseFamily(j.at("family").get<std::string>());
    auto grid = j.at("shape_grid").get<std::vector<double>>();
    auto rates = j.at("rates").get<std::vector<int>>();
    auto Ms = j.at("Ms").get<std::vector<double>>();
    const json& entries = j.at("entries");
    if (!entries.is_array() || entries.size() != grid.size() * rates.size() * Ms.size()) {
      throw Error(ErrorCode::kMalformedPayload, "codebook table entry count does not match its grids");
    }
    std::vector<Codebook> books;
    books.reserve(entries.size());
    std::size_t k = 0;
    for (std::size_t s = 0; s < grid.size(); ++s) {
      for (int rate : rates) {
        for (double M : Ms) {
          const json& e = entries[k++];
          if (e.at("shape_index").get<std::size_t>() != s || e.at("rate").get<int>() != rate ||
              !SameM(e.at("M").get<double>(), M)) {
            throw Error(ErrorCode::kMalformedPayload, "codebook table entries are out of order");
          }
          Codebook cb;
          cb.rate = rate;
          cb.M = M;
          cb.centers = e.at("centers").get<std::vector<double>>();
          cb.thresholds = e.at("thresholds").get<std::vector<double>>();
          books.push_back(std::move(cb));
        }
      }
    }
    return CodebookTable(family, std::move(grid), std::move(rates), std::move(Ms), std::move(books));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedPayload, std::string("codebook table schema error: ") + e.what());
  }
}

void CodebookTable::Save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << ToJson() << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path);
}

CodebookTable CodebookTable::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return FromJson(ss.str());
}

CodebookTable BuildTable(Family family, const std::vector<double>& shape_grid,
                         const std::vector<int>& rates, const std::vector<double>& Ms,
                         const TableOptions& opts) {
  const std::size_t total = shape_grid.size() * rates.size() * Ms.size();
  std::vector<Codebook> entries(total);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    for (std::size_t k = next++; k < total; k = next++) {
      const std::size_t m = k % Ms.size();
      const std::size_t r = (k / Ms.size()) % rates.size();
      const std::size_t s = k / (Ms.size() * rates.size());
      try {
        const DistributionFit fit = UnitVarianceMember(family, shape_grid[s]);
        entries[k] = DesignCodebook(fit, rates[r], Ms[m], opts.tol, opts.max_iter);
      } catch (const Error& e) {
        std::ostringstream os;
        os << "grid point (" << FamilyName(family) << ", shape " << shape_grid[s] << ", rate "
           << rates[r] << ", M " << Ms[m] << "): " << e.what();
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::make_exception_ptr(Error(e.code(), os.str()));
      }
    }
  };

  unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(total, 1)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return CodebookTable(family, shape_grid, rates, Ms, std::move(entries));
}

std::vector<double> ShapeGrid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) {
    throw Error(ErrorCode::kInvalidArgument, "shape grid needs step > 0 and hi >= lo");
  }
  std::vector<double> out;
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5));
  for (std::size_t i = 0; i <= count; ++i) {
    // Rounded to 1e-9 so that 0.3 + 0.05 k prints and compares cleanly.
    out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e9) / 1e9);
  }
  return out;
}

std::vector<double> DefaultShapeGrid(Family family) {
  return family == Family::kGenNorm ? ShapeGrid(0.3, 3.0, 0.05) : ShapeGrid(0.3, 1.0, 0.05);
}

}  // namespace m22
