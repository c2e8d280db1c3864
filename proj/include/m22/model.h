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

#ifndef M22_MODEL_H_
#define M22_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "m22/compressors.h"

namespace m22 {

// Row-major features with integer class labels.
struct Dataset {
  std::size_t dim = 0;
  std::vector<double> x;  // size() * dim
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * dim, dim}; }
  bool operator==(const Dataset&) const = default;
};

enum class ModelKind { kLogistic, kMlp };

std::string_view ModelKindName(ModelKind kind);
ModelKind ParseModelKind(std::string_view name);

// Softmax regression, or one tanh hidden layer followed by softmax.
struct ModelSpec {
  ModelKind kind = ModelKind::kMlp;
  std::size_t input_dim = 50;
  std::size_t hidden = 192;
  std::size_t classes = 2;
};

// Flat parameter vector plus the named blocks that partition it.
struct ModelParams {
  std::vector<double> w;
  std::vector<Block> blocks;
};

std::size_t ParameterCount(const ModelSpec& spec);
std::vector<Block> ParameterBlocks(const ModelSpec& spec);

// Zero for softmax regression; scaled uniform (Glorot) weights for the MLP.
ModelParams InitModel(const ModelSpec& spec, std::uint64_t seed);

// Mean cross-entropy over `data`.
double Loss(const ModelSpec& spec, std::span<const double> w, const Dataset& data);
double Accuracy(const ModelSpec& spec, std::span<const double> w, const Dataset& data);

/// Gradient of the mean cross-entropy over the listed rows, by manual
/// backpropagation. An empty row list means every row.
std::vector<double> Gradient(const ModelSpec& spec, std::span<const double> w, const Dataset& data,
                             std::span<const std::size_t> rows = {});

}  // namespace m22

#endif  // M22_MODEL_H_
