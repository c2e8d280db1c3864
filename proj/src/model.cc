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

#include "m22/model.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "m22/error.h"

namespace m22 {
namespace {

// Views into the flat vector, in block order.
struct Layout {
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
};

Layout MakeLayout(const ModelSpec& s) {
  Layout l;
  if (s.kind == ModelKind::kLogistic) {
    l.w1 = 0;
    l.b1 = s.classes * s.input_dim;
    return l;
  }
  l.w1 = 0;
  l.b1 = s.hidden * s.input_dim;
  l.w2 = l.b1 + s.hidden;
  l.b2 = l.w2 + s.classes * s.hidden;
  return l;
}

void CheckShapes(const ModelSpec& spec, std::span<const double> w, const Dataset& data) {
  if (w.size() != ParameterCount(spec)) {
    throw Error(ErrorCode::kDimensionMismatch, "parameter vector does not match the model");
  }
  if (data.dim != spec.input_dim || data.x.size() != data.size() * data.dim) {
    throw Error(ErrorCode::kDimensionMismatch, "dataset features do not match the model input");
  }
  for (int label : data.y) {
    if (label < 0 || static_cast<std::size_t>(label) >= spec.classes) {
      throw Error(ErrorCode::kInvalidArgument, "label outside the class range");
    }
  }
}

// Softmax in place; returns log-sum-exp for the loss.
double Softmax(std::vector<double>& z) {
  const double peak = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - peak);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return peak + std::log(sum);
}

// Forward pass for one example: hidden activations (MLP only) and logits.
void Forward(const ModelSpec& s, const Layout& l, std::span<const double> w,
             std::span<const double> x, std::vector<double>& h, std::vector<double>& z) {
  z.assign(s.classes, 0.0);
  if (s.kind == ModelKind::kLogistic) {
    for (std::size_t c = 0; c < s.classes; ++c) {
      double acc = w[l.b1 + c];
      const double* row = w.data() + l.w1 + c * s.input_dim;
      for (std::size_t j = 0; j < s.input_dim; ++j) acc += row[j] * x[j];
      z[c] = acc;
    }
    return;
  }
  h.assign(s.hidden, 0.0);
  for (std::size_t u = 0; u < s.hidden; ++u) {
    double acc = w[l.b1 + u];
    const double* row = w.data() + l.w1 + u * s.input_dim;
    for (std::size_t j = 0; j < s.input_dim; ++j) acc += row[j] * x[j];
    h[u] = std::tanh(acc);
  }
  for (std::size_t c = 0; c < s.classes; ++c) {
    double acc = w[l.b2 + c];
    const double* row = w.data() + l.w2 + c * s.hidden;
    for (std::size_t u = 0; u < s.hidden; ++u) acc += row[u] * h[u];
    z[c] = acc;
  }
}

}  // namespace

std::string_view ModelKindName(ModelKind kind) {
  return kind == ModelKind::kLogistic ? "logistic" : "mlp";
}

ModelKind ParseModelKind(std::string_view name) {
  if (name == "logistic") return ModelKind::kLogistic;
  if (name == "mlp") return ModelKind::kMlp;
  throw Error(ErrorCode::kInvalidArgument, "unknown model '" + std::string(name) + "'");
}

std::size_t ParameterCount(const ModelSpec& s) {
  if (s.kind == ModelKind::kLogistic) return s.classes * (s.input_dim + 1);
  return s.hidden * (s.input_dim + 1) + s.classes * (s.hidden + 1);
}

std::vector<Block> ParameterBlocks(const ModelSpec& s) {
  const Layout l = MakeLayout(s);
  if (s.kind == ModelKind::kLogistic) {
    return {{"linear.weight", l.w1, l.b1 - l.w1}, {"linear.bias", l.b1, s.classes}};
  }
  return {{"layer1.weight", l.w1, l.b1 - l.w1},
          {"layer1.bias", l.b1, s.hidden},
          {"layer2.weight", l.w2, l.b2 - l.w2},
          {"layer2.bias", l.b2, s.classes}};
}

ModelParams InitModel(const ModelSpec& spec, std::uint64_t seed) {
  if (spec.input_dim == 0 || spec.classes < 2 || (spec.kind == ModelKind::kMlp && spec.hidden == 0)) {
    throw Error(ErrorCode::kInvalidArgument, "model needs input_dim >= 1, classes >= 2, hidden >= 1");
  }
  ModelParams p;
  p.w.assign(ParameterCount(spec), 0.0);
  p.blocks = ParameterBlocks(spec);
  if (spec.kind == ModelKind::kLogistic) return p;
  const Layout l = MakeLayout(spec);
  std::mt19937_64 rng(seed);
  const double a1 = std::sqrt(6.0 / static_cast<double>(spec.input_dim + spec.hidden));
  const double a2 = std::sqrt(6.0 / static_cast<double>(spec.hidden + spec.classes));
  std::uniform_real_distribution<double> u1(-a1, a1);
  std::uniform_real_distribution<double> u2(-a2, a2);
  for (std::size_t i = l.w1; i < l.b1; ++i) p.w[i] = u1(rng);
  for (std::size_t i = l.w2; i < l.b2; ++i) p.w[i] = u2(rng);
  return p;
}

double Loss(const ModelSpec& spec, std::span<const double> w, const Dataset& data) {
  CheckShapes(spec, w, data);
  if (data.size() == 0) return 0.0;
  const Layout l = MakeLayout(spec);
  std::vector<double> h, z;
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Forward(spec, l, w, data.row(i), h, z);
    const double logit = z[static_cast<std::size_t>(data.y[i])];
    total += Softmax(z) - logit;
  }
  return total / static_cast<double>(data.size());
}

double Accuracy(const ModelSpec& spec, std::span<const double> w, const Dataset& data) {
  CheckShapes(spec, w, data);
  if (data.size() == 0) return 0.0;
  const Layout l = MakeLayout(spec);
  std::vector<double> h, z;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Forward(spec, l, w, data.row(i), h, z);
    const auto best = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    hits += best == data.y[i];
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

std::vector<double> Gradient(const ModelSpec& spec, std::span<const double> w, const Dataset& data,
                             std::span<const std::size_t> rows) {
  CheckShapes(spec, w, data);
  const Layout l = MakeLayout(spec);
  std::vector<double> g(w.size(), 0.0);
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    rows = all;
  }
  if (rows.empty()) return g;

  std::vector<double> h, z, dh;
  for (std::size_t i : rows) {
    if (i >= data.size()) throw Error(ErrorCode::kIndexOutOfRange, "minibatch row out of range");
    const auto x = data.row(i);
    Forward(spec, l, w, x, h, z);
    Softmax(z);
    z[static_cast<std::size_t>(data.y[i])] -= 1.0;  // dL/dlogits

    if (spec.kind == ModelKind::kLogistic) {
      for (std::size_t c = 0; c < spec.classes; ++c) {
        double* row = g.data() + l.w1 + c * spec.input_dim;
        for (std::size_t j = 0; j < spec.input_dim; ++j) row[j] += z[c] * x[j];
        g[l.b1 + c] += z[c];
      }
      continue;
    }
    dh.assign(spec.hidden, 0.0);
    for (std::size_t c = 0; c < spec.classes; ++c) {
      double* row = g.data() + l.w2 + c * spec.hidden;
      const double* wrow = w.data() + l.w2 + c * spec.hidden;
      for (std::size_t u = 0; u < spec.hidden; ++u) {
        row[u] += z[c] * h[u];
        dh[u] += z[c] * wrow[u];
      }
      g[l.b2 + c] += z[c];
    }
    for (std::size_t u = 0; u < spec.hidden; ++u) {
      const double da = dh[u] * (1.0 - h[u] * h[u]);  // tanh'
      double* row = g.data() + l.w1 + u * spec.input_dim;
      for (std::size_t j = 0; j < spec.input_dim; ++j) row[j] += da * x[j];
      g[l.b1 + u] += da;
    }
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (double& v : g) v *= inv;
  return g;
}

}  // namespace m22
