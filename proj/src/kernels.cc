// Copyright 2026 The Bundle Negotiation Authors.
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

#include "negotiation/kernels.h"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace negotiation::kernels {
namespace {

constexpr std::size_t kRowBlock = 512;

struct BlockResult {
  double loss = 0.0;
  std::vector<double> grad;
};

BlockResult gradient_block(const std::vector<SparseRow>& rows,
                           const std::vector<std::size_t>& labels,
                           const std::vector<double>& w, std::size_t classes,
                           std::size_t features, std::size_t begin, std::size_t end) {
  BlockResult out;
  out.grad.assign(classes * features, 0.0);
  std::vector<double> logits(classes);
  for (std::size_t r = begin; r < end; ++r) {
    const SparseRow& row = rows[r];
    for (std::size_t c = 0; c < classes; ++c) {
      double z = 0.0;
      for (std::size_t k = 0; k < row.index.size(); ++k) {
        z += w[c * features + row.index[k]] * row.value[k];
      }
      logits[c] = z;
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    double norm = 0.0;
    for (double& z : logits) {
      z = std::exp(z - peak);
      norm += z;
    }
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = logits[c] / norm;
      const double g = p - (c == labels[r] ? 1.0 : 0.0);
      if (c == labels[r]) out.loss -= std::log(std::max(p, 1e-300));
      for (std::size_t k = 0; k < row.index.size(); ++k) {
        out.grad[c * features + row.index[k]] += g * row.value[k];
      }
    }
  }
  return out;
}

double reduce_blocks(const std::vector<BlockResult>& blocks, const std::vector<double>& w,
                     std::size_t rows, double l2, std::vector<double>& grad) {
  grad.assign(w.size(), 0.0);
  double loss = 0.0;
  for (const auto& b : blocks) {
    loss += b.loss;
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += b.grad[i];
  }
  const double inv = rows > 0 ? 1.0 / static_cast<double>(rows) : 0.0;
  loss *= inv;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i] = grad[i] * inv + l2 * w[i];
    loss += 0.5 * l2 * w[i] * w[i];
  }
  return loss;
}

template <bool Parallel>
double softmax_gradient(const std::vector<SparseRow>& rows,
                        const std::vector<std::size_t>& labels, const std::vector<double>& w,
                        std::size_t classes, std::size_t features, double l2,
                        std::vector<double>& grad) {
  const std::size_t nblocks = (rows.size() + kRowBlock - 1) / kRowBlock;
  auto block = [&](std::size_t b) {
    return gradient_block(rows, labels, w, classes, features, b * kRowBlock,
                          std::min(rows.size(), (b + 1) * kRowBlock));
  };
  std::vector<BlockResult> blocks = Parallel ? map_indexed_parallel(nblocks, block)
                                             : map_indexed_serial(nblocks, block);
  return reduce_blocks(blocks, w, rows.size(), l2, grad);
}

}  // namespace

double softmax_gradient_serial(const std::vector<SparseRow>& rows,
                               const std::vector<std::size_t>& labels,
                               const std::vector<double>& weights, std::size_t num_classes,
                               std::size_t num_features, double l2,
                               std::vector<double>& grad) {
  return softmax_gradient<false>(rows, labels, weights, num_classes, num_features, l2, grad);
}

double softmax_gradient_parallel(const std::vector<SparseRow>& rows,
                                 const std::vector<std::size_t>& labels,
                                 const std::vector<double>& weights, std::size_t num_classes,
                                 std::size_t num_features, double l2,
                                 std::vector<double>& grad) {
  return softmax_gradient<true>(rows, labels, weights, num_classes, num_features, l2, grad);
}

double bleu1(const std::vector<std::string>& hypothesis,
             const std::vector<std::string>& reference) {
  if (hypothesis.empty() || reference.empty()) return 0.0;
  std::unordered_map<std::string, int> ref_counts;
  for (const auto& tok : reference) ++ref_counts[tok];
  std::unordered_map<std::string, int> hyp_counts;
  for (const auto& tok : hypothesis) ++hyp_counts[tok];
  int matched = 0;
  for (const auto& [tok, n] : hyp_counts) {
    auto it = ref_counts.find(tok);
    if (it != ref_counts.end()) matched += std::min(n, it->second);
  }
  const double h = static_cast<double>(hypothesis.size());
  const double r = static_cast<double>(reference.size());
  const double brevity = h > r ? 1.0 : std::exp(1.0 - r / h);
  return brevity * matched / h;
}

double mean_pair_bleu1_serial(const std::vector<std::vector<std::string>>& utterances,
                              const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  if (pairs.empty()) return 0.0;
  const auto scores = map_indexed_serial(pairs.size(), [&](std::size_t i) {
    return bleu1(utterances[pairs[i].first], utterances[pairs[i].second]);
  });
  double sum = 0.0;
  for (double v : scores) sum += v;
  return sum / static_cast<double>(pairs.size());
}

double mean_pair_bleu1_parallel(const std::vector<std::vector<std::string>>& utterances,
                                const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  if (pairs.empty()) return 0.0;
  const auto scores = map_indexed_parallel(pairs.size(), [&](std::size_t i) {
    return bleu1(utterances[pairs[i].first], utterances[pairs[i].second]);
  });
  double sum = 0.0;
  for (double v : scores) sum += v;
  return sum / static_cast<double>(pairs.size());
}

}  // namespace negotiation::kernels
