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

#ifndef NEGOTIATION_KERNELS_H_
#define NEGOTIATION_KERNELS_H_

// Data-parallel kernels. Each comes as an OpenMP version and a serial
// reference with identical results; tests pin the two together and
// bench/kernels_bench.cc compares their speed.

#include <cstddef>
#include <exception>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace negotiation::kernels {

// out[i] = fn(i). fn must only touch state owned by index i.
template <class Fn>
auto map_indexed_serial(std::size_t n, Fn&& fn) {
  using T = std::decay_t<decltype(fn(std::size_t{}))>;
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
  return out;
}

template <class Fn>
auto map_indexed_parallel(std::size_t n, Fn&& fn) {
  using T = std::decay_t<decltype(fn(std::size_t{}))>;
  std::vector<T> out(n);
  std::exception_ptr failure;
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (long i = 0; i < count; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(negotiation_kernel_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

// Sparse bag-of-words example: (feature index, value) pairs.
struct SparseRow {
  std::vector<std::size_t> index;
  std::vector<double> value;
};

// Gradient of the mean multinomial log-loss plus l2 * |W|^2 / 2 for a linear
// softmax model with weights laid out [class][feature]. Rows are reduced in
// fixed blocks, so both versions return bit-identical sums for any thread
// count. Returns the loss.
double softmax_gradient_serial(const std::vector<SparseRow>& rows,
                               const std::vector<std::size_t>& labels,
                               const std::vector<double>& weights, std::size_t num_classes,
                               std::size_t num_features, double l2,
                               std::vector<double>& grad);
double softmax_gradient_parallel(const std::vector<SparseRow>& rows,
                                 const std::vector<std::size_t>& labels,
                                 const std::vector<double>& weights, std::size_t num_classes,
                                 std::size_t num_features, double l2,
                                 std::vector<double>& grad);

// Clipped-precision unigram BLEU of `hypothesis` against `reference`, with
// brevity penalty. Tokens are already normalized.
double bleu1(const std::vector<std::string>& hypothesis,
             const std::vector<std::string>& reference);

// Mean BLEU-1 over the listed (hypothesis, reference) index pairs.
double mean_pair_bleu1_serial(const std::vector<std::vector<std::string>>& utterances,
                              const std::vector<std::pair<std::size_t, std::size_t>>& pairs);
double mean_pair_bleu1_parallel(const std::vector<std::vector<std::string>>& utterances,
                                const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

}  // namespace negotiation::kernels

#endif  // NEGOTIATION_KERNELS_H_
