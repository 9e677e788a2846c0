// Copyright 2026 The PTF Learning Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PTF_RANDOM_H_
#define PTF_RANDOM_H_

#include <algorithm>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace ptf {

using Rng = std::mt19937_64;

// Independent stream for (seed, stream) pairs.
inline Rng MakeStream(uint64_t seed, uint64_t stream) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(stream),
                    static_cast<uint32_t>(stream >> 32), 0x70746600u};
  return Rng(seq);
}

// Deterministic hash used for train/validate splits and stream derivation.
inline uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t DeriveSeed(uint64_t seed, uint64_t tag) {
  return SplitMix64(seed ^ SplitMix64(tag));
}

// Rows are i.i.d. N(0, I_n).
inline Eigen::MatrixXd GaussianRows(Rng& rng, int64_t rows, int n) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd out(rows, n);
  for (int64_t r = 0; r < rows; ++r) {
    for (int c = 0; c < n; ++c) out(r, c) = normal(rng);
  }
  return out;
}

// Splits [0, n) into `workers` contiguous chunks and runs fn(worker, begin,
// end) for each, on its own thread when workers > 1. Chunk boundaries depend
// only on (n, workers), which keeps per-worker RNG streams reproducible.
template <typename Fn>
void ParallelChunks(int workers, int64_t n, Fn&& fn) {
  workers = std::max(1, workers);
  const int64_t chunk = (n + workers - 1) / workers;
  if (workers == 1) {
    fn(0, int64_t{0}, n);
    return;
  }
  std::vector<std::thread> threads;
  for (int w = 0; w < workers; ++w) {
    const int64_t begin = std::min(n, w * chunk);
    const int64_t end = std::min(n, begin + chunk);
    threads.emplace_back([&fn, w, begin, end] { fn(w, begin, end); });
  }
  for (auto& t : threads) t.join();
}

}  // namespace ptf

#endif  // PTF_RANDOM_H_
