// core/rng.h

// Copyright 2026 castkit authors
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

#ifndef CASTKIT_CORE_RNG_H_
#define CASTKIT_CORE_RNG_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace cast {

// Seeded random source.  All sampling goes through the raw mt19937_64 word
// stream so that identical seeds give bit-identical streams on every
// platform; the std::*_distribution adaptors are implementation defined and
// are not used anywhere in the toolkit.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), engine_(seed) {}

  static const char* Algorithm() { return "mt19937_64+box-muller"; }

  uint64_t seed() const { return seed_; }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the second sample of each pair is cached.
  double Normal();

  // Uniform integer in [0, n), n >= 1, rejection sampled (no modulo bias).
  uint64_t UniformInt(uint64_t n);

  // Integer in [lo, hi] inclusive.
  int64_t UniformRange(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(UniformInt(static_cast<uint64_t>(hi - lo + 1)));
  }

  // Independent generator for a substream, e.g. one per speaker or per
  // curve cell.  Deterministic in (seed, stream).
  Rng Fork(uint64_t stream) const;

  template <typename T>
  void Shuffle(std::vector<T>* v) {
    for (size_t i = v->size(); i > 1; --i) {
      size_t j = static_cast<size_t>(UniformInt(i));
      std::swap((*v)[i - 1], (*v)[j]);
    }
  }

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

// SplitMix64 hash step, used for deriving substream seeds.
uint64_t SplitMix64(uint64_t x);

}  // namespace cast

#endif  // CASTKIT_CORE_RNG_H_
