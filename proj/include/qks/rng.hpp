// Copyright 2026 The qksearch Authors.

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file rng.hpp
 * Seeded random source with hand-rolled draw primitives. std::mt19937_64 is
 * bit-exact across platforms but the standard distributions are not, so the
 * bounded and real draws are implemented here to keep runs reproducible.
 */
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace qks {

class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    /// Uniform integer in [0, bound) via rejection sampling. bound > 0.
    uint64_t uniform_below(uint64_t bound) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % bound;
    }

    /// Uniform integer in the inclusive range [lo, hi].
    int64_t uniform_int(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(
                        uniform_below(static_cast<uint64_t>(hi - lo) + 1));
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Fisher-Yates shuffle.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_below(i)]);
        }
    }

    /// m distinct values from [0, n), returned in draw order.
    std::vector<int> sample_distinct(int n, int m);

  private:
    std::mt19937_64 eng_;
};

inline std::vector<int> Rng::sample_distinct(int n, int m) {
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    std::vector<int> out;
    out.reserve(m);
    for (int i = 0; i < m; ++i) {
        const auto j = uniform_below(pool.size());
        out.push_back(pool[j]);
        pool.erase(pool.begin() + static_cast<long>(j));
    }
    return out;
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Child seed derived from a master seed and a path of indices/tags.
/// Used to hand independent streams to pool workers and trials.
inline uint64_t derive_seed(uint64_t master, std::initializer_list<uint64_t> path) {
    uint64_t h = splitmix64(master);
    for (uint64_t tag : path) h = splitmix64(h ^ tag);
    return h;
}

}  // namespace qks
