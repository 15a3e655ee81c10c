// Copyright 2026 The NCB Authors
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

// Random streams and the small amount of threading the library uses.
//
// Every stochastic quantity is drawn from a stream derived from a 64-bit key
// with splitmix64, so an episode's randomness depends only on (batch key,
// episode index) and never on thread scheduling.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ncb {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Mixes a parent key with a child index into an independent-looking key.
inline std::uint64_t derive_key(std::uint64_t parent, std::uint64_t index) {
  return splitmix64(splitmix64(parent) ^ (index * 0xd1b54a32d192ed03ULL + 1));
}

/// A seeded random stream: the SplitMix64 sequence generator. Seeding is
/// one word, so the many per-episode streams are cheap. Uniforms are built
/// from raw 64-bit draws, identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(splitmix64(seed)) {}

  static Rng stream(std::uint64_t key, std::uint64_t index) {
    return Rng(derive_key(key, index));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Index drawn from an (assumed normalized) probability vector.
  std::size_t categorical(std::span<const double> probs) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
      acc += probs[k];
      if (u < acc) return k;
    }
    // u landed in the rounding slack above the last cumulative sum.
    for (std::size_t k = probs.size(); k-- > 0;) {
      if (probs[k] > 0.0) return k;
    }
    return probs.size() - 1;
  }

  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

 private:
  std::uint64_t state_;
};

// Threading -------------------------------------------------------------

namespace detail {
inline std::atomic<int>& thread_cap() {
  static std::atomic<int> cap{0};  // 0: unset, read NCB_THREADS lazily
  return cap;
}
inline thread_local int nested_depth = 0;
}  // namespace detail

/// Forces the worker count used by parallel_for (1 = single-threaded).
inline void set_max_threads(int n) { detail::thread_cap() = std::max(1, n); }

inline int max_threads() {
  int cap = detail::thread_cap().load();
  if (cap > 0) return cap;
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("NCB_THREADS")) {
    try {
      n = std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("NCB_THREADS is not an integer: ") + env);
    }
  }
  detail::thread_cap() = n;
  return n;
}

/// Runs fn(i) for i in [0, n). Work is split into contiguous chunks; nested
/// calls run inline. fn must only write to per-index output slots.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const int workers =
      detail::nested_depth > 0 ? 1 : static_cast<int>(std::min<std::size_t>(max_threads(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      ++detail::nested_depth;
      try {
        const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
      --detail::nested_depth;
    });
  }
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace ncb
