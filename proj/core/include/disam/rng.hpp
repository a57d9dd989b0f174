// Copyright (c) 2026, DISAM contributors
// SPDX-License-Identifier: Apache-2.0
//
// Seedable counter-based random numbers. Every draw is a pure function of
// (key, counter), so streams are reproducible across platforms and compilers;
// std::mt19937 + std::*_distribution are avoided because the distributions are
// implementation-defined.

#pragma once

#include <cstdint>
#include <span>

namespace disam {

/// SplitMix64 finalizer applied to key + counter * golden-gamma.
std::uint64_t splitmix64_mix(std::uint64_t z) noexcept;

/// Counter-mode SplitMix64. A stream is identified by its 64-bit key; the n-th
/// raw output is splitmix64_mix(key + (n + 1) * 0x9E3779B97F4A7C15).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept;

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0. Unbiased (rejection sampling).
  std::uint64_t uniform_index(std::uint64_t n) noexcept;

  /// Standard normal via Box-Muller; the spare variate is cached.
  double normal() noexcept;

  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent stream key from a root seed and a label.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t label) noexcept;

}  // namespace disam
