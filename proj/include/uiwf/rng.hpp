#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace uiwf {

// mt19937_64 is bit-for-bit specified by the standard; the distribution
// helpers below replace <random>'s distributions, whose outputs are
// implementation-defined.
using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// Derive an independent stream seed from a parent seed and a tag.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept;

// Uniform double in [0, 1) with 53 bits of entropy.
double uniform01(Rng& rng);
double uniform_real(Rng& rng, double lo, double hi);
// Uniform integer in [0, n). n must be > 0.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);
bool bernoulli(Rng& rng, double p);

template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace uiwf
