#pragma once

// Counter-based, splittable random number generation.
//
// Every draw is a pure function of (key, counter), so a stream can be forked
// by tag (image id, chain index, run index) and the resulting values do not
// depend on the order in which streams are consumed. Distributions are
// implemented here rather than taken from <random> because the standard
// distributions are not specified bit-for-bit across library vendors.

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <utility>

namespace osfr {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a, used to turn textual stream tags (image ids) into 64-bit tags.
constexpr std::uint64_t hash_tag(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    return mix64(key_ + kGamma * ++counter_);
  }

  // Independent child stream. Does not advance this stream.
  constexpr CounterRng split(std::uint64_t tag) const noexcept {
    return CounterRng(mix64(mix64(key_ ^ 0x5851f42d4c957f2dULL) + kGamma * (tag + 1)));
  }
  constexpr CounterRng split(std::string_view tag) const noexcept {
    return split(hash_tag(tag));
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform01() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform01();
  }

  bool bernoulli(double p) noexcept { return uniform01() < p; }

  // Unbiased integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller; the sine branch is cached.
  double normal() noexcept;

  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace osfr
