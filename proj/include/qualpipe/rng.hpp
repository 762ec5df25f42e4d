#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace qualpipe {

// Deterministic RNG wrapper. std::uniform_int_distribution is not
// byte-stable across standard libraries, so bounded draws and shuffles are
// implemented here on top of mt19937_64 (which is).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, n) via rejection sampling (unbiased).
  std::uint64_t below(std::uint64_t n);

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Uniform sample of k distinct positions from [0, n) in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t k);

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// Fans a top-level seed out into labeled per-stage sub-seeds so stages
// draw from independent streams.
std::uint64_t subseed(std::uint64_t top_seed, std::string_view label);

}  // namespace qualpipe
