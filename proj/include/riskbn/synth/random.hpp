#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace riskbn {

// Portable pseudo-random stream. The engine is std::mt19937_64 (algorithm
// fixed by the standard); every derived draw below is defined here rather
// than through <random> distributions, whose algorithms are
// implementation-defined. Same seed, same stream on every platform.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer on [0, n), unbiased by rejection. n > 0.
  std::uint64_t below(std::uint64_t n);
  // Inclusive integer range.
  int between(int lo, int hi);
  bool bernoulli(double p) { return uniform() < p; }
  // Index drawn with probability proportional to weights.
  std::size_t categorical(std::span<const double> weights);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace riskbn
