#pragma once
// Reproducible random streams.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The standard distributions are implementation-defined, so the
// conversions to uniform/normal/integer draws are written out here; a stream
// therefore yields identical values on every conforming platform.
//
// One root seed fans out into independent streams with derive(), which mixes
// the root with a purpose tag and up to three indices through SplitMix64.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace hebrain {

enum class StreamPurpose : std::uint64_t {
  Init = 1,
  Dropout = 2,
  NegativeSampling = 3,
  Split = 4,
  Shuffle = 5,
  Generator = 6,
  Evaluation = 7,
};

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent stream for (root, purpose, a, b, c).
  static Rng derive(std::uint64_t root, StreamPurpose purpose, std::uint64_t a = 0,
                    std::uint64_t b = 0, std::uint64_t c = 0);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n); unbiased (rejection on the top range).
  std::uint64_t uniform_index(std::uint64_t n);
  // Standard normal via Box-Muller; the spare value is cached.
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }
  template <class T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace hebrain
