#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace mixcycle {

// All randomness flows through caller-owned engines seeded from a root seed
// plus a purpose tag, so independent pipeline stages never share a stream.
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  engine_type& engine() { return engine_; }

  double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(engine_);
  }

  // Uniform integer in [0, n); n must be positive.
  std::uint64_t index(std::uint64_t n) {
    std::uniform_int_distribution<std::uint64_t> d(0, n - 1);
    return d(engine_);
  }

  double gaussian(double mean, double stddev) {
    std::normal_distribution<double> d(mean, stddev);
    return d(engine_);
  }

  bool bernoulli(double p) {
    std::bernoulli_distribution d(p);
    return d(engine_);
  }

 private:
  engine_type engine_;
};

std::uint64_t mix_bits(std::uint64_t v);
std::uint64_t derive_seed(std::uint64_t root,
                          std::initializer_list<std::uint64_t> tags);
std::uint64_t fnv1a64(std::string_view s);

// Beta(alpha, beta) via the ratio of two gamma draws.
double sample_beta(Rng& rng, double alpha, double beta);

}  // namespace mixcycle
