#include "mixcycle/rng.hpp"

namespace mixcycle {

std::uint64_t mix_bits(std::uint64_t v) {
  // splitmix64 finalizer
  v += 0x9e3779b97f4a7c15ULL;
  v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
  v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
  return v ^ (v >> 31);
}

std::uint64_t derive_seed(std::uint64_t root,
                          std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = mix_bits(root);
  for (std::uint64_t t : tags) {
    h = mix_bits(h ^ mix_bits(t));
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double sample_beta(Rng& rng, double alpha, double beta) {
  std::gamma_distribution<double> ga(alpha, 1.0);
  std::gamma_distribution<double> gb(beta, 1.0);
  double a = ga(rng.engine());
  double b = gb(rng.engine());
  double s = a + b;
  if (s <= 0.0) return 0.5;
  return a / s;
}

}  // namespace mixcycle
