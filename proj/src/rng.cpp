#include "pcfuzz/rng.hpp"

#include <numeric>

#include "pcfuzz/error.hpp"

namespace pcfuzz {

namespace {

// FNV-1a; std::hash is not stable across standard libraries.
std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : label) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32)};
  engine_.seed(seq);
}

double Rng::uniform() {
  // 53 random bits; std::uniform_real_distribution is not portable.
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::below(std::size_t bound) {
  if (bound == 0) throw UsageError("Rng::below called with bound 0");
  std::uniform_int_distribution<std::size_t> dist(0, bound - 1);
  return dist(engine_);
}

std::size_t Rng::categorical(std::span<const double> weights) {
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) {
    throw NumericError("categorical draw over weights with zero total");
  }
  double u = uniform() * total;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return last_positive;
}

std::uint64_t Rng::derive_seed(std::uint64_t seed, std::string_view label,
                               std::uint64_t counter) {
  return mix(mix(seed ^ hash_label(label)) + mix(counter));
}

Rng Rng::derive(std::string_view label, std::uint64_t counter) const {
  return Rng(derive_seed(seed_, label, counter));
}

}  // namespace pcfuzz
