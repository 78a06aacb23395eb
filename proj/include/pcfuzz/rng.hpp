#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace pcfuzz {

// Seeded random source. Child generators are derived from a base seed, a
// label and a counter, so results do not depend on call interleaving.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }

  // Uniform double in [0, 1).
  double uniform();
  // Uniform integer in [0, bound).
  std::size_t below(std::size_t bound);
  // Index drawn proportionally to non-negative weights. Requires a positive
  // total.
  std::size_t categorical(std::span<const double> weights);

  std::mt19937_64& engine() { return engine_; }

  Rng derive(std::string_view label, std::uint64_t counter = 0) const;
  static std::uint64_t derive_seed(std::uint64_t seed, std::string_view label,
                                   std::uint64_t counter);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace pcfuzz
