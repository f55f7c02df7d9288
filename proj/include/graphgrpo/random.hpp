#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>

namespace graphgrpo {

// Seed-addressed random stream. A stream is identified by a 64-bit key;
// derive() produces child streams whose key depends only on the parent key
// and the tags, never on how many draws the parent has made. Rollouts are
// therefore reproducible per (run seed, group, member, step).
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed = 0);

  RandomStream split(std::uint64_t tag) const;

  template <typename... Tags>
  RandomStream derive(Tags... tags) const {
    RandomStream s = *this;
    ((s = s.split(static_cast<std::uint64_t>(tags))), ...);
    return s;
  }

  std::uint64_t key() const { return key_; }

  // Uniform double in [0, 1) built from the top 53 bits.
  double uniform();
  std::size_t uniform_index(std::size_t n);
  // Box-Muller, so values do not depend on the standard library.
  double normal();

  result_type operator()() { return engine_(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace graphgrpo
