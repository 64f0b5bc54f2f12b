#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace etcbench {

using Seed256 = std::array<std::uint8_t, 32>;

std::string to_hex(const Seed256& seed);
/// Parses exactly 64 hex digits; throws std::invalid_argument otherwise.
Seed256 seed_from_hex(const std::string& hex);

/// Keyed counter-mode word stream: (seed, stream id, counter) -> 64-bit words.
/// Backed by the ChaCha20 keystream with the stream id as nonce, so the
/// output at a given counter is independent of how many words were consumed
/// before it.
class KeyStream {
 public:
  KeyStream(const Seed256& seed, std::uint64_t stream_id);

  std::uint64_t next();
  /// Uniform integer in [0, bound) by rejection sampling; bound >= 1.
  std::uint64_t below(std::uint64_t bound);

  std::uint64_t words_consumed() const { return counter_ * 8 + index_; }

 private:
  void refill();

  Seed256 seed_;
  std::array<std::uint8_t, 8> nonce_{};
  std::uint64_t counter_ = 0;  // next ChaCha20 block to generate
  std::array<std::uint64_t, 8> buffer_{};
  std::size_t index_ = 8;
};

/// Seeded general-purpose generator for simulations, corpus synthesis and
/// weight initialisation. Uses mt19937_64 (whose output sequence is fixed by
/// the standard) with portable helpers instead of std distributions, whose
/// outputs vary between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  std::uint64_t below(std::uint64_t bound);
  int uniform_int(int lo, int hi);  // inclusive
  double uniform();                 // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  Seed256 seed256();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent 64-bit seed from a base seed and a label.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t label);

}  // namespace etcbench
