#include "etcbench/random.hpp"

#include <sodium.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace etcbench {

std::string to_hex(const Seed256& seed) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (auto b : seed) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 15]);
  }
  return out;
}

Seed256 seed_from_hex(const std::string& hex) {
  if (hex.size() != 64) throw std::invalid_argument("seed must be 64 hex characters, got " + std::to_string(hex.size()));
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument(std::string("invalid hex digit '") + c + "' in seed");
  };
  Seed256 seed{};
  for (std::size_t i = 0; i < 32; ++i) seed[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return seed;
}

KeyStream::KeyStream(const Seed256& seed, std::uint64_t stream_id) : seed_(seed) {
  static const int init = sodium_init();
  (void)init;
  for (int i = 0; i < 8; ++i) nonce_[i] = static_cast<std::uint8_t>(stream_id >> (8 * i));
}

void KeyStream::refill() {
  std::array<std::uint8_t, 64> zeros{};
  std::array<std::uint8_t, 64> block{};
  crypto_stream_chacha20_xor_ic(block.data(), zeros.data(), block.size(), nonce_.data(), counter_, seed_.data());
  for (std::size_t w = 0; w < 8; ++w) {
    std::uint64_t v = 0;
    for (int b = 7; b >= 0; --b) v = v << 8 | block[w * 8 + b];
    buffer_[w] = v;
  }
  ++counter_;
  index_ = 0;
}

std::uint64_t KeyStream::next() {
  if (index_ == buffer_.size()) refill();
  return buffer_[index_++];
}

std::uint64_t KeyStream::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("KeyStream::below: bound must be positive");
  // Reject the low (2^64 mod bound) values so every residue is equally likely.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t x = next();
    if (x >= threshold) return x % bound;
  }
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::below: bound must be positive");
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t x = engine_();
    if (x >= threshold) return x % bound;
  }
}

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw std::invalid_argument("Rng::uniform_int: empty range");
  return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do u1 = uniform(); while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
  has_spare_ = true;
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

Seed256 Rng::seed256() {
  Seed256 s{};
  for (int w = 0; w < 4; ++w) {
    const std::uint64_t v = engine_();
    for (int b = 0; b < 8; ++b) s[w * 8 + b] = static_cast<std::uint8_t>(v >> (8 * b));
  }
  return s;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t label) {
  // splitmix64 finaliser over the mixed pair
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (label + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace etcbench
