#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "etcbench/image.hpp"
#include "etcbench/random.hpp"

namespace etcbench {

/// JPEG-compatible block edge length.
inline constexpr int kDefaultBlockSize = 16;

inline constexpr int kRotFlipCodes = 8;
inline constexpr int kChannelPermCodes = 6;

/// Secret key. The four per-step streams are derived from `seed` unless
/// explicit sub-seeds are given, in which case sub-seed i keys step i+1.
struct MasterKey {
  Seed256 seed{};
  std::optional<std::array<Seed256, 4>> subkeys;

  friend bool operator==(const MasterKey&, const MasterKey&) = default;
};

MasterKey load_key(const std::filesystem::path& path);
void save_key(const MasterKey& key, const std::filesystem::path& path);

/// Per-image randomness expanded from a MasterKey for n blocks. Codes are
/// indexed by output (ciphertext) block position.
struct KeyMaterial {
  std::vector<std::uint32_t> permutation;  // output block i <- input block permutation[i]
  std::vector<std::uint8_t> rot_flip;      // [0, 8)
  std::vector<std::uint8_t> negate;        // r(i) in {0, 1}
  std::vector<std::uint8_t> chan_perm;     // [0, 6)

  std::size_t size() const { return permutation.size(); }

  /// Material that leaves every block untouched.
  static KeyMaterial identity(std::size_t n);

  friend bool operator==(const KeyMaterial&, const KeyMaterial&) = default;
};

KeyMaterial derive_key_material(const MasterKey& key, std::size_t n);

bool is_permutation(std::span<const std::uint32_t> perm);
std::vector<std::uint32_t> invert_permutation(std::span<const std::uint32_t> perm);

// ---------------------------------------------------------------------------
// Per-block primitives. Blocks are square Images.

/// Dihedral transform: code = rotation + 4 * mirror, applied as
/// rotate_cw^rotation(mirror^mirror(block)); mirror is left-right.
Image rotate_flip_block(const Image& block, int code);
int rot_flip_inverse(int code);
/// Code of (outer after inner).
int rot_flip_compose(int outer, int inner);
/// For each output pixel (row-major) of a size x size block, the input pixel
/// index it is copied from under `code`.
const std::vector<std::uint32_t>& rot_flip_source_map(int size, int code);

/// Intensity inversion p' = p xor 255 on all three channels when r = 1.
Image negpos_block(const Image& block, int r);

/// Output channel k takes input channel channel_perm_table(code)[k].
const std::array<std::uint8_t, 3>& channel_perm_table(int code);
int channel_perm_inverse(int code);
int channel_perm_compose(int outer, int inner);
Image shuffle_channels(const Image& block, int code);

BlockGrid permute_blocks(const BlockGrid& grid, std::span<const std::uint32_t> perm);

// ---------------------------------------------------------------------------
// Whole-image encryption.

/// Subset of the four encryption steps.
struct StepMask {
  bool permute = true;
  bool rot_flip = true;
  bool negpos = true;
  bool channels = true;

  static StepMask all() { return {}; }
  static StepMask none() { return {false, false, false, false}; }
  /// Parses a list such as "1,3" or "1234".
  static StepMask parse(const std::string& text);
  bool any() const { return permute || rot_flip || negpos || channels; }
  std::string to_string() const;

  friend bool operator==(const StepMask&, const StepMask&) = default;
};

Image encrypt(const Image& img, const MasterKey& key, int block_size = kDefaultBlockSize);
Image decrypt(const Image& img, const MasterKey& key, int block_size = kDefaultBlockSize);
Image encrypt_steps(const Image& img, const MasterKey& key, int block_size, StepMask mask);
Image decrypt_steps(const Image& img, const MasterKey& key, int block_size, StepMask mask);

/// Encryption with explicit key material; this is how tests force identity
/// streams. Material size must equal the block count.
Image encrypt_with(const Image& img, const KeyMaterial& material, int block_size,
                   StepMask mask = StepMask::all());
Image decrypt_with(const Image& img, const KeyMaterial& material, int block_size,
                   StepMask mask = StepMask::all());

// ---------------------------------------------------------------------------
// Key space n! * 8^n * 2^n * 6^n.

struct KeySpace {
  std::uint64_t n = 0;
  boost::multiprecision::cpp_int cardinality;
  double bits = 0.0;
};

KeySpace keyspace(std::uint64_t n);

}  // namespace etcbench
