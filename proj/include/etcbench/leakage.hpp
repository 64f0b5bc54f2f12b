#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "json.hpp"

#include "etcbench/cipher.hpp"
#include "etcbench/image.hpp"

namespace etcbench {

inline constexpr int kTransformCount = kRotFlipCodes * 2 * kChannelPermCodes;  // 96
inline constexpr int kHistogramBins = 32;

/// One element of the per-block transform group generated by encryption
/// steps 2-4 (rotation/flip x negation x channel order).
struct BlockTransform {
  std::uint8_t rot_flip = 0;
  std::uint8_t negate = 0;
  std::uint8_t chan_perm = 0;

  /// Dense index in [0, 96).
  int index() const { return rot_flip + kRotFlipCodes * (negate + 2 * chan_perm); }
  static BlockTransform from_index(int index);

  friend bool operator==(const BlockTransform&, const BlockTransform&) = default;
};

const std::array<BlockTransform, kTransformCount>& all_transforms();
/// outer after inner.
BlockTransform compose(const BlockTransform& outer, const BlockTransform& inner);
BlockTransform inverse(const BlockTransform& t);

/// Rotation/flip, then negation, then channel shuffle.
Image apply_transform(const Image& block, const BlockTransform& t);

struct CanonicalBlock {
  Image block;
  BlockTransform transform;  // apply_transform(input, transform) == block
};

/// Lexicographically smallest member of the block's 96-element orbit.
CanonicalBlock canonicalize_block(const Image& block);

/// Pearson correlation of adjacent sample pairs, per channel, horizontal then
/// vertical. A constant channel has correlation 0.
struct CorrelationProfile {
  std::array<double, 3> horizontal{};
  std::array<double, 3> vertical{};

  std::array<double, 6> sorted() const;
};

CorrelationProfile correlation_profile(const Image& block);

/// Per-channel 32-bin histogram of a block, each channel normalised to sum 1.
std::array<double, 3 * kHistogramBins> block_histogram(const Image& block);

/// Global style statistics pooled over canonicalised blocks.
struct StyleDescriptor {
  std::array<double, 3 * kHistogramBins> histogram{};  // per-channel normalised
  std::array<double, 3> block_mean{};                  // mean of canonical block means
  std::array<double, 3> block_variance{};              // mean of canonical block variances
  std::size_t blocks = 0;

  /// Concatenated feature vector (histogram, mean/255, sqrt(variance)/255).
  std::vector<double> vector() const;
  friend bool operator==(const StyleDescriptor&, const StyleDescriptor&) = default;
};

StyleDescriptor style_descriptor(const Image& img, int block_size);
double descriptor_distance(const StyleDescriptor& a, const StyleDescriptor& b);

struct LeakageOptions {
  int block_size = kDefaultBlockSize;
  std::uint64_t analysis_seed = 0;  // key seed for the per-step table
};

/// Scores what the ciphertext still reveals about the plaintext. The per-step
/// table encrypts `plain` with each single step (and all four) under a key
/// derived from `analysis_seed`.
nlohmann::json leakage_report(const Image& plain, const Image& enc, const LeakageOptions& options);

/// Mean absolute difference between the sorted per-block correlation profile
/// multisets of two images, mapped to a [0, 1] preservation score.
double correlation_preservation(const Image& a, const Image& b, int block_size);

}  // namespace etcbench
