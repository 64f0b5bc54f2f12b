#include "etcbench/leakage.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "etcbench/metrics.hpp"

namespace etcbench {

BlockTransform BlockTransform::from_index(int index) {
  if (index < 0 || index >= kTransformCount) throw std::invalid_argument("transform index out of range");
  BlockTransform t;
  t.rot_flip = static_cast<std::uint8_t>(index % kRotFlipCodes);
  t.negate = static_cast<std::uint8_t>((index / kRotFlipCodes) % 2);
  t.chan_perm = static_cast<std::uint8_t>(index / (2 * kRotFlipCodes));
  return t;
}

const std::array<BlockTransform, kTransformCount>& all_transforms() {
  static const auto table = [] {
    std::array<BlockTransform, kTransformCount> t{};
    for (int i = 0; i < kTransformCount; ++i) t[i] = BlockTransform::from_index(i);
    return t;
  }();
  return table;
}

// The three factors act on pixel position, sample value and channel index
// respectively, so the group is their direct product.
BlockTransform compose(const BlockTransform& outer, const BlockTransform& inner) {
  return {static_cast<std::uint8_t>(rot_flip_compose(outer.rot_flip, inner.rot_flip)),
          static_cast<std::uint8_t>(outer.negate ^ inner.negate),
          static_cast<std::uint8_t>(channel_perm_compose(outer.chan_perm, inner.chan_perm))};
}

BlockTransform inverse(const BlockTransform& t) {
  return {static_cast<std::uint8_t>(rot_flip_inverse(t.rot_flip)), t.negate,
          static_cast<std::uint8_t>(channel_perm_inverse(t.chan_perm))};
}

Image apply_transform(const Image& block, const BlockTransform& t) {
  return shuffle_channels(negpos_block(rotate_flip_block(block, t.rot_flip), t.negate), t.chan_perm);
}

CanonicalBlock canonicalize_block(const Image& block) {
  if (block.width() != block.height()) throw ImageError("canonicalize_block: block must be square");
  const int size = block.width();
  const auto src = block.samples();
  const std::size_t total = src.size();

  // Progressive elimination: sample k of every surviving variant is computed
  // lazily and only the variants attaining the minimum survive.
  std::array<const std::vector<std::uint32_t>*, kRotFlipCodes> maps{};
  for (int c = 0; c < kRotFlipCodes; ++c) maps[c] = &rot_flip_source_map(size, c);
  std::array<int, kTransformCount> alive{};
  std::iota(alive.begin(), alive.end(), 0);
  int alive_count = kTransformCount;
  const auto& transforms = all_transforms();

  for (std::size_t k = 0; k < total && alive_count > 1; ++k) {
    const std::size_t pixel = k / kChannels;
    const int channel = static_cast<int>(k % kChannels);
    std::array<std::uint8_t, kTransformCount> value{};
    std::uint8_t best = 0xFF;
    for (int a = 0; a < alive_count; ++a) {
      const BlockTransform& t = transforms[alive[a]];
      const std::size_t from = static_cast<std::size_t>((*maps[t.rot_flip])[pixel]) * kChannels +
                               channel_perm_table(t.chan_perm)[channel];
      const std::uint8_t v = t.negate ? static_cast<std::uint8_t>(src[from] ^ 0xFF) : src[from];
      value[a] = v;
      best = std::min(best, v);
    }
    int kept = 0;
    for (int a = 0; a < alive_count; ++a)
      if (value[a] == best) alive[kept++] = alive[a];
    alive_count = kept;
  }
  // Survivors all produce the same bytes; alive[] stays in ascending index order.
  const BlockTransform t = transforms[alive[0]];
  return {apply_transform(block, t), t};
}

std::array<double, 6> CorrelationProfile::sorted() const {
  std::array<double, 6> v{horizontal[0], horizontal[1], horizontal[2], vertical[0], vertical[1], vertical[2]};
  std::sort(v.begin(), v.end());
  return v;
}

namespace {

struct PairMoments {
  double n = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  void add(double x, double y) {
    n += 1;
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  double correlation() const {
    const double vx = n * sxx - sx * sx;
    const double vy = n * syy - sy * sy;
    if (vx <= 0 || vy <= 0) return 0.0;
    return (n * sxy - sx * sy) / std::sqrt(vx * vy);
  }
};

}  // namespace

CorrelationProfile correlation_profile(const Image& block) {
  if (block.width() < 2 || block.height() < 2) throw ImageError("correlation_profile: block must be at least 2x2");
  CorrelationProfile p;
  for (int c = 0; c < kChannels; ++c) {
    PairMoments h, v;
    for (int y = 0; y < block.height(); ++y)
      for (int x = 0; x + 1 < block.width(); ++x) h.add(block.at(x, y, c), block.at(x + 1, y, c));
    for (int y = 0; y + 1 < block.height(); ++y)
      for (int x = 0; x < block.width(); ++x) v.add(block.at(x, y, c), block.at(x, y + 1, c));
    p.horizontal[c] = h.correlation();
    p.vertical[c] = v.correlation();
  }
  return p;
}

std::array<double, 3 * kHistogramBins> block_histogram(const Image& block) {
  std::array<double, 3 * kHistogramBins> h{};
  const auto s = block.samples();
  for (std::size_t i = 0; i < s.size(); ++i) h[(i % kChannels) * kHistogramBins + s[i] / (256 / kHistogramBins)] += 1.0;
  const double per_channel = static_cast<double>(s.size() / kChannels);
  for (auto& v : h) v /= per_channel;
  return h;
}

std::vector<double> StyleDescriptor::vector() const {
  std::vector<double> v(histogram.begin(), histogram.end());
  for (double m : block_mean) v.push_back(m / 255.0);
  for (double var : block_variance) v.push_back(std::sqrt(var) / 255.0);
  return v;
}

StyleDescriptor style_descriptor(const Image& img, int block_size) {
  const BlockGrid grid = split_blocks(img, block_size, block_size);
  // Integer accumulators: the result must not depend on block order.
  std::array<std::uint64_t, 3 * kHistogramBins> counts{};
  std::array<std::uint64_t, 3> sum{};
  std::array<std::uint64_t, 3> var_numerator{};  // sum over blocks of (m*sum x^2 - (sum x)^2)
  const std::uint64_t m = static_cast<std::uint64_t>(block_size) * block_size;
  for (const Image& b : grid.blocks) {
    const Image canon = canonicalize_block(b).block;
    const auto s = canon.samples();
    std::array<std::uint64_t, 3> bs{}, bss{};
    for (std::size_t i = 0; i < s.size(); ++i) {
      const int c = static_cast<int>(i % kChannels);
      counts[c * kHistogramBins + s[i] / (256 / kHistogramBins)] += 1;
      bs[c] += s[i];
      bss[c] += static_cast<std::uint64_t>(s[i]) * s[i];
    }
    for (int c = 0; c < 3; ++c) {
      sum[c] += bs[c];
      var_numerator[c] += m * bss[c] - bs[c] * bs[c];
    }
  }
  StyleDescriptor d;
  d.blocks = grid.size();
  const double n = static_cast<double>(grid.size());
  const double per_channel = n * static_cast<double>(m);
  for (std::size_t i = 0; i < counts.size(); ++i) d.histogram[i] = static_cast<double>(counts[i]) / per_channel;
  for (int c = 0; c < 3; ++c) {
    d.block_mean[c] = static_cast<double>(sum[c]) / per_channel;
    d.block_variance[c] = static_cast<double>(var_numerator[c]) / (static_cast<double>(m) * static_cast<double>(m) * n);
  }
  return d;
}

double descriptor_distance(const StyleDescriptor& a, const StyleDescriptor& b) {
  const auto va = a.vector();
  const auto vb = b.vector();
  double s = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) s += (va[i] - vb[i]) * (va[i] - vb[i]);
  return std::sqrt(s);
}

double correlation_preservation(const Image& a, const Image& b, int block_size) {
  const BlockGrid ga = split_blocks(a, block_size, block_size);
  const BlockGrid gb = split_blocks(b, block_size, block_size);
  if (ga.size() != gb.size()) throw ImageError("correlation_preservation: block counts differ");
  auto profiles = [](const BlockGrid& g) {
    std::vector<std::array<double, 6>> out;
    out.reserve(g.size());
    for (const auto& blk : g.blocks) out.push_back(correlation_profile(blk).sorted());
    std::sort(out.begin(), out.end());
    return out;
  };
  const auto pa = profiles(ga);
  const auto pb = profiles(gb);
  double diff = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i)
    for (int k = 0; k < 6; ++k) diff += std::abs(pa[i][k] - pb[i][k]);
  // correlations live in [-1, 1], so the per-entry difference is at most 2
  return 1.0 - diff / (2.0 * 6.0 * static_cast<double>(pa.size()));
}

nlohmann::json leakage_report(const Image& plain, const Image& enc, const LeakageOptions& options) {
  const int b = options.block_size;
  const int w = plain.width() / b * b;
  const int h = plain.height() / b * b;
  const Image plain_c = crop(plain, 0, 0, w, h);
  if (enc.width() != w || enc.height() != h) {
    throw ImageError("leakage_report: ciphertext " + std::to_string(enc.width()) + "x" + std::to_string(enc.height()) +
                     " does not match cropped plaintext " + std::to_string(w) + "x" + std::to_string(h));
  }
  const StyleDescriptor dp = style_descriptor(plain_c, b);
  const StyleDescriptor de = style_descriptor(enc, b);

  nlohmann::json report;
  report["block_size"] = b;
  report["blocks"] = dp.blocks;
  report["plain_descriptor"] = dp.vector();
  report["enc_descriptor"] = de.vector();
  report["descriptor_distance"] = descriptor_distance(dp, de);
  report["correlation_preservation"] = correlation_preservation(plain_c, enc, b);
  report["pixel_mse"] = mse(plain_c, enc);

  MasterKey key;
  Rng rng(options.analysis_seed);
  key.seed = rng.seed256();
  const std::vector<std::pair<std::string, StepMask>> masks{
      {"1", StepMask::parse("1")},    {"2", StepMask::parse("2")}, {"3", StepMask::parse("3")},
      {"4", StepMask::parse("4")},    {"1,2,3,4", StepMask::all()},
  };
  nlohmann::json table = nlohmann::json::array();
  for (const auto& [name, mask] : masks) {
    const Image e = encrypt_steps(plain_c, key, b, mask);
    table.push_back({{"steps", name},
                     {"descriptor_distance", descriptor_distance(dp, style_descriptor(e, b))},
                     {"correlation_preservation", correlation_preservation(plain_c, e, b)},
                     {"pixel_mse", mse(plain_c, e)}});
  }
  report["per_step"] = table;
  return report;
}

}  // namespace etcbench
