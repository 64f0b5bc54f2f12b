#include <gtest/gtest.h>

#include <set>

#include "etcbench/cipher.hpp"
#include "etcbench/corpus.hpp"
#include "etcbench/leakage.hpp"
#include "etcbench/random.hpp"

using namespace etcbench;

namespace {

Image random_block(int s, Rng& rng) {
  Image img(s, s);
  for (auto& v : img.samples()) v = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

}  // namespace

TEST(TransformGroup, AxiomsByExhaustiveTable) {
  const auto& all = all_transforms();
  std::set<int> idx;
  for (int i = 0; i < kTransformCount; ++i) {
    EXPECT_EQ(all[i].index(), i);
    EXPECT_EQ(BlockTransform::from_index(i), all[i]);
    idx.insert(all[i].index());
  }
  EXPECT_EQ(idx.size(), 96u);
  const BlockTransform e{};
  Rng rng(1);
  const Image b = random_block(4, rng);
  for (const auto& s : all) {
    EXPECT_EQ(compose(s, e), s);
    EXPECT_EQ(compose(e, s), s);
    EXPECT_EQ(compose(s, inverse(s)), e);
    EXPECT_EQ(compose(inverse(s), s), e);
    for (const auto& t : all) {
      // Composition agrees with applying the transforms in sequence.
      ASSERT_EQ(apply_transform(apply_transform(b, t), s), apply_transform(b, compose(s, t)));
    }
  }
}

TEST(TransformGroup, AssociativeOnSample) {
  Rng rng(2);
  const auto& all = all_transforms();
  for (int i = 0; i < 500; ++i) {
    const auto& a = all[rng.below(96)];
    const auto& b = all[rng.below(96)];
    const auto& c = all[rng.below(96)];
    EXPECT_EQ(compose(a, compose(b, c)), compose(compose(a, b), c));
  }
}

TEST(Canonicalize, UniformGrayGoesToDarkerNegation) {
  const Image gray(16, 16, 128);
  EXPECT_EQ(canonicalize_block(gray).block, Image(16, 16, 127));
  EXPECT_EQ(canonicalize_block(Image(16, 16, 100)).block, Image(16, 16, 100));
}

TEST(Canonicalize, TransformRecordReproducesCanonical) {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const Image b = random_block(8, rng);
    const CanonicalBlock c = canonicalize_block(b);
    EXPECT_EQ(apply_transform(b, c.transform), c.block);
  }
}

TEST(Canonicalize, IsLexicographicMinimumOfOrbit) {
  Rng rng(4);
  for (int i = 0; i < 30; ++i) {
    const Image b = random_block(6, rng);
    std::vector<std::uint8_t> best = b.buffer();
    for (const auto& t : all_transforms()) best = std::min(best, apply_transform(b, t).buffer());
    EXPECT_EQ(canonicalize_block(b).block.buffer(), best);
  }
}

TEST(Canonicalize, OrbitInvariance) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const Image b = i % 2 ? random_block(16, rng) : smooth_image(16, rng.next());
    const Image c = canonicalize_block(b).block;
    for (const auto& t : all_transforms()) ASSERT_EQ(canonicalize_block(apply_transform(b, t)).block, c);
  }
}

TEST(Correlation, ConstantChannelIsZeroAndRampIsOne) {
  const CorrelationProfile flat = correlation_profile(Image(8, 8, 9));
  for (double v : flat.sorted()) EXPECT_EQ(v, 0.0);
  Image ramp(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      for (int c = 0; c < 3; ++c) ramp.at(x, y, c) = static_cast<std::uint8_t>(x * 10 + y * 20);
  const CorrelationProfile p = correlation_profile(ramp);
  for (int c = 0; c < 3; ++c) {
    EXPECT_GT(p.horizontal[c], 0.5);
    EXPECT_GT(p.vertical[c], 0.5);
  }
}

TEST(Correlation, PreservedUnderAllTransforms) {
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const Image b = i % 2 ? random_block(16, rng) : smooth_image(16, rng.next());
    const auto ref = correlation_profile(b).sorted();
    for (const auto& t : all_transforms()) {
      const auto got = correlation_profile(apply_transform(b, t)).sorted();
      for (int k = 0; k < 6; ++k) ASSERT_NEAR(got[k], ref[k], 1e-9);
    }
  }
}

TEST(StyleDescriptor, InvariantUnderEncryption) {
  Rng rng(7);
  const Image face = render_toy_face(sample_toy_face(3), 64);
  const StyleDescriptor ref = style_descriptor(face, 16);
  for (int i = 0; i < 20; ++i) {
    MasterKey k;
    k.seed = rng.seed256();
    const StyleDescriptor d = style_descriptor(encrypt(face, k), 16);
    EXPECT_EQ(d, ref);
    EXPECT_EQ(descriptor_distance(d, ref), 0.0);
  }
  EXPECT_GT(descriptor_distance(ref, style_descriptor(render_toy_face(sample_toy_face(4), 64), 16)), 0.0);
}

TEST(Histogram, NormalisedPerChannel) {
  Rng rng(8);
  const auto h = block_histogram(random_block(16, rng));
  for (int c = 0; c < 3; ++c) {
    double s = 0;
    for (int b = 0; b < kHistogramBins; ++b) s += h[c * kHistogramBins + b];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(LeakageReport, HasScoresAndStepTable) {
  Rng rng(9);
  const Image face = render_toy_face(sample_toy_face(5), 64);
  MasterKey k;
  k.seed = rng.seed256();
  const auto report = leakage_report(face, encrypt(face, k), LeakageOptions{16, 1});
  EXPECT_EQ(report.at("descriptor_distance").get<double>(), 0.0);
  EXPECT_NEAR(report.at("correlation_preservation").get<double>(), 1.0, 1e-9);
  EXPECT_EQ(report.at("per_step").size(), 5u);
}
