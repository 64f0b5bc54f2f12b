#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "etcbench/cipher.hpp"
#include "etcbench/leakage.hpp"
#include "etcbench/random.hpp"

using namespace etcbench;

namespace {

Image random_image(int w, int h, Rng& rng) {
  Image img(w, h);
  for (auto& s : img.samples()) s = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

MasterKey random_key(Rng& rng) {
  MasterKey k;
  k.seed = rng.seed256();
  return k;
}

Image block2x2(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
  Image img(2, 2);
  const std::uint8_t v[] = {a, b, c, d};
  for (int i = 0; i < 4; ++i)
    for (int ch = 0; ch < 3; ++ch) img.samples()[i * 3 + ch] = v[i];
  return img;
}

}  // namespace

TEST(KeyMaterial, DeterministicAndWellFormed) {
  Rng rng(1);
  const MasterKey k = random_key(rng);
  const KeyMaterial a = derive_key_material(k, 256);
  EXPECT_EQ(a, derive_key_material(k, 256));
  EXPECT_TRUE(is_permutation(a.permutation));
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_LT(a.rot_flip[i], kRotFlipCodes);
    EXPECT_LT(a.negate[i], 2);
    EXPECT_LT(a.chan_perm[i], kChannelPermCodes);
  }
  const KeyMaterial one = derive_key_material(k, 1);
  EXPECT_EQ(one.permutation, std::vector<std::uint32_t>{0});
  EXPECT_EQ(one.rot_flip.size(), 1u);
}

TEST(KeyMaterial, NegateBitIsFair) {
  Rng rng(2);
  const KeyMaterial m = derive_key_material(random_key(rng), 100000);
  double mean = 0;
  for (auto b : m.negate) mean += b;
  mean /= 100000.0;
  EXPECT_GE(mean, 0.49);
  EXPECT_LE(mean, 0.51);
}

TEST(KeyMaterial, PermutationsAreUniformOnThreeBlocks) {
  Rng rng(3);
  std::map<std::vector<std::uint32_t>, int> counts;
  const int trials = 6000;
  for (int i = 0; i < trials; ++i) counts[derive_key_material(random_key(rng), 3).permutation]++;
  ASSERT_EQ(counts.size(), 6u);
  double chi2 = 0;
  for (const auto& [p, c] : counts) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
  EXPECT_LT(chi2, 20.5);  // chi-square, 5 dof, p = 0.001
}

TEST(KeyMaterial, SubkeysDriveIndividualSteps) {
  Rng rng(4);
  MasterKey a = random_key(rng);
  std::array<Seed256, 4> subs{rng.seed256(), rng.seed256(), rng.seed256(), rng.seed256()};
  a.subkeys = subs;
  MasterKey b = a;
  (*b.subkeys)[2] = rng.seed256();  // K3 only
  const KeyMaterial ma = derive_key_material(a, 64), mb = derive_key_material(b, 64);
  EXPECT_EQ(ma.permutation, mb.permutation);
  EXPECT_EQ(ma.rot_flip, mb.rot_flip);
  EXPECT_NE(ma.negate, mb.negate);
  EXPECT_EQ(ma.chan_perm, mb.chan_perm);
}

TEST(KeyFile, SaveLoadRoundTrip) {
  Rng rng(5);
  MasterKey k = random_key(rng);
  const auto path = std::filesystem::temp_directory_path() / "etcbench_unit_key.json";
  save_key(k, path);
  EXPECT_EQ(load_key(path), k);
  k.subkeys = std::array<Seed256, 4>{rng.seed256(), rng.seed256(), rng.seed256(), rng.seed256()};
  save_key(k, path);
  EXPECT_EQ(load_key(path), k);
}

TEST(PermuteBlocks, IdentitySwapAndInverse) {
  Rng rng(6);
  const BlockGrid g = split_blocks(random_image(32, 16, rng), 16, 16);
  const std::vector<std::uint32_t> id{0, 1}, swap{1, 0};
  EXPECT_EQ(merge_blocks(permute_blocks(g, id)), merge_blocks(g));
  const BlockGrid s = permute_blocks(g, swap);
  EXPECT_EQ(s.blocks[0], g.blocks[1]);
  EXPECT_EQ(s.blocks[1], g.blocks[0]);

  const BlockGrid big = split_blocks(random_image(64, 64, rng), 16, 16);
  const auto perm = derive_key_material(random_key(rng), big.size()).permutation;
  EXPECT_EQ(merge_blocks(permute_blocks(permute_blocks(big, perm), invert_permutation(perm))), merge_blocks(big));
  EXPECT_THROW(permute_blocks(g, std::vector<std::uint32_t>{0, 0}), std::invalid_argument);
}

TEST(RotateFlip, HandEvaluatedRotation) {
  // [[a,b],[c,d]] rotated 90 degrees clockwise is [[c,a],[d,b]].
  EXPECT_EQ(rotate_flip_block(block2x2(1, 2, 3, 4), 1), block2x2(3, 1, 4, 2));
  // Mirror: [[b,a],[d,c]].
  EXPECT_EQ(rotate_flip_block(block2x2(1, 2, 3, 4), 4), block2x2(2, 1, 4, 3));
}

TEST(RotateFlip, GroupTableIsConsistent) {
  Rng rng(7);
  const Image b = random_image(8, 8, rng);
  EXPECT_EQ(rotate_flip_block(b, 0), b);
  std::set<std::vector<std::uint8_t>> distinct;
  for (int c = 0; c < kRotFlipCodes; ++c) {
    const Image t = rotate_flip_block(b, c);
    distinct.insert(t.buffer());
    EXPECT_EQ(rotate_flip_block(t, rot_flip_inverse(c)), b) << c;
    for (int d = 0; d < kRotFlipCodes; ++d)
      EXPECT_EQ(rotate_flip_block(t, d), rotate_flip_block(b, rot_flip_compose(d, c))) << c << "," << d;
  }
  EXPECT_EQ(distinct.size(), 8u);
  EXPECT_THROW(rotate_flip_block(Image(4, 2), 1), ImageError);
}

TEST(NegPos, Examples) {
  Image p(1, 1);
  p.samples()[0] = 0;
  p.samples()[1] = 100;
  p.samples()[2] = 200;
  const Image n = negpos_block(p, 1);
  EXPECT_EQ(n.at(0, 0, 0), 255);
  EXPECT_EQ(n.at(0, 0, 1), 155);
  EXPECT_EQ(n.at(0, 0, 2), 55);
  EXPECT_EQ(negpos_block(p, 0).at(0, 0, 1), 100);
}

TEST(ShuffleChannels, ExampleAndInverses) {
  Image px(1, 1);
  px.samples()[0] = 10;
  px.samples()[1] = 20;
  px.samples()[2] = 30;
  const Image g = shuffle_channels(px, 1);  // (R,G,B) -> (G,R,B)
  EXPECT_EQ(g.buffer(), (std::vector<std::uint8_t>{20, 10, 30}));
  EXPECT_EQ(shuffle_channels(px, 0), px);
  std::set<std::vector<std::uint8_t>> distinct;
  for (int c = 0; c < kChannelPermCodes; ++c) {
    const Image t = shuffle_channels(px, c);
    distinct.insert(t.buffer());
    EXPECT_EQ(shuffle_channels(t, channel_perm_inverse(c)), px);
    for (int d = 0; d < kChannelPermCodes; ++d)
      EXPECT_EQ(shuffle_channels(t, d), shuffle_channels(px, channel_perm_compose(d, c)));
  }
  EXPECT_EQ(distinct.size(), 6u);
}

TEST(Encrypt, IdentityMaterialIsIdentity) {
  Rng rng(8);
  const Image img = random_image(64, 48, rng);
  EXPECT_EQ(encrypt_with(img, KeyMaterial::identity(12), 16), img);
}

TEST(Encrypt, SingleBlockIsComposedBlockOps) {
  Rng rng(9);
  const Image img = random_image(16, 16, rng);
  const MasterKey k = random_key(rng);
  const KeyMaterial m = derive_key_material(k, 1);
  const Image expect = shuffle_channels(negpos_block(rotate_flip_block(img, m.rot_flip[0]), m.negate[0]), m.chan_perm[0]);
  EXPECT_EQ(encrypt(img, k, 16), expect);
}

TEST(Encrypt, BlocksMatchPlainUnderPermutationCanonically) {
  Rng rng(10);
  const Image img = random_image(64, 64, rng);
  const MasterKey k = random_key(rng);
  const KeyMaterial m = derive_key_material(k, 16);
  const BlockGrid p = split_blocks(img, 16, 16), e = split_blocks(encrypt(img, k), 16, 16);
  for (std::size_t i = 0; i < 16; ++i)
    EXPECT_EQ(canonicalize_block(e.blocks[i]).block, canonicalize_block(p.blocks[m.permutation[i]]).block);
}

TEST(Encrypt, RoundTripProperty) {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const int b = i % 2 == 0 ? 8 : 16;
    const Image img = random_image(b * rng.uniform_int(1, 6), b * rng.uniform_int(1, 6), rng);
    const MasterKey k = random_key(rng);
    EXPECT_EQ(decrypt(encrypt(img, k, b), k, b), img);
  }
}

TEST(Encrypt, CropsNonDivisibleInput) {
  Rng rng(12);
  const Image img = random_image(40, 20, rng);
  const MasterKey k = random_key(rng);
  const Image e = encrypt(img, k, 16);
  EXPECT_EQ(e.width(), 32);
  EXPECT_EQ(e.height(), 16);
  EXPECT_EQ(decrypt(e, k, 16), crop(img, 0, 0, 32, 16));
  EXPECT_THROW(decrypt(img, k, 16), ImageError);
  EXPECT_THROW(encrypt(Image(8, 8), k, 16), ImageError);
}

TEST(Encrypt, WrongKeyDoesNotDecrypt) {
  Rng rng(13);
  for (int i = 0; i < 20; ++i) {
    const Image img = random_image(32, 32, rng);
    const MasterKey k1 = random_key(rng), k2 = random_key(rng);
    EXPECT_NE(decrypt(encrypt(img, k1), k2), img);
  }
}

TEST(Encrypt, DecryptThenReencryptComposes) {
  Rng rng(14);
  const Image img = random_image(48, 32, rng);
  const MasterKey k1 = random_key(rng), k2 = random_key(rng);
  const Image c1 = encrypt(img, k1);
  EXPECT_EQ(encrypt(decrypt(c1, k2), k2), c1);
}

TEST(Encrypt, Deterministic) {
  Rng rng(15);
  const Image img = random_image(64, 64, rng);
  const MasterKey k = random_key(rng);
  EXPECT_EQ(encrypt(img, k), encrypt(img, k));
}

TEST(EncryptSteps, MaskSemantics) {
  Rng rng(16);
  const Image img = random_image(64, 64, rng);
  const MasterKey k = random_key(rng);
  EXPECT_EQ(encrypt_steps(img, k, 16, StepMask::all()), encrypt(img, k));
  EXPECT_THROW(encrypt_steps(img, k, 16, StepMask::none()), std::invalid_argument);
  EXPECT_THROW(StepMask::parse("5"), std::invalid_argument);
  EXPECT_EQ(StepMask::parse("1,3"), (StepMask{true, false, true, false}));

  // Step 3 alone: positions fixed, each sample p or 255 - p, one choice per block.
  const Image n = encrypt_steps(img, k, 16, StepMask::parse("3"));
  const BlockGrid gp = split_blocks(img, 16, 16), gn = split_blocks(n, 16, 16);
  for (std::size_t b = 0; b < gp.size(); ++b) {
    const bool same = gn.blocks[b] == gp.blocks[b];
    const bool inverted = gn.blocks[b] == negpos_block(gp.blocks[b], 1);
    EXPECT_TRUE(same || inverted);
  }
  for (const char* mask : {"1", "2", "3", "4", "1,3", "2,4", "1,2,3,4"}) {
    const StepMask m = StepMask::parse(mask);
    EXPECT_EQ(decrypt_steps(encrypt_steps(img, k, 16, m), k, 16, m), img) << mask;
  }
}

TEST(KeySpace, SmallValuesAndBits) {
  EXPECT_EQ(keyspace(1).cardinality, 96);
  EXPECT_EQ(keyspace(2).cardinality, 18432);
  EXPECT_EQ(keyspace(3).cardinality, 6 * 96 * 96 * 96);
  const KeySpace k = keyspace(256);
  EXPECT_GT(k.bits, 256.0);
  EXPECT_NEAR(k.bits, 3369.8, 0.1);
  EXPECT_NEAR(keyspace(3).bits, std::log2(6.0 * 96 * 96 * 96), 1e-9);
}
