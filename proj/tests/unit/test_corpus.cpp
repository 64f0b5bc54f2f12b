#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "etcbench/corpus.hpp"

using namespace etcbench;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "etcbench_unit" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(ToyFace, DeterministicFromSeed) {
  EXPECT_EQ(sample_toy_face(42), sample_toy_face(42));
  EXPECT_EQ(render_toy_face(sample_toy_face(42), 64), render_toy_face(sample_toy_face(42), 64));
  EXPECT_NE(render_toy_face(sample_toy_face(42), 64), render_toy_face(sample_toy_face(43), 64));
  EXPECT_THROW(render_toy_face(sample_toy_face(1), 40), std::invalid_argument);
}

TEST(ToyFace, CornerShowsBackgroundAndCentreShowsSkin) {
  const ToyFaceParams p = sample_toy_face(7);
  const Image img = render_toy_face(p, 64);
  EXPECT_NEAR(img.at(1, 1, 0), p.background.r, 4);
  EXPECT_NEAR(img.at(1, 1, 2), p.background.b, 4);
  const int cx = static_cast<int>(p.face_cx * 64 + 12), cy = static_cast<int>((p.face_cy + 0.05) * 64);
  EXPECT_NEAR(img.at(cx, cy, 0), p.skin.r, 4);
}

TEST(ToyFace, HairPaletteIsUniform) {
  std::vector<int> counts(kHairPalette, 0);
  const int n = 3000;
  for (int i = 0; i < n; ++i) counts[sample_toy_face(1000 + i).hair_index]++;
  double chi2 = 0;
  const double e = static_cast<double>(n) / kHairPalette;
  for (int c : counts) chi2 += (c - e) * (c - e) / e;
  EXPECT_LT(chi2, 20.5);  // 5 dof, p = 0.001
}

TEST(Corpus, SplitsDisjointExhaustiveAndSized) {
  const ToyCorpus c = generate_toy_corpus(150, 32, 9);
  const auto tr = c.indices(Split::train), te = c.indices(Split::test);
  EXPECT_EQ(tr.size() + te.size(), 150u);
  EXPECT_EQ(te.size(), 10u);
  std::vector<int> hit(150, 0);
  for (auto i : tr) hit[i]++;
  for (auto i : te) hit[i]++;
  for (int h : hit) EXPECT_EQ(h, 1);
}

TEST(Manifest, RegeneratesBitExactly) {
  const fs::path d = fresh_dir("gen");
  const DatasetManifest m = gen_toy_faces(12, 32, 5, d);
  const DatasetManifest loaded = load_manifest(d / "manifest.json");
  ASSERT_EQ(loaded.entries.size(), 12u);
  const ToyCorpus again = generate_toy_corpus(12, 32, 5);
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(load_image(loaded.resolve(loaded.entries[i].plain)), again.images[i]);
    EXPECT_EQ(*loaded.entries[i].params, again.params[i]);
    EXPECT_EQ(render_toy_face(*loaded.entries[i].params, 32), again.images[i]);
    EXPECT_EQ(loaded.entries[i].split, again.splits[i]);
  }
}

TEST(Manifest, MakePairsFreshKeysDecrypt) {
  const fs::path d = fresh_dir("pairs");
  gen_toy_faces(6, 32, 6, d);
  const DatasetManifest m = make_pairs(load_manifest(d / "manifest.json"), KeyPolicy::fresh, 16, 3);
  std::set<std::string> keys;
  for (const auto& e : m.entries) {
    ASSERT_FALSE(e.encrypted.empty());
    ASSERT_TRUE(e.key_hex.has_value());
    keys.insert(*e.key_hex);
    MasterKey k;
    k.seed = seed_from_hex(*e.key_hex);
    EXPECT_EQ(decrypt(load_image(m.resolve(e.encrypted)), k, 16), load_image(m.resolve(e.plain)));
  }
  EXPECT_EQ(keys.size(), 6u);
  const DatasetManifest fixed = make_pairs(m, KeyPolicy::fixed, 16, 3);
  std::set<std::string> one;
  for (const auto& e : fixed.entries) one.insert(*e.key_hex);
  EXPECT_EQ(one.size(), 1u);
}

TEST(Manifest, IngestDirectory) {
  const fs::path src = fresh_dir("ingest_src"), dst = fresh_dir("ingest_dst");
  write_image(smooth_image(40, 1), src / "b.png");
  write_image(crop(smooth_image(64, 2), 0, 0, 64, 48), src / "a.ppm");
  {
    std::ofstream junk(src / "notes.txt");
    junk << "not an image";
  }
  const DatasetManifest m = ingest_directory(src, dst, 32, 0.5, 1);
  ASSERT_EQ(m.entries.size(), 2u);
  for (const auto& e : m.entries) {
    const Image img = load_image(m.resolve(e.plain));
    EXPECT_EQ(img.width(), 32);
    EXPECT_EQ(img.height(), 32);
    EXPECT_FALSE(e.params.has_value());
  }
}

TEST(SmoothImage, AdjacentPixelsAreClose) {
  const Image img = smooth_image(64, 3);
  double worst = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x + 1 < 64; ++x)
      for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(double(img.at(x, y, c)) - img.at(x + 1, y, c)));
  EXPECT_LT(worst, 40.0);
}
