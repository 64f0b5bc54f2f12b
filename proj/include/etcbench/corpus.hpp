#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "etcbench/cipher.hpp"
#include "etcbench/image.hpp"

namespace etcbench {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr int kSkinPalette = 6;
inline constexpr int kHairPalette = 6;
inline constexpr int kBackgroundPalette = 6;
inline constexpr int kHairShapes = 3;  // short, long, bob

/// Ground-truth style attributes of one synthetic face. Geometry is in
/// fractions of the canvas side.
struct ToyFaceParams {
  Rgb skin, hair, background;
  int skin_index = 0, hair_index = 0, background_index = 0;  // palette entries before jitter
  int hair_shape = 0;
  bool eyeglasses = false;
  double face_cx = 0.5, face_cy = 0.55, face_rx = 0.26, face_ry = 0.33;
  std::uint64_t seed = 0;  // pixel noise

  friend bool operator==(const ToyFaceParams&, const ToyFaceParams&) = default;
};

const std::array<Rgb, kSkinPalette>& skin_palette();
const std::array<Rgb, kHairPalette>& hair_palette();
const std::array<Rgb, kBackgroundPalette>& background_palette();

ToyFaceParams sample_toy_face(std::uint64_t seed);
Image render_toy_face(const ToyFaceParams& params, int size);

/// Low-frequency random colour field; adjacent blocks join seamlessly.
Image smooth_image(int size, std::uint64_t seed);

enum class Split { train, test };
const char* to_string(Split s);

struct ManifestEntry {
  std::string plain;                   // path relative to the manifest directory
  std::optional<ToyFaceParams> params;
  Split split = Split::train;
  std::string encrypted;               // empty until pairs are made
  std::optional<std::string> key_hex;  // recorded for evaluation only
};

struct DatasetManifest {
  int image_size = 0;
  std::uint64_t corpus_seed = 0;
  int block_size = 0;  // set once pairs exist
  std::string key_policy;
  std::vector<ManifestEntry> entries;
  std::filesystem::path root;  // directory the manifest lives in; not serialised

  std::vector<std::size_t> indices(Split s) const;
  std::filesystem::path resolve(const std::string& rel) const { return root / rel; }
};

nlohmann::json to_json(const ToyFaceParams& p);
ToyFaceParams params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& root);

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);

/// In-memory synthetic corpus.
struct ToyCorpus {
  int size = 0;
  std::uint64_t seed = 0;
  std::vector<ToyFaceParams> params;
  std::vector<Image> images;
  std::vector<Split> splits;

  std::vector<std::size_t> indices(Split s) const;
};

/// Default held-out share mirrors a 28000:2000 split.
inline constexpr double kDefaultTestFraction = 1.0 / 15.0;

ToyCorpus generate_toy_corpus(int count, int size, std::uint64_t seed, double test_fraction = kDefaultTestFraction);

/// Writes plain/NNNNN.png files and manifest.json under out_dir.
DatasetManifest gen_toy_faces(int count, int size, std::uint64_t seed, const std::filesystem::path& out_dir,
                              double test_fraction = kDefaultTestFraction);

/// Centre-crops and resamples every decodable image in `in_dir` (sorted by
/// name) to size x size, writes copies under out_dir and splits them with a
/// seeded shuffle.
DatasetManifest ingest_directory(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir, int size,
                                 double test_fraction, std::uint64_t seed);

enum class KeyPolicy { fixed, fresh };

/// Encrypts every entry into enc/NNNNN.png beside the manifest and records
/// each entry's key.
DatasetManifest make_pairs(const DatasetManifest& manifest, KeyPolicy policy, int block_size, std::uint64_t key_seed);

std::vector<Image> load_images(const DatasetManifest& m, const std::vector<std::size_t>& which);

}  // namespace etcbench
