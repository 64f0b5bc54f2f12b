#include "etcbench/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "etcbench/random.hpp"

namespace etcbench {

const std::array<Rgb, kSkinPalette>& skin_palette() {
  static const std::array<Rgb, kSkinPalette> p{{
      {255, 224, 196}, {241, 194, 157}, {224, 172, 105}, {198, 134, 66}, {141, 85, 36}, {92, 56, 34},
  }};
  return p;
}

const std::array<Rgb, kHairPalette>& hair_palette() {
  static const std::array<Rgb, kHairPalette> p{{
      {25, 20, 18}, {70, 45, 30}, {125, 85, 50}, {220, 190, 120}, {170, 70, 30}, {175, 175, 170},
  }};
  return p;
}

const std::array<Rgb, kBackgroundPalette>& background_palette() {
  static const std::array<Rgb, kBackgroundPalette> p{{
      {170, 200, 230}, {205, 205, 205}, {120, 170, 110}, {230, 215, 180}, {50, 60, 80}, {230, 180, 190},
  }};
  return p;
}

namespace {

Rgb jitter(const Rgb& c, Rng& rng, int amount) {
  auto j = [&](std::uint8_t v) {
    return static_cast<std::uint8_t>(std::clamp(static_cast<int>(v) + rng.uniform_int(-amount, amount), 0, 255));
  };
  return {j(c.r), j(c.g), j(c.b)};
}

struct Canvas {
  Image& img;
  int size;

  void fill_ellipse(double cx, double cy, double rx, double ry, const Rgb& c) {
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double u = ((x + 0.5) / size - cx) / rx;
        const double v = ((y + 0.5) / size - cy) / ry;
        if (u * u + v * v <= 1.0) set(x, y, c);
      }
    }
  }
  void fill_rect(double x0, double y0, double x1, double y1, const Rgb& c) {
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double u = (x + 0.5) / size;
        const double v = (y + 0.5) / size;
        if (u >= x0 && u <= x1 && v >= y0 && v <= y1) set(x, y, c);
      }
    }
  }
  void stroke_rect(double x0, double y0, double x1, double y1, double t, const Rgb& c) {
    fill_rect(x0, y0, x1, y0 + t, c);
    fill_rect(x0, y1 - t, x1, y1, c);
    fill_rect(x0, y0, x0 + t, y1, c);
    fill_rect(x1 - t, y0, x1, y1, c);
  }
  void set(int x, int y, const Rgb& c) {
    img.at(x, y, 0) = c.r;
    img.at(x, y, 1) = c.g;
    img.at(x, y, 2) = c.b;
  }
};

}  // namespace

ToyFaceParams sample_toy_face(std::uint64_t seed) {
  Rng rng(seed);
  ToyFaceParams p;
  p.skin_index = static_cast<int>(rng.below(kSkinPalette));
  p.hair_index = static_cast<int>(rng.below(kHairPalette));
  p.background_index = static_cast<int>(rng.below(kBackgroundPalette));
  p.skin = jitter(skin_palette()[p.skin_index], rng, 10);
  p.hair = jitter(hair_palette()[p.hair_index], rng, 10);
  p.background = jitter(background_palette()[p.background_index], rng, 12);
  p.hair_shape = static_cast<int>(rng.below(kHairShapes));
  p.eyeglasses = rng.below(4) == 0;
  p.face_cx = 0.5 + rng.uniform(-0.04, 0.04);
  p.face_cy = 0.56 + rng.uniform(-0.04, 0.04);
  p.face_rx = 0.25 + rng.uniform(-0.03, 0.03);
  p.face_ry = 0.32 + rng.uniform(-0.03, 0.03);
  p.seed = rng.next();
  return p;
}

Image render_toy_face(const ToyFaceParams& p, int size) {
  if (size < 16 || size % 16 != 0) throw std::invalid_argument("toy face size must be a positive multiple of 16");
  Image img(size, size);
  Canvas cv{img, size};
  cv.fill_rect(0, 0, 1, 1, p.background);

  const double cx = p.face_cx, cy = p.face_cy, rx = p.face_rx, ry = p.face_ry;
  switch (p.hair_shape) {
    case 0:  // short: cap over the crown
      cv.fill_ellipse(cx, cy - 0.14, rx * 1.12, ry * 0.82, p.hair);
      break;
    case 1:  // long: falls behind the face to the shoulders
      cv.fill_ellipse(cx, cy - 0.08, rx * 1.3, ry * 1.0, p.hair);
      cv.fill_rect(cx - rx * 1.3, cy - 0.08, cx + rx * 1.3, std::min(1.0, cy + ry * 1.2), p.hair);
      break;
    default:  // bob: wide to jaw level
      cv.fill_ellipse(cx, cy - 0.06, rx * 1.35, ry * 0.95, p.hair);
      break;
  }
  cv.fill_ellipse(cx, cy + 0.03, rx, ry * 0.9, p.skin);

  const Rgb eye{30, 25, 25};
  const double ex = rx * 0.38, ey = cy - ry * 0.12;
  cv.fill_ellipse(cx - ex, ey, 0.035, 0.025, eye);
  cv.fill_ellipse(cx + ex, ey, 0.035, 0.025, eye);
  const Rgb mouth{static_cast<std::uint8_t>(std::max(0, p.skin.r - 70)), static_cast<std::uint8_t>(std::max(0, p.skin.g - 90)),
                  static_cast<std::uint8_t>(std::max(0, p.skin.b - 80))};
  cv.fill_ellipse(cx, cy + ry * 0.5, rx * 0.35, 0.025, mouth);
  if (p.eyeglasses) {
    const Rgb frame{15, 15, 15};
    const double t = 1.6 / size;
    cv.stroke_rect(cx - ex - 0.08, ey - 0.06, cx - ex + 0.08, ey + 0.06, t, frame);
    cv.stroke_rect(cx + ex - 0.08, ey - 0.06, cx + ex + 0.08, ey + 0.06, t, frame);
    cv.fill_rect(cx - ex + 0.08, ey - t / 2, cx + ex - 0.08, ey + t / 2, frame);
  }

  Rng noise(p.seed);
  for (auto& s : img.samples()) s = static_cast<std::uint8_t>(std::clamp(static_cast<int>(s) + noise.uniform_int(-3, 3), 0, 255));
  return img;
}

Image smooth_image(int size, std::uint64_t seed) {
  if (size < 1) throw std::invalid_argument("smooth_image: size must be positive");
  Rng rng(seed);
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::array<std::array<Wave, 3>, 3> waves{};
  std::array<double, 3> gx{}, gy{};
  for (int c = 0; c < 3; ++c) {
    for (auto& w : waves[c]) w = {rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(0, 2 * std::numbers::pi), rng.uniform(20, 45)};
    gx[c] = rng.uniform(-60, 60);
    gy[c] = rng.uniform(-60, 60);
  }
  Image img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double u = (x + 0.5) / size, v = (y + 0.5) / size;
      for (int c = 0; c < 3; ++c) {
        double s = 128 + gx[c] * (u - 0.5) + gy[c] * (v - 0.5);
        for (const auto& w : waves[c]) s += w.amp * std::sin(2 * std::numbers::pi * (w.fx * u + w.fy * v) + w.phase);
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(s), 0L, 255L));
      }
    }
  return img;
}

const char* to_string(Split s) { return s == Split::train ? "train" : "test"; }

namespace {

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw std::runtime_error("manifest: unknown split '" + s + "'");
}

std::vector<Split> assign_splits(std::size_t count, double test_fraction, std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction >= 1.0) throw std::invalid_argument("test fraction must be in [0, 1)");
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(derive_seed(seed, 0x5b117));
  rng.shuffle(order);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(count)));
  std::vector<Split> splits(count, Split::train);
  for (std::size_t i = 0; i < n_test; ++i) splits[order[i]] = Split::test;
  return splits;
}

std::string numbered(const char* dir, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s/%05zu.png", dir, i);
  return buf;
}

nlohmann::json rgb_json(const Rgb& c) { return nlohmann::json::array({c.r, c.g, c.b}); }
Rgb rgb_from(const nlohmann::json& j) {
  return {j.at(0).get<std::uint8_t>(), j.at(1).get<std::uint8_t>(), j.at(2).get<std::uint8_t>()};
}

}  // namespace

std::vector<std::size_t> DatasetManifest::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (entries[i].split == s) out.push_back(i);
  return out;
}

std::vector<std::size_t> ToyCorpus::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i)
    if (splits[i] == s) out.push_back(i);
  return out;
}

nlohmann::json to_json(const ToyFaceParams& p) {
  return {{"skin", rgb_json(p.skin)},
          {"hair", rgb_json(p.hair)},
          {"background", rgb_json(p.background)},
          {"skin_index", p.skin_index},
          {"hair_index", p.hair_index},
          {"background_index", p.background_index},
          {"hair_shape", p.hair_shape},
          {"eyeglasses", p.eyeglasses},
          {"face", {p.face_cx, p.face_cy, p.face_rx, p.face_ry}},
          {"seed", p.seed}};
}

ToyFaceParams params_from_json(const nlohmann::json& j) {
  ToyFaceParams p;
  p.skin = rgb_from(j.at("skin"));
  p.hair = rgb_from(j.at("hair"));
  p.background = rgb_from(j.at("background"));
  p.skin_index = j.at("skin_index").get<int>();
  p.hair_index = j.at("hair_index").get<int>();
  p.background_index = j.at("background_index").get<int>();
  p.hair_shape = j.at("hair_shape").get<int>();
  p.eyeglasses = j.at("eyeglasses").get<bool>();
  const auto& f = j.at("face");
  p.face_cx = f.at(0).get<double>();
  p.face_cy = f.at(1).get<double>();
  p.face_rx = f.at(2).get<double>();
  p.face_ry = f.at(3).get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : m.entries) {
    nlohmann::json je{{"plain", e.plain}, {"split", to_string(e.split)}};
    je["params"] = e.params ? to_json(*e.params) : nlohmann::json(nullptr);
    if (!e.encrypted.empty()) je["encrypted"] = e.encrypted;
    if (e.key_hex) je["key_hex"] = *e.key_hex;
    entries.push_back(std::move(je));
  }
  nlohmann::json j{{"format", "etcbench-manifest/1"},
                   {"image_size", m.image_size},
                   {"corpus_seed", m.corpus_seed},
                   {"entries", std::move(entries)}};
  if (m.block_size > 0) j["block_size"] = m.block_size;
  if (!m.key_policy.empty()) j["key_policy"] = m.key_policy;
  return j;
}

DatasetManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& root) {
  DatasetManifest m;
  m.root = root;
  try {
    m.image_size = j.at("image_size").get<int>();
    m.corpus_seed = j.at("corpus_seed").get<std::uint64_t>();
    m.block_size = j.value("block_size", 0);
    m.key_policy = j.value("key_policy", std::string());
    for (const auto& je : j.at("entries")) {
      ManifestEntry e;
      e.plain = je.at("plain").get<std::string>();
      e.split = split_from_string(je.at("split").get<std::string>());
      if (je.contains("params") && !je["params"].is_null()) e.params = params_from_json(je["params"]);
      e.encrypted = je.value("encrypted", std::string());
      if (je.contains("key_hex")) e.key_hex = je["key_hex"].get<std::string>();
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw std::runtime_error(std::string("malformed manifest: ") + ex.what());
  }
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return manifest_from_json(j, path.parent_path());
}

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest '" + path.string() + "'");
  out << to_json(m).dump(2) << "\n";
}

ToyCorpus generate_toy_corpus(int count, int size, std::uint64_t seed, double test_fraction) {
  if (count < 1) throw std::invalid_argument("corpus count must be at least 1");
  if (size < 16 || size % 16 != 0) throw std::invalid_argument("corpus image size must be a positive multiple of 16");
  ToyCorpus c;
  c.size = size;
  c.seed = seed;
  c.params.reserve(count);
  c.images.reserve(count);
  for (int i = 0; i < count; ++i) {
    c.params.push_back(sample_toy_face(derive_seed(seed, static_cast<std::uint64_t>(i))));
    c.images.push_back(render_toy_face(c.params.back(), size));
  }
  c.splits = assign_splits(static_cast<std::size_t>(count), test_fraction, seed);
  return c;
}

DatasetManifest gen_toy_faces(int count, int size, std::uint64_t seed, const std::filesystem::path& out_dir,
                              double test_fraction) {
  const ToyCorpus corpus = generate_toy_corpus(count, size, seed, test_fraction);
  std::filesystem::create_directories(out_dir / "plain");
  DatasetManifest m;
  m.image_size = size;
  m.corpus_seed = seed;
  m.root = out_dir;
  for (std::size_t i = 0; i < corpus.images.size(); ++i) {
    ManifestEntry e;
    e.plain = numbered("plain", i);
    e.params = corpus.params[i];
    e.split = corpus.splits[i];
    write_image(corpus.images[i], out_dir / e.plain);
    m.entries.push_back(std::move(e));
  }
  save_manifest(m, out_dir / "manifest.json");
  return m;
}

namespace {

// Other files (notes, metadata) are skipped; a corrupt .png/.ppm is an error.
bool has_image_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".ppm";
}

}  // namespace

DatasetManifest ingest_directory(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir, int size,
                                 double test_fraction, std::uint64_t seed) {
  if (!std::filesystem::is_directory(in_dir)) throw std::runtime_error("'" + in_dir.string() + "' is not a directory");
  if (size < 16 || size % 16 != 0) throw std::invalid_argument("target size must be a positive multiple of 16");
  std::vector<std::filesystem::path> files;
  for (const auto& de : std::filesystem::directory_iterator(in_dir))
    if (de.is_regular_file() && has_image_extension(de.path())) files.push_back(de.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("directory '" + in_dir.string() + "' contains no .png or .ppm files");

  std::filesystem::create_directories(out_dir / "plain");
  DatasetManifest m;
  m.image_size = size;
  m.corpus_seed = seed;
  m.root = out_dir;
  const auto splits = assign_splits(files.size(), test_fraction, seed);
  for (std::size_t i = 0; i < files.size(); ++i) {
    Image img;
    try {
      img = load_image(files[i]);
    } catch (const ImageError& e) {
      throw std::runtime_error("cannot ingest '" + files[i].string() + "': " + e.what());
    }
    ManifestEntry e;
    e.plain = numbered("plain", i);
    e.split = splits[i];
    write_image(resize_bilinear(center_square(img), size, size), out_dir / e.plain);
    m.entries.push_back(std::move(e));
  }
  save_manifest(m, out_dir / "manifest.json");
  return m;
}

DatasetManifest make_pairs(const DatasetManifest& manifest, KeyPolicy policy, int block_size, std::uint64_t key_seed) {
  if (manifest.entries.empty()) throw std::runtime_error("manifest has no entries");
  DatasetManifest out = manifest;
  out.block_size = block_size;
  out.key_policy = policy == KeyPolicy::fixed ? "fixed" : "fresh";
  std::filesystem::create_directories(out.root / "enc");
  Rng fixed_rng(key_seed);
  const Seed256 fixed_seed = fixed_rng.seed256();
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    auto& e = out.entries[i];
    MasterKey key;
    if (policy == KeyPolicy::fixed) {
      key.seed = fixed_seed;
    } else {
      Rng rng(derive_seed(key_seed, i));
      key.seed = rng.seed256();
    }
    const Image plain = load_image(out.resolve(e.plain));
    e.encrypted = numbered("enc", i);
    e.key_hex = to_hex(key.seed);
    write_image(encrypt(plain, key, block_size), out.resolve(e.encrypted));
  }
  return out;
}

std::vector<Image> load_images(const DatasetManifest& m, const std::vector<std::size_t>& which) {
  std::vector<Image> out;
  out.reserve(which.size());
  for (auto i : which) out.push_back(load_image(m.resolve(m.entries.at(i).plain)));
  return out;
}

}  // namespace etcbench
