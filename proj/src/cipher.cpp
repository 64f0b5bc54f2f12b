#include "etcbench/cipher.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace etcbench {

namespace {

// Stream ids for K1..K4.
enum : std::uint64_t { kStreamPermute = 1, kStreamRotFlip = 2, kStreamNegate = 3, kStreamChannels = 4 };

KeyStream stream_for(const MasterKey& key, std::uint64_t id) {
  if (key.subkeys) return KeyStream((*key.subkeys)[id - 1], id);
  return KeyStream(key.seed, id);
}

constexpr std::array<std::array<std::uint8_t, 3>, 6> kChannelPerms{{
    {0, 1, 2},
    {1, 0, 2},
    {0, 2, 1},
    {2, 1, 0},
    {1, 2, 0},
    {2, 0, 1},
}};

void require_square(const Image& block) {
  if (block.width() != block.height()) {
    throw ImageError("block must be square, got " + std::to_string(block.width()) + "x" +
                     std::to_string(block.height()));
  }
}

void require_code(int code, int bound, const char* what) {
  if (code < 0 || code >= bound) {
    throw std::invalid_argument(std::string(what) + " code " + std::to_string(code) + " out of range [0," +
                                std::to_string(bound) + ")");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Keys

MasterKey load_key(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open key file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("key file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (!j.contains("seed_hex") || !j["seed_hex"].is_string()) {
    throw std::runtime_error("key file '" + path.string() + "' lacks string field seed_hex");
  }
  MasterKey key;
  key.seed = seed_from_hex(j["seed_hex"].get<std::string>());
  if (j.contains("subkeys_hex")) {
    const auto& arr = j["subkeys_hex"];
    if (!arr.is_array() || arr.size() != 4) throw std::runtime_error("subkeys_hex must list exactly 4 seeds");
    std::array<Seed256, 4> subs{};
    for (std::size_t i = 0; i < 4; ++i) subs[i] = seed_from_hex(arr[i].get<std::string>());
    key.subkeys = subs;
  }
  return key;
}

void save_key(const MasterKey& key, const std::filesystem::path& path) {
  nlohmann::json j;
  j["seed_hex"] = to_hex(key.seed);
  if (key.subkeys) {
    j["subkeys_hex"] = nlohmann::json::array();
    for (const auto& s : *key.subkeys) j["subkeys_hex"].push_back(to_hex(s));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write key file '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

KeyMaterial KeyMaterial::identity(std::size_t n) {
  KeyMaterial m;
  m.permutation.resize(n);
  for (std::size_t i = 0; i < n; ++i) m.permutation[i] = static_cast<std::uint32_t>(i);
  m.rot_flip.assign(n, 0);
  m.negate.assign(n, 0);
  m.chan_perm.assign(n, 0);
  return m;
}

KeyMaterial derive_key_material(const MasterKey& key, std::size_t n) {
  if (n == 0) throw std::invalid_argument("derive_key_material: n must be at least 1");
  KeyMaterial m = KeyMaterial::identity(n);

  // Fisher-Yates, from the top, with unbiased range reduction.
  KeyStream k1 = stream_for(key, kStreamPermute);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(m.permutation[i], m.permutation[k1.below(i + 1)]);

  KeyStream k2 = stream_for(key, kStreamRotFlip);
  KeyStream k3 = stream_for(key, kStreamNegate);
  KeyStream k4 = stream_for(key, kStreamChannels);
  for (std::size_t i = 0; i < n; ++i) {
    m.rot_flip[i] = static_cast<std::uint8_t>(k2.below(kRotFlipCodes));
    m.negate[i] = static_cast<std::uint8_t>(k3.below(2));
    m.chan_perm[i] = static_cast<std::uint8_t>(k4.below(kChannelPermCodes));
  }
  return m;
}

bool is_permutation(std::span<const std::uint32_t> perm) {
  std::vector<bool> seen(perm.size(), false);
  for (auto p : perm) {
    if (p >= perm.size() || seen[p]) return false;
    seen[p] = true;
  }
  return true;
}

std::vector<std::uint32_t> invert_permutation(std::span<const std::uint32_t> perm) {
  if (!is_permutation(perm)) throw std::invalid_argument("mapping is not a bijection");
  std::vector<std::uint32_t> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = static_cast<std::uint32_t>(i);
  return inv;
}

// ---------------------------------------------------------------------------
// Step 2: dihedral group of the square

int rot_flip_compose(int outer, int inner) {
  require_code(outer, kRotFlipCodes, "rot/flip");
  require_code(inner, kRotFlipCodes, "rot/flip");
  // (R^a M^m)(R^b M^k) = R^(a + (m ? -b : b)) M^(m xor k), using M R = R^-1 M.
  const int a = outer & 3, m = outer >> 2;
  const int b = inner & 3, k = inner >> 2;
  const int r = ((m ? a - b : a + b) % 4 + 4) % 4;
  return r + 4 * (m ^ k);
}

int rot_flip_inverse(int code) {
  require_code(code, kRotFlipCodes, "rot/flip");
  const int r = code & 3;
  return (code >> 2) ? code : (4 - r) % 4;
}

const std::vector<std::uint32_t>& rot_flip_source_map(int size, int code) {
  require_code(code, kRotFlipCodes, "rot/flip");
  if (size < 1) throw ImageError("block size must be positive");
  thread_local std::map<int, std::array<std::vector<std::uint32_t>, kRotFlipCodes>> cache;
  auto it = cache.find(size);
  if (it == cache.end()) {
    std::array<std::vector<std::uint32_t>, kRotFlipCodes> maps;
    const std::size_t n = static_cast<std::size_t>(size);
    for (int c = 0; c < kRotFlipCodes; ++c) {
      std::vector<std::uint32_t> idx(n * n);
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::uint32_t>(i);
      std::vector<std::uint32_t> tmp(n * n);
      if (c >> 2) {
        for (std::size_t y = 0; y < n; ++y)
          for (std::size_t x = 0; x < n; ++x) tmp[y * n + x] = idx[y * n + (n - 1 - x)];
        idx.swap(tmp);
      }
      for (int r = 0; r < (c & 3); ++r) {
        // clockwise: out[y][x] = in[n-1-x][y]
        for (std::size_t y = 0; y < n; ++y)
          for (std::size_t x = 0; x < n; ++x) tmp[y * n + x] = idx[(n - 1 - x) * n + y];
        idx.swap(tmp);
      }
      maps[c] = std::move(idx);
    }
    it = cache.emplace(size, std::move(maps)).first;
  }
  return it->second[code];
}

Image rotate_flip_block(const Image& block, int code) {
  require_square(block);
  const auto& map = rot_flip_source_map(block.width(), code);
  Image out(block.width(), block.height());
  const auto src = block.samples();
  auto dst = out.samples();
  for (std::size_t p = 0; p < map.size(); ++p)
    for (int c = 0; c < kChannels; ++c) dst[p * kChannels + c] = src[map[p] * kChannels + c];
  return out;
}

// ---------------------------------------------------------------------------
// Step 3

Image negpos_block(const Image& block, int r) {
  if (r != 0 && r != 1) throw std::invalid_argument("negation bit must be 0 or 1");
  Image out = block;
  if (r == 1) {
    for (auto& s : out.samples()) s ^= 0xFF;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Step 4

const std::array<std::uint8_t, 3>& channel_perm_table(int code) {
  require_code(code, kChannelPermCodes, "channel permutation");
  return kChannelPerms[code];
}

int channel_perm_compose(int outer, int inner) {
  const auto& po = channel_perm_table(outer);
  const auto& pi = channel_perm_table(inner);
  const std::array<std::uint8_t, 3> composed{pi[po[0]], pi[po[1]], pi[po[2]]};
  for (int c = 0; c < kChannelPermCodes; ++c)
    if (kChannelPerms[c] == composed) return c;
  throw std::logic_error("channel permutation table not closed");
}

int channel_perm_inverse(int code) {
  const auto& p = channel_perm_table(code);
  std::array<std::uint8_t, 3> inv{};
  for (std::uint8_t k = 0; k < 3; ++k) inv[p[k]] = k;
  for (int c = 0; c < kChannelPermCodes; ++c)
    if (kChannelPerms[c] == inv) return c;
  throw std::logic_error("channel permutation table not closed");
}

Image shuffle_channels(const Image& block, int code) {
  const auto& p = channel_perm_table(code);
  Image out(block.width(), block.height());
  const auto src = block.samples();
  auto dst = out.samples();
  for (std::size_t i = 0; i < src.size(); i += kChannels)
    for (int k = 0; k < kChannels; ++k) dst[i + k] = src[i + p[k]];
  return out;
}

// ---------------------------------------------------------------------------
// Step 1

BlockGrid permute_blocks(const BlockGrid& grid, std::span<const std::uint32_t> perm) {
  if (perm.size() != grid.blocks.size()) {
    throw std::invalid_argument("permutation length " + std::to_string(perm.size()) + " != block count " +
                                std::to_string(grid.blocks.size()));
  }
  if (!is_permutation(perm)) throw std::invalid_argument("mapping is not a bijection");
  BlockGrid out = grid;
  for (std::size_t i = 0; i < perm.size(); ++i) out.blocks[i] = grid.blocks[perm[i]];
  return out;
}

// ---------------------------------------------------------------------------
// Whole image

StepMask StepMask::parse(const std::string& text) {
  StepMask m = none();
  for (char ch : text) {
    switch (ch) {
      case '1': m.permute = true; break;
      case '2': m.rot_flip = true; break;
      case '3': m.negpos = true; break;
      case '4': m.channels = true; break;
      case ',': case ' ': break;
      default: throw std::invalid_argument(std::string("invalid step '") + ch + "' (expected digits 1-4)");
    }
  }
  if (!m.any()) throw std::invalid_argument("step mask must select at least one step");
  return m;
}

std::string StepMask::to_string() const {
  std::string s;
  auto add = [&](bool on, char c) {
    if (!on) return;
    if (!s.empty()) s.push_back(',');
    s.push_back(c);
  };
  add(permute, '1');
  add(rot_flip, '2');
  add(negpos, '3');
  add(channels, '4');
  return s;
}

namespace {

BlockGrid split_for_cipher(const Image& img, int block_size) {
  if (block_size < 1) throw ImageError("block size must be positive");
  if (img.width() < block_size || img.height() < block_size) {
    throw ImageError("image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                     " smaller than one " + std::to_string(block_size) + "x" + std::to_string(block_size) +
                     " block");
  }
  return split_blocks(img, block_size, block_size);
}

void require_material(const KeyMaterial& m, std::size_t n) {
  if (m.permutation.size() != n || m.rot_flip.size() != n || m.negate.size() != n || m.chan_perm.size() != n) {
    throw std::invalid_argument("key material sized for " + std::to_string(m.size()) + " blocks, image has " +
                                std::to_string(n));
  }
}

// Steps 2-4 on one block in a single pass.
Image forward_block(const Image& block, int rot, int neg, int chan, StepMask mask) {
  const auto& map = rot_flip_source_map(block.width(), mask.rot_flip ? rot : 0);
  const auto& p = channel_perm_table(mask.channels ? chan : 0);
  const std::uint8_t x = (mask.negpos && neg) ? 0xFF : 0x00;
  Image out(block.width(), block.height());
  const auto src = block.samples();
  auto dst = out.samples();
  for (std::size_t q = 0; q < map.size(); ++q) {
    const std::size_t s = static_cast<std::size_t>(map[q]) * kChannels;
    for (int k = 0; k < kChannels; ++k) dst[q * kChannels + k] = src[s + p[k]] ^ x;
  }
  return out;
}

}  // namespace

Image encrypt_with(const Image& img, const KeyMaterial& material, int block_size, StepMask mask) {
  if (!mask.any()) throw std::invalid_argument("step mask must select at least one step");
  BlockGrid grid = split_for_cipher(img, block_size);
  require_material(material, grid.size());
  if (mask.permute) grid = permute_blocks(grid, material.permutation);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.blocks[i] = forward_block(grid.blocks[i], material.rot_flip[i], material.negate[i], material.chan_perm[i], mask);
  }
  return merge_blocks(grid);
}

Image decrypt_with(const Image& img, const KeyMaterial& material, int block_size, StepMask mask) {
  if (!mask.any()) throw std::invalid_argument("step mask must select at least one step");
  if (block_size < 1 || img.width() % block_size != 0 || img.height() % block_size != 0) {
    throw ImageError("ciphertext " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                     " is not a whole number of " + std::to_string(block_size) + "-pixel blocks");
  }
  BlockGrid grid = split_for_cipher(img, block_size);
  require_material(material, grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    // The forward pass applies rot, then xor, then channel shuffle; these act on
    // independent coordinates, so inverting each factor inverts the whole.
    const int rot = rot_flip_inverse(material.rot_flip[i]);
    const int chan = channel_perm_inverse(material.chan_perm[i]);
    grid.blocks[i] = forward_block(grid.blocks[i], rot, material.negate[i], chan, {false, mask.rot_flip, mask.negpos, mask.channels});
  }
  if (mask.permute) grid = permute_blocks(grid, invert_permutation(material.permutation));
  return merge_blocks(grid);
}

Image encrypt_steps(const Image& img, const MasterKey& key, int block_size, StepMask mask) {
  if (!mask.any()) throw std::invalid_argument("step mask must select at least one step");
  if (block_size < 1) throw ImageError("block size must be positive");
  const std::size_t n = block_count(img.width(), img.height(), block_size, block_size);
  if (n == 0) throw ImageError("image smaller than one block");
  return encrypt_with(img, derive_key_material(key, n), block_size, mask);
}

Image decrypt_steps(const Image& img, const MasterKey& key, int block_size, StepMask mask) {
  if (block_size < 1) throw ImageError("block size must be positive");
  const std::size_t n = block_count(img.width(), img.height(), block_size, block_size);
  if (n == 0) throw ImageError("image smaller than one block");
  return decrypt_with(img, derive_key_material(key, n), block_size, mask);
}

Image encrypt(const Image& img, const MasterKey& key, int block_size) {
  return encrypt_steps(img, key, block_size, StepMask::all());
}

Image decrypt(const Image& img, const MasterKey& key, int block_size) {
  return decrypt_steps(img, key, block_size, StepMask::all());
}

// ---------------------------------------------------------------------------

KeySpace keyspace(std::uint64_t n) {
  using boost::multiprecision::cpp_int;
  if (n == 0) throw std::invalid_argument("keyspace: n must be at least 1");
  cpp_int fact = 1;
  for (std::uint64_t k = 2; k <= n; ++k) fact *= k;
  cpp_int per_block = boost::multiprecision::pow(cpp_int(8 * 2 * 6), static_cast<unsigned>(n));
  KeySpace ks;
  ks.n = n;
  ks.cardinality = fact * per_block;
  // log2 from the top 53 bits so the result is correctly rounded for any n.
  const std::size_t msb = boost::multiprecision::msb(ks.cardinality);
  if (msb < 53) {
    ks.bits = std::log2(ks.cardinality.convert_to<double>());
  } else {
    const std::size_t shift = msb - 52;
    const cpp_int top = ks.cardinality >> shift;
    ks.bits = static_cast<double>(shift) + std::log2(top.convert_to<double>());
  }
  return ks;
}

}  // namespace etcbench
