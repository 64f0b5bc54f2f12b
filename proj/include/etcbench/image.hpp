#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace etcbench {

/// Thrown when an image, block or file does not meet a precondition.
class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kChannels = 3;

/// 8-bit RGB raster. Samples are row-major, interleaved RGB.
class Image {
 public:
  Image() = default;
  Image(int width, int height, std::uint8_t fill = 0);
  Image(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t at(int x, int y, int c) const {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }
  std::uint8_t& at(int x, int y, int c) {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }

  std::span<const std::uint8_t> samples() const { return pixels_; }
  std::span<std::uint8_t> samples() { return pixels_; }
  const std::vector<std::uint8_t>& buffer() const { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Copy of the rectangle [x0, x0+w) x [y0, y0+h).
Image crop(const Image& img, int x0, int y0, int w, int h);

/// Nonoverlapping tiling of an image. Blocks are stored row-major over grid
/// positions; pixels beyond the last full block row/column are dropped.
struct BlockGrid {
  int block_width = 0;
  int block_height = 0;
  int columns = 0;
  int rows = 0;
  int cropped_right = 0;   // pixels discarded on the right edge
  int cropped_bottom = 0;  // pixels discarded on the bottom edge
  std::vector<Image> blocks;

  std::size_t size() const { return blocks.size(); }
};

/// Number of full blocks, floor(X/Bx) * floor(Y/By).
std::size_t block_count(int width, int height, int block_width, int block_height);

BlockGrid split_blocks(const Image& img, int block_width, int block_height);
Image merge_blocks(const BlockGrid& grid);

/// Loads binary PPM (P6) or PNG, detected by magic bytes.
Image load_image(const std::filesystem::path& path);
/// Writes PNG unless the extension is .ppm.
void write_image(const Image& img, const std::filesystem::path& path);

std::vector<std::uint8_t> encode_ppm(const Image& img);
Image decode_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const Image& img);
Image decode_png(std::span<const std::uint8_t> bytes);

/// Box-filter downsample by an integer factor (width and height must divide).
Image downsample(const Image& img, int factor);
/// Bilinear resample to an arbitrary size.
Image resize_bilinear(const Image& img, int width, int height);
/// Nearest-neighbour upsample by an integer factor.
Image upsample_nearest(const Image& img, int factor);
/// Largest centred square crop.
Image center_square(const Image& img);

}  // namespace etcbench
