#include "etcbench/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace etcbench {

Image::Image(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw ImageError("negative image dimensions");
  pixels_.assign(static_cast<std::size_t>(width) * height * kChannels, fill);
}

Image::Image(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 0 || height < 0) throw ImageError("negative image dimensions");
  if (pixels_.size() != static_cast<std::size_t>(width) * height * kChannels) {
    throw ImageError("pixel buffer length does not match " + std::to_string(width) + "x" +
                     std::to_string(height) + "x3");
  }
}

Image crop(const Image& img, int x0, int y0, int w, int h) {
  if (x0 < 0 || y0 < 0 || w < 0 || h < 0 || x0 + w > img.width() || y0 + h > img.height()) {
    throw ImageError("crop rectangle outside image");
  }
  Image out(w, h);
  const auto src = img.samples();
  auto dst = out.samples();
  const std::size_t row_bytes = static_cast<std::size_t>(w) * kChannels;
  for (int y = 0; y < h; ++y) {
    const std::size_t so = (static_cast<std::size_t>(y0 + y) * img.width() + x0) * kChannels;
    std::copy_n(src.begin() + so, row_bytes, dst.begin() + y * row_bytes);
  }
  return out;
}

std::size_t block_count(int width, int height, int block_width, int block_height) {
  if (block_width < 1 || block_height < 1) throw ImageError("block size must be positive");
  return static_cast<std::size_t>(width / block_width) * static_cast<std::size_t>(height / block_height);
}

BlockGrid split_blocks(const Image& img, int block_width, int block_height) {
  if (block_width < 1 || block_height < 1) throw ImageError("block size must be positive");
  if (img.width() < block_width || img.height() < block_height) {
    throw ImageError("block " + std::to_string(block_width) + "x" + std::to_string(block_height) +
                     " larger than image " + std::to_string(img.width()) + "x" +
                     std::to_string(img.height()));
  }
  BlockGrid grid;
  grid.block_width = block_width;
  grid.block_height = block_height;
  grid.columns = img.width() / block_width;
  grid.rows = img.height() / block_height;
  grid.cropped_right = img.width() - grid.columns * block_width;
  grid.cropped_bottom = img.height() - grid.rows * block_height;
  grid.blocks.reserve(static_cast<std::size_t>(grid.columns) * grid.rows);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.columns; ++c) {
      grid.blocks.push_back(crop(img, c * block_width, r * block_height, block_width, block_height));
    }
  }
  return grid;
}

Image merge_blocks(const BlockGrid& grid) {
  if (grid.columns < 1 || grid.rows < 1) throw ImageError("empty block grid");
  if (grid.blocks.size() != static_cast<std::size_t>(grid.columns) * grid.rows) {
    throw ImageError("block grid incomplete: expected " + std::to_string(grid.columns * grid.rows) +
                     " blocks, have " + std::to_string(grid.blocks.size()));
  }
  const int bw = grid.block_width;
  const int bh = grid.block_height;
  Image out(grid.columns * bw, grid.rows * bh);
  auto dst = out.samples();
  const std::size_t row_bytes = static_cast<std::size_t>(bw) * kChannels;
  for (std::size_t i = 0; i < grid.blocks.size(); ++i) {
    const Image& b = grid.blocks[i];
    if (b.width() != bw || b.height() != bh) throw ImageError("inconsistent block dimensions");
    const int x0 = static_cast<int>(i % grid.columns) * bw;
    const int y0 = static_cast<int>(i / grid.columns) * bh;
    const auto src = b.samples();
    for (int y = 0; y < bh; ++y) {
      const std::size_t o = (static_cast<std::size_t>(y0 + y) * out.width() + x0) * kChannels;
      std::copy_n(src.begin() + y * row_bytes, row_bytes, dst.begin() + o);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// PPM

std::vector<std::uint8_t> encode_ppm(const Image& img) {
  std::string header = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.buffer().begin(), img.buffer().end());
  return out;
}

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string ppm_token(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  std::string tok;
  while (pos < bytes.size() && !std::isspace(bytes[pos])) tok.push_back(static_cast<char>(bytes[pos++]));
  if (tok.empty()) throw ImageError("truncated PPM header");
  return tok;
}

int ppm_int(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  const std::string tok = ppm_token(bytes, pos);
  if (!std::all_of(tok.begin(), tok.end(), [](char ch) { return ch >= '0' && ch <= '9'; }) ||
      tok.size() > 9) {
    throw ImageError("malformed PPM header field '" + tok + "'");
  }
  return std::stoi(tok);
}

}  // namespace

Image decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  if (ppm_token(bytes, pos) != "P6") throw ImageError("not a binary PPM (P6) file");
  const int w = ppm_int(bytes, pos);
  const int h = ppm_int(bytes, pos);
  const int maxval = ppm_int(bytes, pos);
  if (maxval != 255) throw ImageError("unsupported PPM bit depth (maxval " + std::to_string(maxval) + ")");
  ++pos;  // single whitespace after maxval
  const std::size_t need = static_cast<std::size_t>(w) * h * kChannels;
  if (bytes.size() < pos + need) throw ImageError("truncated PPM pixel data");
  return Image(w, h, std::vector<std::uint8_t>(bytes.begin() + pos, bytes.begin() + pos + need));
}

// ---------------------------------------------------------------------------
// PNG via libpng with in-memory callbacks

namespace {

struct PngReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

[[noreturn]] void png_throw(png_structp, png_const_charp msg) { throw ImageError(std::string("PNG: ") + msg); }
void png_warn(png_structp, png_const_charp) {}

void png_read_mem(png_structp png, png_bytep out, png_size_t len) {
  auto* cur = static_cast<PngReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + len > cur->bytes.size()) png_error(png, "truncated stream");
  std::memcpy(out, cur->bytes.data() + cur->pos, len);
  cur->pos += len;
}

void png_write_mem(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void png_flush_mem(png_structp) {}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& img) {
  if (img.empty()) throw ImageError("cannot encode an empty image");
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw, png_warn);
  png_infop info = png_create_info_struct(png);
  try {
    png_set_write_fn(png, &out, png_write_mem, png_flush_mem);
    png_set_IHDR(png, info, img.width(), img.height(), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t row_bytes = static_cast<std::size_t>(img.width()) * kChannels;
    for (int y = 0; y < img.height(); ++y) {
      png_write_row(png, const_cast<png_bytep>(img.buffer().data() + y * row_bytes));
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw ImageError("not a PNG file");
  PngReadCursor cursor{bytes, 0};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw, png_warn);
  png_infop info = png_create_info_struct(png);
  Image img;
  try {
    png_set_read_fn(png, &cursor, png_read_mem);
    png_read_info(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (depth != 8) throw ImageError("unsupported PNG bit depth " + std::to_string(depth));
    if (color != PNG_COLOR_TYPE_RGB) {
      throw ImageError("unsupported PNG channel layout (only 8-bit RGB without alpha)");
    }
    if (png_get_interlace_type(png, info) != PNG_INTERLACE_NONE) png_set_interlace_handling(png);
    png_read_update_info(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    img = Image(w, h);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = img.samples().data() + static_cast<std::size_t>(y) * w * kChannels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

Image load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open image '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes);
  if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return decode_png(bytes);
  throw ImageError("unrecognized image format in '" + path.string() + "' (expected PNG or P6 PPM)");
}

void write_image(const Image& img, const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  const auto bytes = ext == ".ppm" ? encode_ppm(img) : encode_png(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageError("cannot write image '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Resampling

Image downsample(const Image& img, int factor) {
  if (factor < 1 || img.width() % factor != 0 || img.height() % factor != 0) {
    throw ImageError("downsample factor must divide image dimensions");
  }
  const int w = img.width() / factor;
  const int h = img.height() / factor;
  const int area = factor * factor;
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < kChannels; ++c) {
        int sum = 0;
        for (int dy = 0; dy < factor; ++dy)
          for (int dx = 0; dx < factor; ++dx) sum += img.at(x * factor + dx, y * factor + dy, c);
        out.at(x, y, c) = static_cast<std::uint8_t>((sum + area / 2) / area);
      }
    }
  }
  return out;
}

Image resize_bilinear(const Image& img, int width, int height) {
  if (img.empty() || width < 1 || height < 1) throw ImageError("invalid resize");
  if (width == img.width() && height == img.height()) return img;
  Image out(width, height);
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < kChannels; ++c) {
        const double top = img.at(x0, y0, c) * (1 - wx) + img.at(x1, y0, c) * wx;
        const double bot = img.at(x0, y1, c) * (1 - wx) + img.at(x1, y1, c) * wx;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(std::clamp(top * (1 - wy) + bot * wy, 0.0, 255.0)));
      }
    }
  }
  return out;
}

Image upsample_nearest(const Image& img, int factor) {
  if (factor < 1) throw ImageError("upsample factor must be positive");
  Image out(img.width() * factor, img.height() * factor);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      for (int c = 0; c < kChannels; ++c) out.at(x, y, c) = img.at(x / factor, y / factor, c);
  return out;
}

Image center_square(const Image& img) {
  const int side = std::min(img.width(), img.height());
  return crop(img, (img.width() - side) / 2, (img.height() - side) / 2, side, side);
}

}  // namespace etcbench
