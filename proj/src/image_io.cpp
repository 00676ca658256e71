#include "hgs/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <vector>

#include "hgs/importance.hpp"

namespace hgs {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_or_throw(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw std::runtime_error("cannot open file: " + path);
  return f;
}

// Decodes any PNG to 8-bit samples with `want_channels` (1 or 3).
std::vector<uint8_t> decode_png(const std::string& path, int want_channels,
                                int& width, int& height) {
  FilePtr f = open_or_throw(path, "rb");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("failed to decode PNG: " + path);
  }
  png_init_io(png, f.get());
  png_read_info(png, info);

  png_set_expand(png);  // palette -> rgb, gray<8 -> 8, tRNS -> alpha
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  png_set_strip_alpha(png);
  const png_byte color = png_get_color_type(png, info);
  if (want_channels == 3 &&
      (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA))
    png_set_gray_to_rgb(png);
  if (want_channels == 1 && color != PNG_COLOR_TYPE_GRAY &&
      color != PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);

  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  if (channels != want_channels) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("unexpected channel count in " + path);
  }

  std::vector<uint8_t> pixels(static_cast<size_t>(width) * height * channels);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = pixels.data() + static_cast<size_t>(y) * width * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return pixels;
}

void encode_png(const std::string& path, const std::vector<uint8_t>& pixels,
                int width, int height, int channels) {
  FilePtr f = open_or_throw(path, "wb");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("failed to encode PNG: " + path);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, width, height, 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(pixels.data() +
                                    static_cast<size_t>(y) * width * channels);
  png_write_image(png, rows.data());
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
}

uint8_t to_byte(double v) {
  return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

RasterGrid read_png(const std::string& path) {
  int w, h;
  const auto pixels = decode_png(path, 3, w, h);
  RasterGrid img(w, h, 3);
  for (size_t i = 0; i < pixels.size(); ++i)
    img.data[i] = pixels[i] / 255.0;
  return img;
}

RasterGrid read_png_labels(const std::string& path) {
  int w, h;
  const auto pixels = decode_png(path, 1, w, h);
  RasterGrid img(w, h, 1);
  for (size_t i = 0; i < pixels.size(); ++i)
    img.data[i] = static_cast<double>(pixels[i]);
  return img;
}

void write_png(const std::string& path, const RasterGrid& img) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("write_png: expected 1 or 3 channels");
  std::vector<uint8_t> pixels(img.data.size());
  for (size_t i = 0; i < pixels.size(); ++i) pixels[i] = to_byte(img.data[i]);
  encode_png(path, pixels, img.width, img.height, img.channels);
}

void write_png_labels(const std::string& path, const RasterGrid& labels) {
  if (labels.channels != 1)
    throw std::invalid_argument("write_png_labels: expected 1 channel");
  std::vector<uint8_t> pixels(labels.data.size());
  for (size_t i = 0; i < pixels.size(); ++i)
    pixels[i] = static_cast<uint8_t>(
        std::clamp<long>(std::lround(labels.data[i]), 0, 255));
  encode_png(path, pixels, labels.width, labels.height, 1);
}

RasterGrid read_pfm(const std::string& path) {
  FilePtr f = open_or_throw(path, "rb");
  char tag[3] = {0, 0, 0};
  if (std::fscanf(f.get(), "%2s", tag) != 1)
    throw std::runtime_error("bad PFM header in " + path);
  int channels;
  if (std::strcmp(tag, "PF") == 0)
    channels = 3;
  else if (std::strcmp(tag, "Pf") == 0)
    channels = 1;
  else
    throw std::runtime_error("not a PFM file: " + path);
  int w, h;
  double scale;
  if (std::fscanf(f.get(), "%d %d %lf", &w, &h, &scale) != 3 || w <= 0 || h <= 0)
    throw std::runtime_error("bad PFM dimensions in " + path);
  if (scale >= 0.0)
    throw std::runtime_error("big-endian PFM not supported: " + path);
  std::fgetc(f.get());  // single whitespace after the scale line

  std::vector<float> row(static_cast<size_t>(w) * channels);
  RasterGrid img(w, h, channels);
  // PFM stores rows bottom-to-top.
  for (int y = h - 1; y >= 0; --y) {
    if (std::fread(row.data(), sizeof(float), row.size(), f.get()) != row.size())
      throw std::runtime_error("truncated PFM data in " + path);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        img.at(x, y, c) = static_cast<double>(row[static_cast<size_t>(x) * channels + c]);
  }
  return img;
}

void write_pfm(const std::string& path, const RasterGrid& img) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("write_pfm: expected 1 or 3 channels");
  FilePtr f = open_or_throw(path, "wb");
  std::fprintf(f.get(), "%s\n%d %d\n-1.0\n", img.channels == 3 ? "PF" : "Pf",
               img.width, img.height);
  std::vector<float> row(static_cast<size_t>(img.width) * img.channels);
  for (int y = img.height - 1; y >= 0; --y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        row[static_cast<size_t>(x) * img.channels + c] =
            static_cast<float>(img.at(x, y, c));
    if (std::fwrite(row.data(), sizeof(float), row.size(), f.get()) != row.size())
      throw std::runtime_error("failed to write PFM data to " + path);
  }
}

RasterGrid heatmap(const RasterGrid& map) {
  if (map.channels != 1)
    throw std::invalid_argument("heatmap: expected 1 channel");
  RasterGrid norm = map;
  minmax_normalize(norm);
  RasterGrid out(map.width, map.height, 3);
  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < map.width; ++x) {
      const double v = norm.at(x, y);
      // blue -> cyan -> yellow -> red ramp
      out.at(x, y, 0) = std::clamp(2.0 * v - 0.5, 0.0, 1.0);
      out.at(x, y, 1) = std::clamp(v < 0.5 ? 2.0 * v : 2.0 - 2.0 * v, 0.0, 1.0);
      out.at(x, y, 2) = std::clamp(1.0 - 2.0 * v, 0.0, 1.0);
    }
  return out;
}

}  // namespace hgs
