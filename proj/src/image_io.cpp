#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

#include "meshfit/image.hpp"

namespace meshfit {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_png_bytes(const std::string& path, int h, int w, int channels,
                     const std::vector<unsigned char>& bytes) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("write_png: cannot open " + path);
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("write_png: libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("write_png: libpng failure on " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w),
               static_cast<png_uint_32>(h), 8,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int r = 0; r < h; ++r)
    rows[r] = const_cast<png_bytep>(bytes.data() +
                                    static_cast<std::size_t>(r) * w * channels);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<unsigned char> read_png_rgb8(const std::string& path, int* h,
                                         int* w) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("read_png: cannot open " + path);
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("read_png: libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("read_png: not a valid PNG: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  *h = static_cast<int>(png_get_image_height(png, info));
  *w = static_cast<int>(png_get_image_width(png, info));
  std::vector<unsigned char> bytes(static_cast<std::size_t>(*h) * *w * 3);
  std::vector<png_bytep> rows(static_cast<std::size_t>(*h));
  for (int r = 0; r < *h; ++r)
    rows[r] = bytes.data() + static_cast<std::size_t>(r) * *w * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return bytes;
}

}  // namespace

std::uint8_t quantize8(double v) {
  double q = std::lround(v * 255.0);
  if (q < 0.0) q = 0.0;
  if (q > 255.0) q = 255.0;
  return static_cast<std::uint8_t>(q);
}

Image quantize_image(const Image& image) {
  Image out(image.h, image.w);
  for (std::size_t i = 0; i < image.rgb.size(); ++i)
    out.rgb[i] = quantize8(image.rgb[i]) / 255.0;
  return out;
}

void write_png(const std::string& path, const Image& image) {
  std::vector<unsigned char> bytes(image.rgb.size());
  for (std::size_t i = 0; i < image.rgb.size(); ++i)
    bytes[i] = quantize8(image.rgb[i]);
  write_png_bytes(path, image.h, image.w, 3, bytes);
}

Image read_png(const std::string& path) {
  int h = 0, w = 0;
  auto bytes = read_png_rgb8(path, &h, &w);
  Image image(h, w);
  for (std::size_t i = 0; i < bytes.size(); ++i)
    image.rgb[i] = bytes[i] / 255.0;
  return image;
}

void write_png_mask(const std::string& path, const Mask& mask) {
  std::vector<unsigned char> bytes(mask.fg.size());
  for (std::size_t i = 0; i < mask.fg.size(); ++i)
    bytes[i] = mask.fg[i] ? 255 : 0;
  write_png_bytes(path, mask.h, mask.w, 1, bytes);
}

Mask read_png_mask(const std::string& path) {
  int h = 0, w = 0;
  auto bytes = read_png_rgb8(path, &h, &w);
  Mask mask(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const unsigned char* px = bytes.data() + (static_cast<std::size_t>(r) * w + c) * 3;
      int gray = (px[0] + px[1] + px[2]) / 3;
      mask.set(r, c, gray >= 128);
    }
  return mask;
}

}  // namespace meshfit
