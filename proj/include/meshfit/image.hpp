#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "meshfit/common.hpp"

namespace meshfit {

// Row-major RGB image, values in [0,1].
struct Image {
  int h = 0, w = 0;
  std::vector<double> rgb;  // h*w*3

  Image() = default;
  Image(int height, int width, Vec3 fill = {0, 0, 0})
      : h(height), w(width), rgb(static_cast<std::size_t>(height) * width * 3) {
    for (int p = 0; p < height * width; ++p) {
      rgb[3 * p + 0] = fill.x;
      rgb[3 * p + 1] = fill.y;
      rgb[3 * p + 2] = fill.z;
    }
  }

  double& at(int r, int c, int ch) {
    return rgb[(static_cast<std::size_t>(r) * w + c) * 3 + ch];
  }
  double at(int r, int c, int ch) const {
    return rgb[(static_cast<std::size_t>(r) * w + c) * 3 + ch];
  }
};

struct Mask {
  int h = 0, w = 0;
  std::vector<std::uint8_t> fg;  // h*w, 0 or 1

  Mask() = default;
  Mask(int height, int width)
      : h(height), w(width), fg(static_cast<std::size_t>(height) * width, 0) {}

  bool at(int r, int c) const { return fg[static_cast<std::size_t>(r) * w + c] != 0; }
  void set(int r, int c, bool v) {
    fg[static_cast<std::size_t>(r) * w + c] = v ? 1 : 0;
  }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : fg) n += v;
    return n;
  }
};

// 8-bit PNG I/O. Images are RGB; masks are grayscale with >= 128 meaning
// foreground on read.
void write_png(const std::string& path, const Image& image);
Image read_png(const std::string& path);
void write_png_mask(const std::string& path, const Mask& mask);
Mask read_png_mask(const std::string& path);

// Quantization used on every write (and by renders that must match a file
// round-trip): round(v * 255), clamped.
std::uint8_t quantize8(double v);
Image quantize_image(const Image& image);

}  // namespace meshfit
