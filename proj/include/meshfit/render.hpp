#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "meshfit/camera.hpp"
#include "meshfit/image.hpp"
#include "meshfit/tensor.hpp"

namespace meshfit {

struct RenderConfig {
  int resolution = 128;
  Vec3 background = {0.5, 0.5, 0.5};
};

// Bilinear texture-sampling record for one foreground pixel. `texel` indexes
// the flattened (row * W_t + col) texture grid; the 1-4 entries of a pixel
// sum to 1.
struct TexelWeight {
  std::uint32_t texel;
  double weight;
};

// Rasterization output. The image is forward-only with respect to geometry;
// the texture gradient path goes through `texel_weights`. `depth` holds the
// camera distance (-z of the rotated vertex), +inf on background, so
// mask == (depth < +inf).
struct RenderOutput {
  Image image;
  Mask mask;
  std::vector<double> depth;
  std::vector<std::uint32_t> fg_pixels;      // row-major pixel ids
  std::vector<std::uint32_t> weight_begin;   // fg_pixels.size()+1 offsets
  std::vector<TexelWeight> texel_weights;
};

RenderOutput rasterize(const std::vector<Vec3>& v,
                       const std::vector<std::array<int, 3>>& faces,
                       const std::vector<Vec2>& uv, const Tensor& texture,
                       const CameraPose& pose, const RenderConfig& rc);

// Foreground colors as the linear map texel_weights * texture; this is the
// image the losses differentiate. Background pixels keep rc.background.
Image image_from_weights(const RenderOutput& ro, const Tensor& texture,
                         Vec3 background);

// Adjoint of image_from_weights at the foreground pixels.
Tensor texture_grad_from_image(const RenderOutput& ro, const Image& grad_image,
                               std::size_t tex_h, std::size_t tex_w);

// 2D colored points in the normalized frame. `source` keeps the producer's
// pixel (or feature-cell) ids so attribute gradients can be routed back.
struct ColoredPointSet {
  std::size_t n = 0;
  int attr_dim = 0;
  std::vector<double> pos;   // n*2
  std::vector<double> attr;  // n*attr_dim
  std::vector<std::uint32_t> source;
};

// Uniform sample (without replacement) of min(n_sample, #foreground) pixels;
// positions at pixel centers, attributes RGB.
ColoredPointSet image_to_points(const Image& image, const Mask& mask,
                                std::size_t n_sample, Rng& rng);

std::vector<Vec2> mask_to_points(const Mask& mask);

}  // namespace meshfit
