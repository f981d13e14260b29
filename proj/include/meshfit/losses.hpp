#pragma once

#include <cstddef>
#include <vector>

#include "meshfit/common.hpp"
#include "meshfit/image.hpp"
#include "meshfit/render.hpp"
#include "meshfit/tensor.hpp"

namespace meshfit {

struct ChamferTexParams {
  double eps_s = 0.9;
  double eps_a = 1.0;
  double alpha = 1.0;

  void validate() const {
    if (!(eps_s > 0.0 && eps_s < 1.0))
      throw NumericError("ChamferTexParams: eps_s must be in (0,1)");
    if (!(eps_a >= 0.0)) throw NumericError("ChamferTexParams: eps_a must be >= 0");
    if (!(alpha > 0.0)) throw NumericError("ChamferTexParams: alpha must be > 0");
  }
};

struct LossWeights {
  double w_pct = 1.0;
  double w_fct = 0.05;
  double w_cm = 10.0;
  double w_smooth = 0.00005;
  double w_z = 0.05;
};

// Chamfer distance between colored point sets with pairwise entries
//   max((Ds + eps_s)^alpha, 1) * (Da + eps_a),
// symmetric mean of row-wise and column-wise minima. The spatial factor is a
// frozen weight: gradients flow through the appearance distances only.
double chamfer_set_distance(const ColoredPointSet& a, const ColoredPointSet& b,
                            const ChamferTexParams& p);
double chamfer_set_distance_grad(const ColoredPointSet& a,
                                 const ColoredPointSet& b,
                                 const ChamferTexParams& p,
                                 std::vector<double>* grad_attr_a,
                                 std::vector<double>* grad_attr_b);

// Symmetric mean of unsquared nearest-neighbor distances between projected
// vertices and mask points; differentiable in the first set.
double chamfer_mask_loss(const std::vector<Vec2>& s_v,
                         const std::vector<Vec2>& s_f);
double chamfer_mask_loss_grad(const std::vector<Vec2>& s_v,
                              const std::vector<Vec2>& s_f,
                              std::vector<Vec2>& grad_sv);

double latent_reg(const std::vector<double>& z);
void latent_reg_grad(const std::vector<double>& z, double coeff,
                     std::vector<double>& grad_z);

double iou_mask_loss(const Mask& a, const Mask& b);
double l1_loss(const Image& a, const Image& b);
double l1_loss(const Mask& a, const Mask& b);

// Fixed linear convolution bank standing in for a learned feature extractor:
// [sobel_x(gray), sobel_y(gray), blur5(r), blur5(g), blur5(b), r, g, b]
// averaged over 4x4 cells (stride 4). One point per cell with at least half
// its pixels in the foreground; positions at cell centers.
inline constexpr int kFeatureStride = 4;
inline constexpr int kFeatureDim = 8;

ColoredPointSet extract_features(const Image& image, const Mask& mask);
// Adjoint of extract_features w.r.t. the image (linear, so exact).
void feature_grad_to_image(const ColoredPointSet& features,
                           const std::vector<double>& grad_attr,
                           const Mask& mask, Image& grad_image);

// Pixel-level Chamfer texture loss: point sets drawn from both images (at
// most n_sample foreground pixels each), then chamfer_set_distance. The grad
// variant accumulates d(loss)/d(rendered image) for the texture path.
double pixel_chamfer_texture_loss(const Image& rendered, const Mask& r_mask,
                                  const Image& input, const Mask& i_mask,
                                  std::size_t n_sample,
                                  const ChamferTexParams& p, Rng& rng);
double pixel_chamfer_texture_loss_grad(const Image& rendered,
                                       const Mask& r_mask, const Image& input,
                                       const Mask& i_mask,
                                       std::size_t n_sample,
                                       const ChamferTexParams& p, Rng& rng,
                                       Image* grad_rendered);

double feature_chamfer_texture_loss(const Image& rendered, const Mask& r_mask,
                                    const Image& input, const Mask& i_mask,
                                    const ChamferTexParams& p);
double feature_chamfer_texture_loss_grad(const Image& rendered,
                                         const Mask& r_mask,
                                         const Image& input,
                                         const Mask& i_mask,
                                         const ChamferTexParams& p,
                                         Image* grad_rendered);

}  // namespace meshfit
