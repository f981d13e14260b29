#include "meshfit/losses.hpp"

#include <algorithm>
#include <cmath>

#include "meshfit/camera.hpp"
#include "meshfit/kernels.hpp"

namespace meshfit {

namespace {

constexpr double kZeroDist = 1e-12;

void check_sets(const ColoredPointSet& a, const ColoredPointSet& b) {
  if (a.n == 0 || b.n == 0)
    throw NumericError("chamfer_set_distance: empty point set");
  if (a.attr_dim != b.attr_dim)
    throw NumericError("chamfer_set_distance: attribute dim mismatch");
}

double spatial_factor(const double* pa, const double* pb,
                      const ChamferTexParams& p) {
  double dx = pa[0] - pb[0], dy = pa[1] - pb[1];
  double ds = std::sqrt(dx * dx + dy * dy);
  double s = ds + p.eps_s;
  if (p.alpha != 1.0) s = std::pow(s, p.alpha);
  return s < 1.0 ? 1.0 : s;
}

// Appearance-distance subgradient: coeff * spatial * d|a-b|/d(attr).
void accumulate_attr_grad(const ColoredPointSet& a, const ColoredPointSet& b,
                          std::size_t i, std::size_t j, double coeff,
                          std::vector<double>* ga, std::vector<double>* gb) {
  int d = a.attr_dim;
  const double* ai = a.attr.data() + i * d;
  const double* bj = b.attr.data() + j * d;
  double da2 = 0.0;
  for (int k = 0; k < d; ++k) da2 += sqr(ai[k] - bj[k]);
  double da = std::sqrt(da2);
  if (da < kZeroDist) return;
  double inv = coeff / da;
  for (int k = 0; k < d; ++k) {
    double g = inv * (ai[k] - bj[k]);
    if (ga) (*ga)[i * d + k] += g;
    if (gb) (*gb)[j * d + k] -= g;
  }
}

kernels::NnResult ct_reduce(const ColoredPointSet& a, const ColoredPointSet& b,
                            const ChamferTexParams& p) {
  kernels::CtParams kp{p.eps_s, p.eps_a, p.alpha};
  return kernels::ct_bidirectional(a.pos.data(), a.attr.data(), a.n,
                                   b.pos.data(), b.attr.data(), b.n,
                                   static_cast<std::size_t>(a.attr_dim), kp);
}

}  // namespace

double chamfer_set_distance(const ColoredPointSet& a, const ColoredPointSet& b,
                            const ChamferTexParams& p) {
  p.validate();
  check_sets(a, b);
  kernels::NnResult nn = ct_reduce(a, b, p);
  double fwd = kernels::sum(nn.row_min) / static_cast<double>(a.n);
  double bwd = kernels::sum(nn.col_min) / static_cast<double>(b.n);
  return 0.5 * (fwd + bwd);
}

double chamfer_set_distance_grad(const ColoredPointSet& a,
                                 const ColoredPointSet& b,
                                 const ChamferTexParams& p,
                                 std::vector<double>* grad_attr_a,
                                 std::vector<double>* grad_attr_b) {
  p.validate();
  check_sets(a, b);
  kernels::NnResult nn = ct_reduce(a, b, p);
  double fwd = kernels::sum(nn.row_min) / static_cast<double>(a.n);
  double bwd = kernels::sum(nn.col_min) / static_cast<double>(b.n);

  if (grad_attr_a) grad_attr_a->assign(a.n * a.attr_dim, 0.0);
  if (grad_attr_b) grad_attr_b->assign(b.n * b.attr_dim, 0.0);
  double ca = 0.5 / static_cast<double>(a.n);
  double cb = 0.5 / static_cast<double>(b.n);
  for (std::size_t i = 0; i < a.n; ++i) {
    std::size_t j = nn.row_arg[i];
    double w = spatial_factor(a.pos.data() + 2 * i, b.pos.data() + 2 * j, p);
    accumulate_attr_grad(a, b, i, j, ca * w, grad_attr_a, grad_attr_b);
  }
  for (std::size_t j = 0; j < b.n; ++j) {
    std::size_t i = nn.col_arg[j];
    double w = spatial_factor(a.pos.data() + 2 * i, b.pos.data() + 2 * j, p);
    accumulate_attr_grad(a, b, i, j, cb * w, grad_attr_a, grad_attr_b);
  }
  return 0.5 * (fwd + bwd);
}

double chamfer_mask_loss(const std::vector<Vec2>& s_v,
                         const std::vector<Vec2>& s_f) {
  if (s_v.empty() || s_f.empty())
    throw NumericError("chamfer_mask_loss: empty point set");
  static_assert(sizeof(Vec2) == 2 * sizeof(double), "Vec2 must be packed");
  kernels::NnResult nn = kernels::nn_bidirectional(
      reinterpret_cast<const double*>(s_v.data()), s_v.size(),
      reinterpret_cast<const double*>(s_f.data()), s_f.size(), 2);
  double fwd = kernels::sum(nn.row_min) / static_cast<double>(s_v.size());
  double bwd = kernels::sum(nn.col_min) / static_cast<double>(s_f.size());
  return 0.5 * (fwd + bwd);
}

double chamfer_mask_loss_grad(const std::vector<Vec2>& s_v,
                              const std::vector<Vec2>& s_f,
                              std::vector<Vec2>& grad_sv) {
  if (s_v.empty() || s_f.empty())
    throw NumericError("chamfer_mask_loss: empty point set");
  kernels::NnResult nn = kernels::nn_bidirectional(
      reinterpret_cast<const double*>(s_v.data()), s_v.size(),
      reinterpret_cast<const double*>(s_f.data()), s_f.size(), 2);
  double fwd = kernels::sum(nn.row_min) / static_cast<double>(s_v.size());
  double bwd = kernels::sum(nn.col_min) / static_cast<double>(s_f.size());

  grad_sv.assign(s_v.size(), Vec2{});
  double cv = 0.5 / static_cast<double>(s_v.size());
  double cf = 0.5 / static_cast<double>(s_f.size());
  for (std::size_t i = 0; i < s_v.size(); ++i) {
    double d = nn.row_min[i];
    if (d < kZeroDist) continue;
    const Vec2& q = s_f[nn.row_arg[i]];
    grad_sv[i].x += cv * (s_v[i].x - q.x) / d;
    grad_sv[i].y += cv * (s_v[i].y - q.y) / d;
  }
  for (std::size_t j = 0; j < s_f.size(); ++j) {
    double d = nn.col_min[j];
    if (d < kZeroDist) continue;
    std::size_t i = nn.col_arg[j];
    grad_sv[i].x += cf * (s_v[i].x - s_f[j].x) / d;
    grad_sv[i].y += cf * (s_v[i].y - s_f[j].y) / d;
  }
  return 0.5 * (fwd + bwd);
}

double latent_reg(const std::vector<double>& z) {
  double s = 0.0;
  for (double v : z) s += v * v;
  return s / static_cast<double>(z.size());
}

void latent_reg_grad(const std::vector<double>& z, double coeff,
                     std::vector<double>& grad_z) {
  double c = 2.0 * coeff / static_cast<double>(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) grad_z[i] += c * z[i];
}

double iou_mask_loss(const Mask& a, const Mask& b) {
  if (a.h != b.h || a.w != b.w)
    throw NumericError("iou_mask_loss: shape mismatch");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.fg.size(); ++i) {
    inter += (a.fg[i] & b.fg[i]);
    uni += (a.fg[i] | b.fg[i]);
  }
  if (uni == 0) return 0.0;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

double l1_loss(const Image& a, const Image& b) {
  if (a.h != b.h || a.w != b.w) throw NumericError("l1_loss: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.rgb.size(); ++i)
    s += std::fabs(a.rgb[i] - b.rgb[i]);
  return s / static_cast<double>(a.rgb.size());
}

double l1_loss(const Mask& a, const Mask& b) {
  if (a.h != b.h || a.w != b.w) throw NumericError("l1_loss: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.fg.size(); ++i)
    s += std::fabs(static_cast<double>(a.fg[i]) - static_cast<double>(b.fg[i]));
  return s / static_cast<double>(a.fg.size());
}

namespace {

const double kSobelX[3][3] = {{-1.0 / 8, 0, 1.0 / 8},
                              {-2.0 / 8, 0, 2.0 / 8},
                              {-1.0 / 8, 0, 1.0 / 8}};
const double kSobelY[3][3] = {{-1.0 / 8, -2.0 / 8, -1.0 / 8},
                              {0, 0, 0},
                              {1.0 / 8, 2.0 / 8, 1.0 / 8}};
const double kBinom5[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

inline int clampi(int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); }

struct CellGrid {
  int cells_h, cells_w;
  int r0(int ci) const { return ci * kFeatureStride; }
  int c0(int cj) const { return cj * kFeatureStride; }
};

CellGrid cell_grid(int h, int w) {
  return {(h + kFeatureStride - 1) / kFeatureStride,
          (w + kFeatureStride - 1) / kFeatureStride};
}

}  // namespace

ColoredPointSet extract_features(const Image& image, const Mask& mask) {
  if (mask.count() == 0) throw NumericError("extract_features: empty mask");
  const int h = image.h, w = image.w;

  std::vector<double> gray(static_cast<std::size_t>(h) * w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      gray[static_cast<std::size_t>(r) * w + c] =
          (image.at(r, c, 0) + image.at(r, c, 1) + image.at(r, c, 2)) / 3.0;

  auto gray_at = [&](int r, int c) {
    return gray[static_cast<std::size_t>(clampi(r, h - 1)) * w + clampi(c, w - 1)];
  };
  auto img_at = [&](int r, int c, int ch) {
    return image.at(clampi(r, h - 1), clampi(c, w - 1), ch);
  };

  CellGrid grid = cell_grid(h, w);
  ColoredPointSet out;
  out.attr_dim = kFeatureDim;
  for (int ci = 0; ci < grid.cells_h; ++ci) {
    int r0 = grid.r0(ci), r1 = std::min(r0 + kFeatureStride, h);
    for (int cj = 0; cj < grid.cells_w; ++cj) {
      int c0 = grid.c0(cj), c1 = std::min(c0 + kFeatureStride, w);
      int area = (r1 - r0) * (c1 - c0);
      int fg = 0;
      for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) fg += mask.at(r, c) ? 1 : 0;
      if (2 * fg < area) continue;

      double feat[kFeatureDim] = {0};
      for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) {
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              double g = gray_at(r + dy, c + dx);
              feat[0] += kSobelX[dy + 1][dx + 1] * g;
              feat[1] += kSobelY[dy + 1][dx + 1] * g;
            }
          for (int dy = -2; dy <= 2; ++dy)
            for (int dx = -2; dx <= 2; ++dx) {
              double kb = kBinom5[dy + 2] * kBinom5[dx + 2];
              for (int ch = 0; ch < 3; ++ch)
                feat[2 + ch] += kb * img_at(r + dy, c + dx, ch);
            }
          for (int ch = 0; ch < 3; ++ch) feat[5 + ch] += image.at(r, c, ch);
        }
      double inv_area = 1.0 / area;
      for (double& f : feat) f *= inv_area;

      out.pos.push_back(static_cast<double>(c0 + c1) / w - 1.0);
      out.pos.push_back(1.0 - static_cast<double>(r0 + r1) / h);
      for (double f : feat) out.attr.push_back(f);
      out.source.push_back(static_cast<std::uint32_t>(ci * grid.cells_w + cj));
      ++out.n;
    }
  }
  if (out.n == 0) throw NumericError("extract_features: no foreground cells");
  return out;
}

void feature_grad_to_image(const ColoredPointSet& features,
                           const std::vector<double>& grad_attr,
                           const Mask& mask, Image& grad_image) {
  const int h = grad_image.h, w = grad_image.w;
  (void)mask;
  CellGrid grid = cell_grid(h, w);
  auto add = [&](int r, int c, int ch, double g) {
    grad_image.at(clampi(r, h - 1), clampi(c, w - 1), ch) += g;
  };
  for (std::size_t k = 0; k < features.n; ++k) {
    int ci = static_cast<int>(features.source[k]) / grid.cells_w;
    int cj = static_cast<int>(features.source[k]) % grid.cells_w;
    int r0 = grid.r0(ci), r1 = std::min(r0 + kFeatureStride, h);
    int c0 = grid.c0(cj), c1 = std::min(c0 + kFeatureStride, w);
    double inv_area = 1.0 / ((r1 - r0) * (c1 - c0));
    const double* g = grad_attr.data() + k * kFeatureDim;
    for (int r = r0; r < r1; ++r)
      for (int c = c0; c < c1; ++c) {
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            double gg = (kSobelX[dy + 1][dx + 1] * g[0] +
                         kSobelY[dy + 1][dx + 1] * g[1]) *
                        inv_area / 3.0;
            for (int ch = 0; ch < 3; ++ch) add(r + dy, c + dx, ch, gg);
          }
        for (int dy = -2; dy <= 2; ++dy)
          for (int dx = -2; dx <= 2; ++dx) {
            double kb = kBinom5[dy + 2] * kBinom5[dx + 2] * inv_area;
            for (int ch = 0; ch < 3; ++ch)
              add(r + dy, c + dx, ch, kb * g[2 + ch]);
          }
        for (int ch = 0; ch < 3; ++ch)
          grad_image.at(r, c, ch) += inv_area * g[5 + ch];
      }
  }
}

double pixel_chamfer_texture_loss(const Image& rendered, const Mask& r_mask,
                                  const Image& input, const Mask& i_mask,
                                  std::size_t n_sample,
                                  const ChamferTexParams& p, Rng& rng) {
  ColoredPointSet a = image_to_points(rendered, r_mask, n_sample, rng);
  ColoredPointSet b = image_to_points(input, i_mask, n_sample, rng);
  return chamfer_set_distance(a, b, p);
}

double pixel_chamfer_texture_loss_grad(const Image& rendered,
                                       const Mask& r_mask, const Image& input,
                                       const Mask& i_mask,
                                       std::size_t n_sample,
                                       const ChamferTexParams& p, Rng& rng,
                                       Image* grad_rendered) {
  ColoredPointSet a = image_to_points(rendered, r_mask, n_sample, rng);
  ColoredPointSet b = image_to_points(input, i_mask, n_sample, rng);
  std::vector<double> ga;
  double loss = chamfer_set_distance_grad(a, b, p, &ga, nullptr);
  if (grad_rendered)
    for (std::size_t i = 0; i < a.n; ++i)
      for (int ch = 0; ch < 3; ++ch)
        grad_rendered->rgb[a.source[i] * 3 + ch] += ga[i * 3 + ch];
  return loss;
}

double feature_chamfer_texture_loss(const Image& rendered, const Mask& r_mask,
                                    const Image& input, const Mask& i_mask,
                                    const ChamferTexParams& p) {
  ColoredPointSet a = extract_features(rendered, r_mask);
  ColoredPointSet b = extract_features(input, i_mask);
  return chamfer_set_distance(a, b, p);
}

double feature_chamfer_texture_loss_grad(const Image& rendered,
                                         const Mask& r_mask,
                                         const Image& input,
                                         const Mask& i_mask,
                                         const ChamferTexParams& p,
                                         Image* grad_rendered) {
  ColoredPointSet a = extract_features(rendered, r_mask);
  ColoredPointSet b = extract_features(input, i_mask);
  std::vector<double> ga;
  double loss = chamfer_set_distance_grad(a, b, p, &ga, nullptr);
  if (grad_rendered) feature_grad_to_image(a, ga, r_mask, *grad_rendered);
  return loss;
}

}  // namespace meshfit
