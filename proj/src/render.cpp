#include "meshfit/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "meshfit/kernels.hpp"

namespace meshfit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct PreparedTri {
  double px[3], py[3];   // pixel-center space
  double dist[3];        // camera distance per corner
  double u[3], v[3];
  double inv_area2;
  int row0, row1, col0, col1;
};

struct PixelHit {
  double dist = kInf;
  double u = 0.0, v = 0.0;
};

struct Sample {
  int ix[4];
  int iy[4];
  double w[4];
  int count;
};

// Bilinear taps at texture coordinate (u, v); texel centers at
// ((col+0.5)/W, (row+0.5)/H). Duplicate taps from border clamping merge.
Sample bilinear_taps(double u, double v, int th, int tw) {
  double xf = u * tw - 0.5;
  double yf = v * th - 0.5;
  double x0 = std::floor(xf);
  double y0 = std::floor(yf);
  double fx = xf - x0;
  double fy = yf - y0;
  auto clampi = [](int a, int hi) { return a < 0 ? 0 : (a > hi ? hi : a); };
  int xs[2] = {clampi(static_cast<int>(x0), tw - 1),
               clampi(static_cast<int>(x0) + 1, tw - 1)};
  int ys[2] = {clampi(static_cast<int>(y0), th - 1),
               clampi(static_cast<int>(y0) + 1, th - 1)};
  double wx[2] = {1.0 - fx, fx};
  double wy[2] = {1.0 - fy, fy};
  Sample s{};
  s.count = 0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      double w = wx[b] * wy[a];
      if (w == 0.0) continue;
      int k = 0;
      for (; k < s.count; ++k)
        if (s.ix[k] == xs[b] && s.iy[k] == ys[a]) break;
      if (k == s.count) {
        s.ix[k] = xs[b];
        s.iy[k] = ys[a];
        s.w[k] = w;
        ++s.count;
      } else {
        s.w[k] += w;
      }
    }
  return s;
}

// Exact for constant textures, unlike the weight sum.
Vec3 sample_nested_lerp(const Tensor& t, double u, double v) {
  int th = static_cast<int>(t.shape[0]);
  int tw = static_cast<int>(t.shape[1]);
  double xf = u * tw - 0.5;
  double yf = v * th - 0.5;
  double x0 = std::floor(xf);
  double y0 = std::floor(yf);
  double fx = xf - x0;
  double fy = yf - y0;
  auto clampi = [](int a, int hi) { return a < 0 ? 0 : (a > hi ? hi : a); };
  int xa = clampi(static_cast<int>(x0), tw - 1);
  int xb = clampi(static_cast<int>(x0) + 1, tw - 1);
  int ya = clampi(static_cast<int>(y0), th - 1);
  int yb = clampi(static_cast<int>(y0) + 1, th - 1);
  Vec3 out;
  double* o = &out.x;
  for (int ch = 0; ch < 3; ++ch) {
    double c00 = t.at(ya, xa, ch), c10 = t.at(ya, xb, ch);
    double c01 = t.at(yb, xa, ch), c11 = t.at(yb, xb, ch);
    double cx0 = c00 + fx * (c10 - c00);
    double cx1 = c01 + fx * (c11 - c01);
    o[ch] = cx0 + fy * (cx1 - cx0);
  }
  return out;
}

void raster_row(int r, const std::vector<PreparedTri>& tris,
                const std::vector<int>& row_tris, PixelHit* row_hits) {
  double py = static_cast<double>(r);
  for (int ti : row_tris) {
    const PreparedTri& t = tris[ti];
    for (int c = t.col0; c <= t.col1; ++c) {
      double px = static_cast<double>(c);
      double l1 = ((px - t.px[0]) * (t.py[2] - t.py[0]) -
                   (py - t.py[0]) * (t.px[2] - t.px[0])) *
                  t.inv_area2;
      double l2 = ((t.px[1] - t.px[0]) * (py - t.py[0]) -
                   (t.py[1] - t.py[0]) * (px - t.px[0])) *
                  t.inv_area2;
      double l0 = 1.0 - l1 - l2;
      if (l0 < 0.0 || l1 < 0.0 || l2 < 0.0) continue;
      double dist = l0 * t.dist[0] + l1 * t.dist[1] + l2 * t.dist[2];
      PixelHit& hit = row_hits[c];
      if (dist < hit.dist) {
        hit.dist = dist;
        hit.u = l0 * t.u[0] + l1 * t.u[1] + l2 * t.u[2];
        hit.v = l0 * t.v[0] + l1 * t.v[1] + l2 * t.v[2];
      }
    }
  }
}

}  // namespace

RenderOutput rasterize(const std::vector<Vec3>& v,
                       const std::vector<std::array<int, 3>>& faces,
                       const std::vector<Vec2>& uv, const Tensor& texture,
                       const CameraPose& pose, const RenderConfig& rc) {
  if (rc.resolution < 16)
    throw NumericError("rasterize: resolution must be >= 16");
  if (texture.rank() != 3 || texture.shape[2] != 3)
    throw NumericError("rasterize: texture must be H x W x 3");

  const int res = rc.resolution;
  Projection proj = project_weak_perspective(pose, v);

  // Normalized [-1,1] -> pixel-center space where pixel (r, c) is (c, r).
  auto to_px = [&](double x) { return (x + 1.0) * res / 2.0 - 0.5; };
  auto to_py = [&](double y) { return (1.0 - y) * res / 2.0 - 0.5; };

  std::vector<PreparedTri> tris;
  tris.reserve(faces.size());
  std::vector<std::vector<int>> row_bins(static_cast<std::size_t>(res));
  for (const auto& f : faces) {
    PreparedTri t;
    for (int k = 0; k < 3; ++k) {
      t.px[k] = to_px(proj.points[f[k]].x);
      t.py[k] = to_py(proj.points[f[k]].y);
      t.dist[k] = -proj.depth[f[k]];
      t.u[k] = uv[f[k]].x;
      t.v[k] = uv[f[k]].y;
    }
    double area2 = (t.px[1] - t.px[0]) * (t.py[2] - t.py[0]) -
                   (t.py[1] - t.py[0]) * (t.px[2] - t.px[0]);
    if (std::fabs(area2) < 1e-14) continue;
    t.inv_area2 = 1.0 / area2;
    double minx = std::min({t.px[0], t.px[1], t.px[2]});
    double maxx = std::max({t.px[0], t.px[1], t.px[2]});
    double miny = std::min({t.py[0], t.py[1], t.py[2]});
    double maxy = std::max({t.py[0], t.py[1], t.py[2]});
    t.col0 = std::max(0, static_cast<int>(std::ceil(minx)));
    t.col1 = std::min(res - 1, static_cast<int>(std::floor(maxx)));
    t.row0 = std::max(0, static_cast<int>(std::ceil(miny)));
    t.row1 = std::min(res - 1, static_cast<int>(std::floor(maxy)));
    if (t.col0 > t.col1 || t.row0 > t.row1) continue;
    int idx = static_cast<int>(tris.size());
    tris.push_back(t);
    for (int r = t.row0; r <= t.row1; ++r) row_bins[r].push_back(idx);
  }

  std::vector<PixelHit> hits(static_cast<std::size_t>(res) * res);
  if (kernels::parallel_enabled()) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < res; ++r)
      raster_row(r, tris, row_bins[r],
                 hits.data() + static_cast<std::size_t>(r) * res);
  } else {
    for (int r = 0; r < res; ++r)
      raster_row(r, tris, row_bins[r],
                 hits.data() + static_cast<std::size_t>(r) * res);
  }

  RenderOutput out;
  out.image = Image(res, res, rc.background);
  out.mask = Mask(res, res);
  out.depth.assign(static_cast<std::size_t>(res) * res, kInf);
  out.weight_begin.push_back(0);
  const int th = static_cast<int>(texture.shape[0]);
  const int tw = static_cast<int>(texture.shape[1]);
  for (int r = 0; r < res; ++r) {
    for (int c = 0; c < res; ++c) {
      const PixelHit& hit = hits[static_cast<std::size_t>(r) * res + c];
      if (hit.dist == kInf) continue;
      std::uint32_t pid = static_cast<std::uint32_t>(r) * res + c;
      out.mask.set(r, c, true);
      out.depth[pid] = hit.dist;
      Vec3 rgb = sample_nested_lerp(texture, hit.u, hit.v);
      out.image.at(r, c, 0) = rgb.x;
      out.image.at(r, c, 1) = rgb.y;
      out.image.at(r, c, 2) = rgb.z;
      Sample s = bilinear_taps(hit.u, hit.v, th, tw);
      for (int k = 0; k < s.count; ++k)
        out.texel_weights.push_back(
            {static_cast<std::uint32_t>(s.iy[k] * tw + s.ix[k]), s.w[k]});
      out.fg_pixels.push_back(pid);
      out.weight_begin.push_back(
          static_cast<std::uint32_t>(out.texel_weights.size()));
    }
  }
  return out;
}

Image image_from_weights(const RenderOutput& ro, const Tensor& texture,
                         Vec3 background) {
  Image img(ro.image.h, ro.image.w, background);
  for (std::size_t p = 0; p < ro.fg_pixels.size(); ++p) {
    double rgb[3] = {0, 0, 0};
    for (std::uint32_t k = ro.weight_begin[p]; k < ro.weight_begin[p + 1]; ++k) {
      const TexelWeight& tw = ro.texel_weights[k];
      for (int ch = 0; ch < 3; ++ch)
        rgb[ch] += tw.weight * texture.data[tw.texel * 3 + ch];
    }
    std::uint32_t pid = ro.fg_pixels[p];
    for (int ch = 0; ch < 3; ++ch) img.rgb[pid * 3 + ch] = rgb[ch];
  }
  return img;
}

Tensor texture_grad_from_image(const RenderOutput& ro, const Image& grad_image,
                               std::size_t tex_h, std::size_t tex_w) {
  Tensor grad({tex_h, tex_w, 3});
  for (std::size_t p = 0; p < ro.fg_pixels.size(); ++p) {
    std::uint32_t pid = ro.fg_pixels[p];
    const double* g = grad_image.rgb.data() + pid * 3;
    for (std::uint32_t k = ro.weight_begin[p]; k < ro.weight_begin[p + 1]; ++k) {
      const TexelWeight& tw = ro.texel_weights[k];
      for (int ch = 0; ch < 3; ++ch)
        grad.data[tw.texel * 3 + ch] += tw.weight * g[ch];
    }
  }
  return grad;
}

ColoredPointSet image_to_points(const Image& image, const Mask& mask,
                                std::size_t n_sample, Rng& rng) {
  std::vector<std::uint32_t> fg;
  for (int r = 0; r < mask.h; ++r)
    for (int c = 0; c < mask.w; ++c)
      if (mask.at(r, c)) fg.push_back(static_cast<std::uint32_t>(r) * mask.w + c);
  if (fg.empty()) throw NumericError("image_to_points: empty mask");

  std::size_t take = std::min(n_sample, fg.size());
  // Partial Fisher-Yates keeps the selection uniform without replacement.
  for (std::size_t i = 0; i < take; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(fg.size() - i));
    std::swap(fg[i], fg[j]);
  }

  ColoredPointSet out;
  out.n = take;
  out.attr_dim = 3;
  out.pos.resize(take * 2);
  out.attr.resize(take * 3);
  out.source.assign(fg.begin(), fg.begin() + static_cast<std::ptrdiff_t>(take));
  for (std::size_t i = 0; i < take; ++i) {
    int r = static_cast<int>(fg[i]) / mask.w;
    int c = static_cast<int>(fg[i]) % mask.w;
    out.pos[2 * i + 0] = pixel_center_x(c, mask.w);
    out.pos[2 * i + 1] = pixel_center_y(r, mask.h);
    for (int ch = 0; ch < 3; ++ch) out.attr[3 * i + ch] = image.at(r, c, ch);
  }
  return out;
}

std::vector<Vec2> mask_to_points(const Mask& mask) {
  std::vector<Vec2> pts;
  for (int r = 0; r < mask.h; ++r)
    for (int c = 0; c < mask.w; ++c)
      if (mask.at(r, c))
        pts.push_back({pixel_center_x(c, mask.w), pixel_center_y(r, mask.h)});
  if (pts.empty()) throw NumericError("mask_to_points: empty mask");
  return pts;
}

}  // namespace meshfit
