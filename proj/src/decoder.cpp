#include "meshfit/decoder.hpp"

#include <cmath>

#include "meshfit/geometry.hpp"

namespace meshfit {

namespace {

// y = W x + b for row-major W (rows, cols).
void affine(const Tensor& w, const Tensor& b, const std::vector<double>& x,
            std::vector<double>& y) {
  std::size_t rows = w.shape[0], cols = w.shape[1];
  y.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = b.data[r];
    const double* wr = w.data.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) s += wr[c] * x[c];
    y[r] = s;
  }
}

// x_grad += W^T y_grad
void affine_backward(const Tensor& w, const std::vector<double>& y_grad,
                     std::vector<double>& x_grad) {
  std::size_t rows = w.shape[0], cols = w.shape[1];
  for (std::size_t r = 0; r < rows; ++r) {
    double g = y_grad[r];
    if (g == 0.0) continue;
    const double* wr = w.data.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) x_grad[c] += wr[c] * g;
  }
}

Tensor gaussian_tensor(Rng& rng, std::vector<std::size_t> shape, double scale) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = scale * rng.gaussian();
  return t;
}

// In-place 3x3 binomial blur of a (h, w) map with clamped edges.
void blur_map(std::vector<double>& m, int h, int w) {
  static const double k3[3] = {0.25, 0.5, 0.25};
  std::vector<double> tmp(m.size());
  auto at = [&](const std::vector<double>& v, int r, int c) {
    r = r < 0 ? 0 : (r >= h ? h - 1 : r);
    c = c < 0 ? 0 : (c >= w ? w - 1 : c);
    return v[static_cast<std::size_t>(r) * w + c];
  };
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double s = 0.0;
      for (int d = -1; d <= 1; ++d) s += k3[d + 1] * at(m, r, c + d);
      tmp[static_cast<std::size_t>(r) * w + c] = s;
    }
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double s = 0.0;
      for (int d = -1; d <= 1; ++d) s += k3[d + 1] * at(tmp, r + d, c);
      m[static_cast<std::size_t>(r) * w + c] = s;
    }
}

constexpr double kDefAmplitude = 0.3;
constexpr double kTexGain = 0.5;   // keeps sigmoid inputs out of saturation
constexpr double kFreqScale = 1.5; // cycles across the unit UV square

}  // namespace

int DecoderWeights::def_out() const {
  return dims.grid_h * half_grid_width(dims.grid_w) * 3;
}

void DecoderWeights::build_tex_basis() {
  int n_px = dims.tex_h * dims.tex_w;
  int nf = feat_count();
  tex_basis = Tensor({static_cast<std::size_t>(n_px),
                      static_cast<std::size_t>(nf)});
  for (int i = 0; i < dims.tex_h; ++i) {
    double v = (i + 0.5) / dims.tex_h;
    for (int j = 0; j < dims.tex_w; ++j) {
      double u = (j + 0.5) / dims.tex_w;
      double* row = tex_basis.data.data() +
                    static_cast<std::size_t>(i * dims.tex_w + j) * nf;
      for (int k = 0; k < dims.fourier_k; ++k) {
        double ang = 2.0 * kPi * (fourier_freqs.at(k, 0) * u +
                                  fourier_freqs.at(k, 1) * v);
        row[2 * k] = std::sin(ang);
        row[2 * k + 1] = std::cos(ang);
      }
      row[nf - 1] = 1.0;  // DC
    }
  }
}

DecoderWeights init_decoder(std::uint64_t seed, const DecoderDims& dims) {
  if (dims.latent < 1 || dims.hidden < 1 || dims.grid_h < 3 ||
      dims.grid_w < 3 || dims.tex_h < 1 || dims.tex_w < 1 || dims.fourier_k < 1)
    throw NumericError("init_decoder: invalid dims");

  DecoderWeights w;
  w.dims = dims;
  Rng rng(seed);
  std::size_t hidden = static_cast<std::size_t>(dims.hidden);
  std::size_t latent = static_cast<std::size_t>(dims.latent);
  std::size_t dout = static_cast<std::size_t>(w.def_out());
  std::size_t tout = static_cast<std::size_t>(w.tex_out());

  w.w1 = gaussian_tensor(rng, {hidden, latent}, 1.0 / std::sqrt(dims.latent));
  w.b1 = Tensor({hidden});
  w.w_def =
      gaussian_tensor(rng, {dout, hidden}, 1.0 / std::sqrt(dims.hidden));
  w.b_def = Tensor({dout});
  w.w_tex = gaussian_tensor(rng, {tout, hidden},
                            kTexGain / std::sqrt(dims.hidden));
  w.b_tex = Tensor({tout});
  w.fourier_freqs = gaussian_tensor(
      rng, {static_cast<std::size_t>(dims.fourier_k), 2}, kFreqScale);

  // Correlate the deformation head spatially so decoded offsets vary smoothly
  // across the grid; each column is rescaled back to its pre-blur magnitude.
  int gh = dims.grid_h, gw_half = half_grid_width(dims.grid_w);
  std::vector<double> col(static_cast<std::size_t>(gh) * gw_half);
  for (std::size_t u = 0; u < hidden; ++u) {
    for (int ch = 0; ch < 3; ++ch) {
      double before = 0.0;
      for (int m = 0; m < gh * gw_half; ++m) {
        col[m] = w.w_def.data[static_cast<std::size_t>(m * 3 + ch) * hidden + u];
        before += col[m] * col[m];
      }
      blur_map(col, gh, gw_half);
      blur_map(col, gh, gw_half);
      double after = 0.0;
      for (double v : col) after += v * v;
      double rescale = after > 0.0 ? std::sqrt(before / after) : 1.0;
      for (int m = 0; m < gh * gw_half; ++m)
        w.w_def.data[static_cast<std::size_t>(m * 3 + ch) * hidden + u] =
            col[m] * rescale;
    }
  }

  w.build_tex_basis();
  return w;
}

void save_decoder(const std::string& path, const DecoderWeights& w) {
  save_tensors(path, {{"w1", w.w1},
                      {"b1", w.b1},
                      {"w_def", w.w_def},
                      {"b_def", w.b_def},
                      {"w_tex", w.w_tex},
                      {"b_tex", w.b_tex},
                      {"fourier_freqs", w.fourier_freqs}});
}

DecoderWeights load_decoder(const std::string& path, const DecoderDims& dims) {
  NamedTensors nt = load_tensors(path);
  DecoderWeights w;
  w.dims = dims;
  auto take = [&](const char* name, std::vector<std::size_t> want) -> Tensor {
    const Tensor* t = find_tensor(nt, name);
    if (!t) throw IoError(std::string("load_decoder: missing tensor ") + name);
    if (t->shape != want)
      throw IoError(std::string("load_decoder: shape mismatch for ") + name);
    return *t;
  };
  std::size_t hidden = static_cast<std::size_t>(dims.hidden);
  w.w1 = take("w1", {hidden, static_cast<std::size_t>(dims.latent)});
  w.b1 = take("b1", {hidden});
  w.w_def = take("w_def", {static_cast<std::size_t>(w.def_out()), hidden});
  w.b_def = take("b_def", {static_cast<std::size_t>(w.def_out())});
  w.w_tex = take("w_tex", {static_cast<std::size_t>(w.tex_out()), hidden});
  w.b_tex = take("b_tex", {static_cast<std::size_t>(w.tex_out())});
  w.fourier_freqs =
      take("fourier_freqs", {static_cast<std::size_t>(dims.fourier_k), 2});
  w.build_tex_basis();
  return w;
}

Decoded decode(const std::vector<double>& z, const DecoderWeights& w) {
  if (static_cast<int>(z.size()) != w.dims.latent)
    throw NumericError("decode: latent dim mismatch");

  Decoded d;
  std::vector<double> h_pre;
  affine(w.w1, w.b1, z, h_pre);
  d.hidden.resize(h_pre.size());
  for (std::size_t i = 0; i < h_pre.size(); ++i)
    d.hidden[i] = std::tanh(h_pre[i]);

  std::vector<double> def_pre;
  affine(w.w_def, w.b_def, d.hidden, def_pre);
  int gh = w.dims.grid_h, gw_half = half_grid_width(w.dims.grid_w);
  d.def_tanh.resize(def_pre.size());
  d.def_half = Tensor({static_cast<std::size_t>(gh),
                       static_cast<std::size_t>(gw_half), 3});
  for (std::size_t i = 0; i < def_pre.size(); ++i) {
    d.def_tanh[i] = std::tanh(def_pre[i]);
    d.def_half.data[i] = kDefAmplitude * d.def_tanh[i];
  }
  d.deformation = symmetrize(d.def_half, w.dims.grid_h, w.dims.grid_w);

  std::vector<double> coef;
  affine(w.w_tex, w.b_tex, d.hidden, coef);
  int nf = w.feat_count();
  int n_px = w.dims.tex_h * w.dims.tex_w;
  d.texture = Tensor({static_cast<std::size_t>(w.dims.tex_h),
                      static_cast<std::size_t>(w.dims.tex_w), 3});
  for (int m = 0; m < n_px; ++m) {
    const double* basis = w.tex_basis.data.data() +
                          static_cast<std::size_t>(m) * nf;
    for (int ch = 0; ch < 3; ++ch) {
      const double* cf = coef.data() + static_cast<std::size_t>(ch) * nf;
      double s = 0.0;
      for (int f = 0; f < nf; ++f) s += cf[f] * basis[f];
      double sig = 1.0 / (1.0 + std::exp(-s));
      d.texture.data[static_cast<std::size_t>(m) * 3 + ch] =
          sig < 0.0 ? 0.0 : (sig > 1.0 ? 1.0 : sig);
    }
  }

  if (!d.deformation.all_finite() || !d.texture.all_finite())
    throw NumericError("decode: non-finite output");
  return d;
}

std::vector<double> decode_backward(const Decoded& d, const DecoderWeights& w,
                                    const Tensor* grad_deformation,
                                    const Tensor* grad_texture) {
  std::vector<double> g_hidden(static_cast<std::size_t>(w.dims.hidden), 0.0);

  if (grad_deformation) {
    Tensor g_half =
        symmetrize_backward(*grad_deformation, w.dims.grid_h, w.dims.grid_w);
    std::vector<double> g_def_pre(g_half.numel());
    for (std::size_t i = 0; i < g_half.numel(); ++i)
      g_def_pre[i] =
          g_half.data[i] * kDefAmplitude * (1.0 - sqr(d.def_tanh[i]));
    affine_backward(w.w_def, g_def_pre, g_hidden);
  }

  if (grad_texture) {
    int nf = w.feat_count();
    int n_px = w.dims.tex_h * w.dims.tex_w;
    std::vector<double> g_coef(static_cast<std::size_t>(w.tex_out()), 0.0);
    for (int m = 0; m < n_px; ++m) {
      const double* basis =
          w.tex_basis.data.data() + static_cast<std::size_t>(m) * nf;
      for (int ch = 0; ch < 3; ++ch) {
        double sig = d.texture.data[static_cast<std::size_t>(m) * 3 + ch];
        double g = grad_texture->data[static_cast<std::size_t>(m) * 3 + ch] *
                   sig * (1.0 - sig);
        if (g == 0.0) continue;
        double* cf = g_coef.data() + static_cast<std::size_t>(ch) * nf;
        for (int f = 0; f < nf; ++f) cf[f] += g * basis[f];
      }
    }
    affine_backward(w.w_tex, g_coef, g_hidden);
  }

  std::vector<double> g_h_pre(g_hidden.size());
  for (std::size_t i = 0; i < g_hidden.size(); ++i)
    g_h_pre[i] = g_hidden[i] * (1.0 - sqr(d.hidden[i]));
  std::vector<double> g_z(static_cast<std::size_t>(w.dims.latent), 0.0);
  affine_backward(w.w1, g_h_pre, g_z);
  return g_z;
}

}  // namespace meshfit
