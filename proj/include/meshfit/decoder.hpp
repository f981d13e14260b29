#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "meshfit/tensor.hpp"

namespace meshfit {

struct DecoderDims {
  int latent = 64;
  int hidden = 256;
  int grid_h = 32;
  int grid_w = 32;
  int tex_h = 64;
  int tex_w = 64;
  int fourier_k = 16;
};

// Fixed smooth generator z -> (half deformation grid, texture map):
// a tanh hidden layer feeds an affine head for the half-grid deformation
// logits and an affine head for texture Fourier coefficients. Weights are
// immutable during inversion.
struct DecoderWeights {
  DecoderDims dims;
  Tensor w1, b1;            // (hidden, latent), (hidden)
  Tensor w_def, b_def;      // (def_out, hidden), (def_out)
  Tensor w_tex, b_tex;      // (tex_out, hidden), (tex_out)
  Tensor fourier_freqs;     // (fourier_k, 2)
  Tensor tex_basis;         // cached (tex_h*tex_w, 2k+1); rebuilt on load

  int def_out() const;
  int feat_count() const { return 2 * dims.fourier_k + 1; }
  int tex_out() const { return 3 * feat_count(); }
  void build_tex_basis();
};

DecoderWeights init_decoder(std::uint64_t seed, const DecoderDims& dims);

void save_decoder(const std::string& path, const DecoderWeights& w);
DecoderWeights load_decoder(const std::string& path, const DecoderDims& dims);

// Forward pass with the intermediates the backward pass needs.
struct Decoded {
  Tensor deformation;  // full (grid_h, grid_w, 3), symmetrized
  Tensor texture;      // (tex_h, tex_w, 3) in [0,1]
  std::vector<double> hidden;    // tanh activations
  std::vector<double> def_tanh;  // tanh of deformation logits
  Tensor def_half;               // 0.3 * def_tanh, (grid_h, half_w, 3)
};

Decoded decode(const std::vector<double>& z, const DecoderWeights& w);

// d(loss)/dz from gradients on the full deformation grid and/or texture.
std::vector<double> decode_backward(const Decoded& d, const DecoderWeights& w,
                                    const Tensor* grad_deformation,
                                    const Tensor* grad_texture);

}  // namespace meshfit
