#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "meshfit/camera.hpp"
#include "meshfit/decoder.hpp"
#include "meshfit/geometry.hpp"
#include "meshfit/losses.hpp"
#include "meshfit/render.hpp"

namespace meshfit {

struct InversionConfig {
  std::vector<double> stage_lr_z = {1e-1, 5e-2, 1e-2, 5e-3};
  std::vector<double> stage_lr_cam = {1e-2, 5e-3, 1e-3, 5e-4};
  std::vector<int> stage_iters = {50, 50, 50, 50};
  LossWeights weights;
  ChamferTexParams tex_params;
  double adam_beta1 = 0.0;
  double adam_beta2 = 0.99;
  std::size_t n_sample = 8096;
  bool resample_points = true;  // fresh pixel subsets every iteration
  bool reset_moments = true;    // Adam moments reset at stage boundaries
  std::uint64_t seed = 1;
  RenderConfig render;

  void validate() const;
  int total_iters() const;
};

struct Target {
  Image image;
  Mask mask;
  CameraPose init_pose;
  std::vector<Vec2> mask_points;       // precomputed S_f
  ColoredPointSet input_features;      // precomputed feature set

  static Target prepare(Image image, Mask mask, CameraPose init_pose);
};

struct ObjectiveTerms {
  double total = 0.0;  // weighted sum
  double pct = 0.0, fct = 0.0, cm = 0.0, smooth = 0.0, z = 0.0;  // raw terms
};

struct ObjectiveResult {
  ObjectiveTerms terms;
  std::vector<double> grad_z;
  std::array<double, 7> grad_cam{};  // (s, tx, ty, qw, qx, qy, qz)
};

// Bundles the decoder, sphere template, target, and config. The objective
// splits into a nondifferentiable rasterization binding (coverage + texel
// weights, refreshed every iteration) and a smooth evaluation at fixed
// binding; gradients are exact for the latter, which is what the
// finite-difference suite checks.
class InversionProblem {
 public:
  InversionProblem(const DecoderWeights& weights, const Target& target,
                   const InversionConfig& cfg);

  RenderOutput bind(const std::vector<double>& z, const CameraPose& pose) const;

  ObjectiveResult objective_at(const std::vector<double>& z,
                               const CameraPose& pose,
                               const RenderOutput& binding,
                               std::uint64_t sample_seed, bool want_grad) const;

  // bind + objective_at; the gradient path documented for Eq.-style use.
  ObjectiveResult objective(const std::vector<double>& z,
                            const CameraPose& pose, std::uint64_t sample_seed,
                            bool want_grad) const;

  // Chamfer texture term alone, reusing an existing binding (used for the
  // fixed-seed best-iterate bookkeeping).
  double pixel_term(const std::vector<double>& z, const RenderOutput& binding,
                    std::uint64_t sample_seed) const;

  const MeshTopology& topology() const { return topo_; }
  const DecoderWeights& decoder() const { return weights_; }
  const Target& target() const { return target_; }
  const InversionConfig& config() const { return cfg_; }

 private:
  const DecoderWeights& weights_;
  const Target& target_;
  InversionConfig cfg_;
  MeshTopology topo_;
};

struct AdamState {
  std::vector<double> m, v;
  long t = 0;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
  void reset();
};

void adam_step(std::vector<double>& x, const std::vector<double>& g,
               AdamState& state, double lr, double beta1, double beta2,
               double eps = 1e-8);

struct TraceRow {
  int stage = 0;
  int iter = 0;
  ObjectiveTerms terms;
  double eval_total = 0.0;  // fixed-seed objective used for best selection
  double best_total = 0.0;  // running minimum of eval_total
};

struct InversionResult {
  std::vector<double> z;
  CameraPose pose;
  Tensor deformation;
  Tensor texture;
  std::vector<Vec3> vertices;
  ObjectiveTerms final_terms;
  std::vector<TraceRow> trace;
  int best_stage = 0;
  int best_iter = 0;
};

InversionResult invert(const Target& target, const InversionConfig& cfg,
                       const DecoderWeights& weights);

}  // namespace meshfit
