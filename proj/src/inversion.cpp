#include "meshfit/inversion.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace meshfit {

void InversionConfig::validate() const {
  if (stage_lr_z.empty() || stage_lr_z.size() != stage_lr_cam.size() ||
      stage_lr_z.size() != stage_iters.size())
    throw ConfigError("inversion: stage lists must share a length >= 1");
  for (double lr : stage_lr_z)
    if (!(lr > 0.0)) throw ConfigError("inversion: stage_lr_z must be > 0");
  for (double lr : stage_lr_cam)
    if (!(lr >= 0.0)) throw ConfigError("inversion: stage_lr_cam must be >= 0");
  for (int it : stage_iters)
    if (it < 1) throw ConfigError("inversion: stage_iters must be >= 1");
  if (n_sample < 1) throw ConfigError("inversion: n_sample must be >= 1");
  tex_params.validate();
}

int InversionConfig::total_iters() const {
  int n = 0;
  for (int it : stage_iters) n += it;
  return n;
}

Target Target::prepare(Image image, Mask mask, CameraPose init_pose) {
  if (image.h != mask.h || image.w != mask.w)
    throw ConfigError("target: image and mask resolutions differ");
  Target t;
  t.image = std::move(image);
  t.mask = std::move(mask);
  t.init_pose = init_pose;
  t.mask_points = mask_to_points(t.mask);
  t.input_features = extract_features(t.image, t.mask);
  return t;
}

InversionProblem::InversionProblem(const DecoderWeights& weights,
                                   const Target& target,
                                   const InversionConfig& cfg)
    : weights_(weights), target_(target), cfg_(cfg) {
  cfg_.validate();
  topo_ = build_sphere_template(weights.dims.grid_h, weights.dims.grid_w);
}

RenderOutput InversionProblem::bind(const std::vector<double>& z,
                                    const CameraPose& pose) const {
  Decoded dec = decode(z, weights_);
  std::vector<Vec3> v = apply_deformation(dec.deformation, topo_);
  RenderOutput ro =
      rasterize(v, topo_.faces, topo_.uv, dec.texture, pose, cfg_.render);
  if (ro.fg_pixels.empty())
    throw NumericError("objective: rendered mask is empty (camera lost the object)");
  return ro;
}

ObjectiveResult InversionProblem::objective_at(const std::vector<double>& z,
                                               const CameraPose& pose,
                                               const RenderOutput& binding,
                                               std::uint64_t sample_seed,
                                               bool want_grad) const {
  const LossWeights& lw = cfg_.weights;
  Decoded dec = decode(z, weights_);
  std::vector<Vec3> v = apply_deformation(dec.deformation, topo_);
  Projection proj = project_weak_perspective(pose, v);

  ObjectiveResult res;
  std::vector<Vec3> grad_v;
  if (want_grad) grad_v.assign(v.size(), Vec3{});

  // Geometric terms: Chamfer mask on projected vertices plus normals
  // smoothness. These are the only paths that move geometry.
  std::vector<Vec2> s_v(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) s_v[i] = proj.points[i];
  if (want_grad) {
    std::vector<Vec2> grad_sv;
    res.terms.cm = chamfer_mask_loss_grad(s_v, target_.mask_points, grad_sv);
    for (Vec2& g : grad_sv) {
      g.x *= lw.w_cm;
      g.y *= lw.w_cm;
    }
    CameraGrads cg = project_backward(pose, v, proj, grad_sv, &grad_v);
    res.grad_cam = cg.packed();

    std::vector<Vec3> grad_v_smooth;
    res.terms.smooth = smoothness_loss_grad(v, topo_.faces,
                                            topo_.adjacent_face_pairs,
                                            grad_v_smooth);
    for (std::size_t i = 0; i < v.size(); ++i)
      grad_v[i] += lw.w_smooth * grad_v_smooth[i];
  } else {
    res.terms.cm = chamfer_mask_loss(s_v, target_.mask_points);
    res.terms.smooth =
        smoothness_loss(v, topo_.faces, topo_.adjacent_face_pairs);
  }

  // Texture terms evaluated on the linear weight image at frozen coverage.
  Image image = image_from_weights(binding, dec.texture, cfg_.render.background);
  Image grad_image;
  if (want_grad) grad_image = Image(image.h, image.w, {0, 0, 0});

  Rng sample_rng(sample_seed);
  if (want_grad) {
    Image grad_pct(image.h, image.w, {0, 0, 0});
    res.terms.pct = pixel_chamfer_texture_loss_grad(
        image, binding.mask, target_.image, target_.mask, cfg_.n_sample,
        cfg_.tex_params, sample_rng, &grad_pct);
    Image grad_fct(image.h, image.w, {0, 0, 0});
    res.terms.fct = feature_chamfer_texture_loss_grad(
        image, binding.mask, target_.image, target_.mask, cfg_.tex_params,
        &grad_fct);
    for (std::size_t i = 0; i < grad_image.rgb.size(); ++i)
      grad_image.rgb[i] =
          lw.w_pct * grad_pct.rgb[i] + lw.w_fct * grad_fct.rgb[i];
  } else {
    res.terms.pct = pixel_chamfer_texture_loss(
        image, binding.mask, target_.image, target_.mask, cfg_.n_sample,
        cfg_.tex_params, sample_rng);
    res.terms.fct = feature_chamfer_texture_loss(
        image, binding.mask, target_.image, target_.mask, cfg_.tex_params);
  }

  res.terms.z = latent_reg(z);
  res.terms.total = lw.w_pct * res.terms.pct + lw.w_fct * res.terms.fct +
                    lw.w_cm * res.terms.cm + lw.w_smooth * res.terms.smooth +
                    lw.w_z * res.terms.z;
  if (!std::isfinite(res.terms.total))
    throw NumericError("objective: non-finite loss");

  if (want_grad) {
    Tensor grad_texture = texture_grad_from_image(
        binding, grad_image, dec.texture.shape[0], dec.texture.shape[1]);
    Tensor grad_deformation = apply_deformation_backward(grad_v, topo_);
    res.grad_z = decode_backward(dec, weights_, &grad_deformation, &grad_texture);
    latent_reg_grad(z, lw.w_z, res.grad_z);
  }
  return res;
}

ObjectiveResult InversionProblem::objective(const std::vector<double>& z,
                                            const CameraPose& pose,
                                            std::uint64_t sample_seed,
                                            bool want_grad) const {
  RenderOutput binding = bind(z, pose);
  return objective_at(z, pose, binding, sample_seed, want_grad);
}

double InversionProblem::pixel_term(const std::vector<double>& z,
                                    const RenderOutput& binding,
                                    std::uint64_t sample_seed) const {
  Decoded dec = decode(z, weights_);
  Image image = image_from_weights(binding, dec.texture, cfg_.render.background);
  Rng rng(sample_seed);
  return pixel_chamfer_texture_loss(image, binding.mask, target_.image,
                                    target_.mask, cfg_.n_sample,
                                    cfg_.tex_params, rng);
}

void AdamState::reset() {
  std::fill(m.begin(), m.end(), 0.0);
  std::fill(v.begin(), v.end(), 0.0);
  t = 0;
}

void adam_step(std::vector<double>& x, const std::vector<double>& g,
               AdamState& state, double lr, double beta1, double beta2,
               double eps) {
  if (x.size() != g.size() || x.size() != state.m.size())
    throw NumericError("adam_step: shape mismatch");
  ++state.t;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < x.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g[i] * g[i];
    double mhat = state.m[i] / bc1;
    double vhat = state.v[i] / bc2;
    x[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

namespace {

constexpr std::uint64_t kEvalSeedSalt = 0xE7A1u;

struct BestIterate {
  double eval = std::numeric_limits<double>::infinity();
  std::vector<double> z;
  CameraPose pose;
  int stage = 0;
  int iter = 0;
};

}  // namespace

InversionResult invert(const Target& target, const InversionConfig& cfg,
                       const DecoderWeights& weights) {
  cfg.validate();
  InversionProblem problem(weights, target, cfg);

  Rng run_rng(cfg.seed);
  std::vector<double> z(static_cast<std::size_t>(weights.dims.latent));
  for (double& v : z) v = run_rng.gaussian();
  CameraPose pose = target.init_pose;

  const std::uint64_t eval_seed = Rng(cfg.seed ^ kEvalSeedSalt).next_u64();
  const std::uint64_t frozen_seed = run_rng.next_u64();

  AdamState adam_z(z.size());
  AdamState adam_cam(7);
  BestIterate best;
  best.z = z;
  best.pose = pose;

  InversionResult result;
  int n_stages = static_cast<int>(cfg.stage_iters.size());
  for (int stage = 0; stage < n_stages; ++stage) {
    if (cfg.reset_moments) {
      adam_z.reset();
      adam_cam.reset();
    }
    double lr_z = cfg.stage_lr_z[static_cast<std::size_t>(stage)];
    double lr_cam = cfg.stage_lr_cam[static_cast<std::size_t>(stage)];
    for (int iter = 0; iter < cfg.stage_iters[static_cast<std::size_t>(stage)];
         ++iter) {
      std::uint64_t it_seed =
          cfg.resample_points ? run_rng.next_u64() : frozen_seed;
      try {
        RenderOutput binding = problem.bind(z, pose);
        ObjectiveResult obj =
            problem.objective_at(z, pose, binding, it_seed, true);

        double pct_eval = problem.pixel_term(z, binding, eval_seed);
        double eval_total = obj.terms.total +
                            cfg.weights.w_pct * (pct_eval - obj.terms.pct);
        if (eval_total < best.eval) {
          best.eval = eval_total;
          best.z = z;
          best.pose = pose;
          best.stage = stage;
          best.iter = iter;
        }
        result.trace.push_back(
            {stage, iter, obj.terms, eval_total, best.eval});

        adam_step(z, obj.grad_z, adam_z, lr_z, cfg.adam_beta1, cfg.adam_beta2);
        if (lr_cam > 0.0) {
          std::vector<double> cam(pose.packed().begin(), pose.packed().end());
          std::vector<double> g(obj.grad_cam.begin(), obj.grad_cam.end());
          adam_step(cam, g, adam_cam, lr_cam, cfg.adam_beta1, cfg.adam_beta2);
          if (cam[0] < 1e-3) cam[0] = 1e-3;  // scale stays positive
          pose = CameraPose::from_packed(
              {cam[0], cam[1], cam[2], cam[3], cam[4], cam[5], cam[6]});
        }
      } catch (const NumericError& e) {
        throw NumericError("stage " + std::to_string(stage) + " iter " +
                           std::to_string(iter) + ": " + e.what());
      }
    }
  }

  // The post-step iterate competes too.
  try {
    RenderOutput binding = problem.bind(z, pose);
    ObjectiveResult obj = problem.objective_at(z, pose, binding,
                                               frozen_seed, false);
    double pct_eval = problem.pixel_term(z, binding, eval_seed);
    double eval_total =
        obj.terms.total + cfg.weights.w_pct * (pct_eval - obj.terms.pct);
    if (eval_total < best.eval) {
      best.eval = eval_total;
      best.z = z;
      best.pose = pose;
      best.stage = n_stages - 1;
      best.iter = cfg.stage_iters.back();
    }
  } catch (const NumericError&) {
    // Final iterate diverged; the best snapshot still stands.
  }

  result.z = best.z;
  result.pose = best.pose;
  result.best_stage = best.stage;
  result.best_iter = best.iter;

  Decoded dec = decode(result.z, weights);
  result.deformation = dec.deformation;
  result.texture = dec.texture;
  result.vertices = apply_deformation(dec.deformation, problem.topology());
  ObjectiveResult fin =
      problem.objective(result.z, result.pose, eval_seed, false);
  result.final_terms = fin.terms;
  return result;
}

}  // namespace meshfit
