#include <cmath>

#include "meshfit/commands.hpp"
#include "meshfit/obj_io.hpp"

namespace meshfit {

namespace {

// Small scene shared by the texture-loss checks: a deformed low-res sphere
// rendered at 32 px against an independently textured input.
struct SmallScene {
  MeshTopology topo;
  Tensor texture;        // (8, 8, 3)
  std::vector<Vec3> v;
  CameraPose pose;
  RenderConfig rc;
  RenderOutput binding;
  Image input_image;
  Mask input_mask;
};

Tensor random_texture(Rng& rng, int h, int w) {
  Tensor t({static_cast<std::size_t>(h), static_cast<std::size_t>(w), 3});
  for (double& v : t.data) v = rng.uniform(0.05, 0.95);
  return t;
}

CameraPose random_pose(Rng& rng) {
  CameraPose p;
  p.scale = rng.uniform(0.6, 0.85);
  p.tx = rng.uniform(-0.08, 0.08);
  p.ty = rng.uniform(-0.08, 0.08);
  double n2;
  do {
    for (auto& q : p.quat) q = rng.gaussian();
    n2 = p.quat[0] * p.quat[0] + p.quat[1] * p.quat[1] +
         p.quat[2] * p.quat[2] + p.quat[3] * p.quat[3];
  } while (n2 < 1e-6);
  return p;
}

SmallScene make_scene(Rng& rng) {
  SmallScene s;
  s.topo = build_sphere_template(6, 6);
  Tensor half({6, static_cast<std::size_t>(half_grid_width(6)), 3});
  for (double& v : half.data) v = rng.uniform(-0.15, 0.15);
  s.v = apply_deformation(symmetrize(half, 6, 6), s.topo);
  s.pose = random_pose(rng);
  s.texture = random_texture(rng, 8, 8);
  s.rc.resolution = 32;
  s.binding = rasterize(s.v, s.topo.faces, s.topo.uv, s.texture, s.pose, s.rc);

  Tensor tex2 = random_texture(rng, 8, 8);
  CameraPose pose2 = s.pose;
  pose2.tx += 0.04;
  pose2.ty -= 0.03;
  RenderOutput ro2 =
      rasterize(s.v, s.topo.faces, s.topo.uv, tex2, pose2, s.rc);
  s.input_image = ro2.image;
  s.input_mask = ro2.mask;
  return s;
}

constexpr std::size_t kFullSample = 1u << 30;  // larger than any mask
constexpr std::uint64_t kSampleSeed = 777;

GradSuiteRow check_row(const std::string& name, int k, const ScalarFn& f,
                       const Tensor& x, const Tensor& grad, double threshold,
                       const std::vector<bool>* exclude = nullptr) {
  GradSuiteRow row;
  row.check = name;
  row.config_index = k;
  row.threshold = threshold;
  row.report = grad_check(f, x, grad, 1e-6, exclude);
  row.pass = row.report.max_rel_err < threshold;
  return row;
}

Tensor vec3_tensor(const std::vector<Vec3>& v) {
  Tensor t({v.size(), 3});
  for (std::size_t i = 0; i < v.size(); ++i) {
    t.data[3 * i + 0] = v[i].x;
    t.data[3 * i + 1] = v[i].y;
    t.data[3 * i + 2] = v[i].z;
  }
  return t;
}

std::vector<Vec3> tensor_vec3(const Tensor& t) {
  std::vector<Vec3> v(t.shape[0]);
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = {t.data[3 * i], t.data[3 * i + 1], t.data[3 * i + 2]};
  return v;
}

ChamferTexParams default_params() { return ChamferTexParams{}; }

}  // namespace

std::vector<GradSuiteRow> run_gradient_suite(std::uint64_t seed) {
  std::vector<GradSuiteRow> rows;
  const int n_configs = 10;

  for (int k = 0; k < n_configs; ++k) {
    Rng rng(seed + 100ull * (k + 1));
    SmallScene scene = make_scene(rng);
    ChamferTexParams params = default_params();

    // L_pCT w.r.t. the texture (through texel weights).
    {
      auto eval = [&](const Tensor& t) {
        Image img = image_from_weights(scene.binding, t, scene.rc.background);
        Rng r(kSampleSeed);
        return pixel_chamfer_texture_loss(img, scene.binding.mask,
                                          scene.input_image, scene.input_mask,
                                          kFullSample, params, r);
      };
      Image img = image_from_weights(scene.binding, scene.texture,
                                     scene.rc.background);
      Image grad_img(img.h, img.w, {0, 0, 0});
      Rng r(kSampleSeed);
      pixel_chamfer_texture_loss_grad(img, scene.binding.mask,
                                      scene.input_image, scene.input_mask,
                                      kFullSample, params, r, &grad_img);
      Tensor grad_t = texture_grad_from_image(scene.binding, grad_img, 8, 8);
      rows.push_back(check_row("pct_wrt_T", k, eval, scene.texture, grad_t, 1e-4));
    }

    // L_fCT w.r.t. the texture (through the conv bank).
    {
      auto eval = [&](const Tensor& t) {
        Image img = image_from_weights(scene.binding, t, scene.rc.background);
        return feature_chamfer_texture_loss(img, scene.binding.mask,
                                            scene.input_image,
                                            scene.input_mask, params);
      };
      Image img = image_from_weights(scene.binding, scene.texture,
                                     scene.rc.background);
      Image grad_img(img.h, img.w, {0, 0, 0});
      feature_chamfer_texture_loss_grad(img, scene.binding.mask,
                                        scene.input_image, scene.input_mask,
                                        params, &grad_img);
      Tensor grad_t = texture_grad_from_image(scene.binding, grad_img, 8, 8);
      rows.push_back(check_row("fct_wrt_T", k, eval, scene.texture, grad_t, 1e-4));
    }

    // L_CM w.r.t. vertices and w.r.t. the packed camera.
    {
      std::vector<Vec3> v(16);
      for (Vec3& p : v) p = {0.5 * rng.gaussian(), 0.5 * rng.gaussian(),
                             0.5 * rng.gaussian()};
      std::vector<Vec2> s_f(40);
      for (Vec2& p : s_f) p = {rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9)};
      CameraPose pose = random_pose(rng);

      auto eval_v = [&](const Tensor& t) {
        Projection proj = project_weak_perspective(pose, tensor_vec3(t));
        return chamfer_mask_loss(proj.points, s_f);
      };
      Projection proj = project_weak_perspective(pose, v);
      std::vector<Vec2> grad_sv;
      chamfer_mask_loss_grad(proj.points, s_f, grad_sv);
      std::vector<Vec3> grad_v(v.size());
      CameraGrads cg = project_backward(pose, v, proj, grad_sv, &grad_v);
      rows.push_back(check_row("cm_wrt_V", k, eval_v, vec3_tensor(v),
                               vec3_tensor(grad_v), 1e-4));

      auto eval_cam = [&](const Tensor& t) {
        CameraPose p = CameraPose::from_packed(
            {t[0], t[1], t[2], t[3], t[4], t[5], t[6]});
        Projection pr = project_weak_perspective(p, v);
        return chamfer_mask_loss(pr.points, s_f);
      };
      auto packed = pose.packed();
      auto gc = cg.packed();
      rows.push_back(check_row(
          "cm_wrt_camera", k, eval_cam,
          Tensor::from_vector({packed.begin(), packed.end()}),
          Tensor::from_vector({gc.begin(), gc.end()}), 1e-4));
    }

    // L_smooth on an 8-vertex strip.
    {
      std::vector<Vec3> v(8);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 4; ++j)
          v[static_cast<std::size_t>(i * 4 + j)] = {
              0.5 * j + 0.05 * rng.gaussian(), 0.5 * i + 0.05 * rng.gaussian(),
              0.2 * rng.gaussian()};
      std::vector<std::array<int, 3>> faces;
      for (int j = 0; j < 3; ++j) {
        faces.push_back({j, 4 + j, 4 + j + 1});
        faces.push_back({j, 4 + j + 1, j + 1});
      }
      auto pairs = face_adjacency(faces, {});
      auto eval = [&](const Tensor& t) {
        return smoothness_loss(tensor_vec3(t), faces, pairs);
      };
      std::vector<Vec3> grad_v;
      smoothness_loss_grad(v, faces, pairs, grad_v);
      rows.push_back(check_row("smooth_wrt_V", k, eval, vec3_tensor(v),
                               vec3_tensor(grad_v), 1e-4));
    }

    // L_z.
    {
      std::vector<double> z(16);
      for (double& x : z) x = rng.gaussian();
      auto eval = [](const Tensor& t) { return latent_reg(t.data); };
      std::vector<double> gz(z.size(), 0.0);
      latent_reg_grad(z, 1.0, gz);
      rows.push_back(check_row("lz_wrt_z", k, eval, Tensor::from_vector(z),
                               Tensor::from_vector(gz), 1e-4));
    }

    // decode w.r.t. z, scalarized by fixed random probes.
    DecoderDims dims;
    dims.latent = 16;
    dims.hidden = 32;
    dims.grid_h = 6;
    dims.grid_w = 6;
    dims.tex_h = 8;
    dims.tex_w = 8;
    dims.fourier_k = 4;
    DecoderWeights dw = init_decoder(seed + 31ull * k, dims);
    {
      std::vector<double> z(16);
      for (double& x : z) x = rng.gaussian();
      Tensor probe_s({6, 6, 3});
      for (double& x : probe_s.data) x = rng.gaussian();
      Tensor probe_t({8, 8, 3});
      for (double& x : probe_t.data) x = rng.gaussian();
      auto eval = [&](const Tensor& t) {
        Decoded d = decode(t.data, dw);
        double s = 0.0;
        for (std::size_t i = 0; i < probe_s.numel(); ++i)
          s += probe_s.data[i] * d.deformation.data[i];
        for (std::size_t i = 0; i < probe_t.numel(); ++i)
          s += probe_t.data[i] * d.texture.data[i];
        return s;
      };
      Decoded d = decode(z, dw);
      std::vector<double> gz = decode_backward(d, dw, &probe_s, &probe_t);
      rows.push_back(check_row("decode_wrt_z", k, eval, Tensor::from_vector(z),
                               Tensor::from_vector(gz), 1e-4));
    }

    // Composed objective with frozen rasterization binding and full point
    // sets, w.r.t. z and the camera.
    {
      std::vector<double> z_true(16);
      for (double& x : z_true) x = rng.gaussian();
      CameraPose pose_true = random_pose(rng);
      Decoded dec_true = decode(z_true, dw);
      MeshTopology topo = build_sphere_template(6, 6);
      std::vector<Vec3> v_true = apply_deformation(dec_true.deformation, topo);
      RenderConfig rc;
      rc.resolution = 32;
      RenderOutput target_ro = rasterize(v_true, topo.faces, topo.uv,
                                         dec_true.texture, pose_true, rc);
      Target target = Target::prepare(target_ro.image, target_ro.mask,
                                      pose_true);

      InversionConfig ic;
      ic.n_sample = kFullSample;
      ic.render = rc;
      ic.seed = seed;
      InversionProblem problem(dw, target, ic);

      std::vector<double> z0 = z_true;
      for (double& x : z0) x += 0.3 * rng.gaussian();
      CameraPose pose0 = pose_true;
      pose0.tx += 0.03;
      pose0.quat[1] += 0.05;
      RenderOutput binding = problem.bind(z0, pose0);
      ObjectiveResult obj =
          problem.objective_at(z0, pose0, binding, kSampleSeed, true);

      auto eval_z = [&](const Tensor& t) {
        return problem
            .objective_at(t.data, pose0, binding, kSampleSeed, false)
            .terms.total;
      };
      rows.push_back(check_row("objective_wrt_z", k, eval_z,
                               Tensor::from_vector(z0),
                               Tensor::from_vector(obj.grad_z), 1e-3));

      auto eval_cam = [&](const Tensor& t) {
        CameraPose p = CameraPose::from_packed(
            {t[0], t[1], t[2], t[3], t[4], t[5], t[6]});
        return problem.objective_at(z0, p, binding, kSampleSeed, false)
            .terms.total;
      };
      auto packed = pose0.packed();
      rows.push_back(check_row(
          "objective_wrt_camera", k, eval_cam,
          Tensor::from_vector({packed.begin(), packed.end()}),
          Tensor::from_vector({obj.grad_cam.begin(), obj.grad_cam.end()}),
          1e-3));
    }
  }
  return rows;
}

}  // namespace meshfit
