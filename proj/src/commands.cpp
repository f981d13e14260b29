#include "meshfit/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "meshfit/obj_io.hpp"
#include "meshfit/render.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace meshfit {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path);
  os << text;
  if (!os) throw IoError("write failure on " + path);
}

Tensor quantize_texture(const Tensor& t) {
  Tensor out = t;
  for (double& v : out.data) v = quantize8(v) / 255.0;
  return out;
}

Tensor texture_from_image(const Image& img) {
  Tensor t({static_cast<std::size_t>(img.h), static_cast<std::size_t>(img.w), 3});
  t.data = img.rgb;
  return t;
}

json pose_json(const CameraPose& p) {
  return json{{"scale", p.scale},
              {"tx", p.tx},
              {"ty", p.ty},
              {"quat", {p.quat[0], p.quat[1], p.quat[2], p.quat[3]}}};
}

std::string quat_cfg(const std::array<double, 4>& q) {
  return "[" + num17(q[0]) + "," + num17(q[1]) + "," + num17(q[2]) + "," +
         num17(q[3]) + "]";
}

CameraPose random_camera(Rng& rng) {
  CameraPose p;
  p.scale = rng.uniform(0.55, 0.85);
  p.tx = rng.uniform(-0.1, 0.1);
  p.ty = rng.uniform(-0.1, 0.1);
  double n2;
  do {
    for (auto& q : p.quat) q = rng.gaussian();
    n2 = p.quat[0] * p.quat[0] + p.quat[1] * p.quat[1] +
         p.quat[2] * p.quat[2] + p.quat[3] * p.quat[3];
  } while (n2 < 1e-6);
  double inv = 1.0 / std::sqrt(n2);
  for (auto& q : p.quat) q *= inv;
  return p;
}

struct MaskStats {
  std::size_t inter = 0, uni = 0;
};

MaskStats mask_overlap(const Mask& a, const Mask& b) {
  MaskStats s;
  for (std::size_t i = 0; i < a.fg.size(); ++i) {
    s.inter += (a.fg[i] & b.fg[i]);
    s.uni += (a.fg[i] | b.fg[i]);
  }
  return s;
}

InvertMetrics compute_metrics(const RenderOutput& ro, const Image& input,
                              const Mask& input_mask) {
  InvertMetrics m;
  MaskStats s = mask_overlap(ro.mask, input_mask);
  m.iou2d = s.uni == 0 ? 1.0
                       : static_cast<double>(s.inter) /
                             static_cast<double>(s.uni);
  if (s.inter == 0) {
    m.tex_mae = 1.0;
    return m;
  }
  double err = 0.0;
  for (int r = 0; r < input_mask.h; ++r)
    for (int c = 0; c < input_mask.w; ++c) {
      if (!input_mask.at(r, c) || !ro.mask.at(r, c)) continue;
      for (int ch = 0; ch < 3; ++ch)
        err += std::fabs(ro.image.at(r, c, ch) - input.at(r, c, ch));
    }
  m.tex_mae = err / (3.0 * static_cast<double>(s.inter));
  return m;
}

ObjMesh mesh_of(const MeshTopology& topo, const std::vector<Vec3>& v) {
  ObjMesh m;
  m.vertices = v;
  m.uv = topo.uv;
  m.faces = topo.faces;
  return m;
}

}  // namespace

DecoderDims dims_from(const Config& cfg) {
  DecoderDims d;
  d.latent = cfg.get_i("decoder.latent_dim");
  d.hidden = cfg.get_i("decoder.hidden_dim");
  d.grid_h = cfg.get_i("decoder.grid_h");
  d.grid_w = cfg.get_i("decoder.grid_w");
  d.tex_h = cfg.get_i("decoder.tex_h");
  d.tex_w = cfg.get_i("decoder.tex_w");
  d.fourier_k = cfg.get_i("decoder.fourier_k");
  return d;
}

DecoderWeights decoder_from(const Config& cfg) {
  DecoderDims dims = dims_from(cfg);
  std::string weights = cfg.get_path("decoder.weights");
  if (!weights.empty()) return load_decoder(weights, dims);
  return init_decoder(cfg.get_u64("decoder.seed"), dims);
}

RenderConfig render_from(const Config& cfg) {
  RenderConfig rc;
  rc.resolution = cfg.get_i("render.resolution");
  auto bg = cfg.get_list("render.background");
  if (bg.size() != 3)
    throw ConfigError("render.background expects three values");
  rc.background = {bg[0], bg[1], bg[2]};
  return rc;
}

CameraPose camera_from(const Config& cfg) {
  CameraPose p;
  p.scale = cfg.get_f("camera.scale");
  p.tx = cfg.get_f("camera.tx");
  p.ty = cfg.get_f("camera.ty");
  auto q = cfg.get_list("camera.quat");
  if (q.size() != 4) throw ConfigError("camera.quat expects [w,x,y,z]");
  p.quat = {q[0], q[1], q[2], q[3]};
  return p;
}

InversionConfig inversion_from(const Config& cfg) {
  InversionConfig ic;
  ic.stage_lr_z = cfg.get_list("inversion.stage_lr_z");
  ic.stage_lr_cam = cfg.get_list("inversion.stage_lr_cam");
  ic.stage_iters = cfg.get_ilist("inversion.stage_iters");
  ic.adam_beta1 = cfg.get_f("inversion.adam_beta1");
  ic.adam_beta2 = cfg.get_f("inversion.adam_beta2");
  ic.n_sample = static_cast<std::size_t>(cfg.get_i("inversion.n_sample"));
  ic.resample_points = cfg.get_b("inversion.resample_points");
  ic.reset_moments = cfg.get_b("inversion.reset_moments");
  ic.seed = cfg.get_u64("seed");
  ic.render = render_from(cfg);
  ic.weights.w_pct = cfg.get_f("loss.w_pct");
  ic.weights.w_fct = cfg.get_f("loss.w_fct");
  ic.weights.w_cm = cfg.get_f("loss.w_cm");
  ic.weights.w_smooth = cfg.get_f("loss.w_smooth");
  ic.weights.w_z = cfg.get_f("loss.w_z");
  ic.tex_params.eps_s = cfg.get_f("loss.eps_s");
  ic.tex_params.eps_a = cfg.get_f("loss.eps_a");
  ic.tex_params.alpha = cfg.get_f("loss.alpha");
  ic.validate();
  return ic;
}

InvertOutcome run_invert_single(const Config& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::string image_path = cfg.get_path("input.image");
  std::string mask_path = cfg.get_path("input.mask");
  if (image_path.empty() || mask_path.empty())
    throw ConfigError("invert: input.image and input.mask are required");

  DecoderWeights weights = decoder_from(cfg);
  InversionConfig ic = inversion_from(cfg);
  Target target = Target::prepare(read_png(image_path),
                                  read_png_mask(mask_path), camera_from(cfg));

  InvertOutcome out;
  out.result = invert(target, ic, weights);

  MeshTopology topo = build_sphere_template(weights.dims.grid_h,
                                            weights.dims.grid_w);
  // Final artifacts render from the 8-bit texture so `render` on the
  // exported files reproduces recon.png byte for byte.
  Tensor tex_q = quantize_texture(out.result.texture);
  RenderOutput ro = rasterize(out.result.vertices, topo.faces, topo.uv, tex_q,
                              out.result.pose, ic.render);
  out.metrics = compute_metrics(ro, target.image, target.mask);

  write_png(out_dir + "/recon.png", ro.image);
  Image tex_img(weights.dims.tex_h, weights.dims.tex_w);
  tex_img.rgb = out.result.texture.data;
  write_png(out_dir + "/texture.png", tex_img);
  write_obj(out_dir + "/mesh.obj", "material.mtl", "texture.png",
            mesh_of(topo, out.result.vertices));
  write_mtl(out_dir + "/material.mtl", "texture.png");

  for (int k = 0; k < 12; ++k) {
    double az = 2.0 * kPi * k / 12.0;
    CameraPose novel;
    novel.scale = out.result.pose.scale;
    novel.quat = {std::cos(az / 2.0), 0.0, std::sin(az / 2.0), 0.0};
    RenderOutput nv = rasterize(out.result.vertices, topo.faces, topo.uv,
                                tex_q, novel, ic.render);
    char name[32];
    std::snprintf(name, sizeof(name), "/novel_%02d.png", k);
    write_png(out_dir + name, nv.image);
  }

  std::string csv = "stage,iter,total,l_pct,l_fct,l_cm,l_smooth,l_z\n";
  for (const TraceRow& row : out.result.trace)
    csv += std::to_string(row.stage) + "," + std::to_string(row.iter) + "," +
           num(row.terms.total) + "," + num(row.terms.pct) + "," +
           num(row.terms.fct) + "," + num(row.terms.cm) + "," +
           num(row.terms.smooth) + "," + num(row.terms.z) + "\n";
  write_text(out_dir + "/trace.csv", csv);

  json summary = {
      {"seed", ic.seed},
      {"best_stage", out.result.best_stage},
      {"best_iter", out.result.best_iter},
      {"iou_2d", out.metrics.iou2d},
      {"tex_mae", out.metrics.tex_mae},
      {"final",
       {{"total", out.result.final_terms.total},
        {"l_pct", out.result.final_terms.pct},
        {"l_fct", out.result.final_terms.fct},
        {"l_cm", out.result.final_terms.cm},
        {"l_smooth", out.result.final_terms.smooth},
        {"l_z", out.result.final_terms.z}}},
      {"camera", pose_json(out.result.pose)}};
  write_text(out_dir + "/summary.json", summary.dump(2) + "\n");
  return out;
}

int cmd_invert(const Config& cfg, const std::vector<std::string>& overrides,
               const std::string& out_dir) {
  std::string batch_dir = cfg.get_path("input.dir");
  if (batch_dir.empty()) {
    run_invert_single(cfg, out_dir);
    return 0;
  }

  std::vector<fs::path> targets;
  for (const auto& entry : fs::directory_iterator(batch_dir))
    if (entry.is_directory() && fs::exists(entry.path() / "target.cfg"))
      targets.push_back(entry.path());
  std::sort(targets.begin(), targets.end());
  if (targets.empty())
    throw ConfigError("invert: no target.cfg found under " + batch_dir);

  int workers = std::max(1, cfg.get_i("workers"));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex err_mutex;

  auto work = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= targets.size() || failed.load()) return;
      try {
        Config tc = cfg;
        tc.apply_kv("input.dir", "");
        tc.apply_file((targets[i] / "target.cfg").string());
        for (const std::string& s : overrides) tc.apply_set_arg(s);
        run_invert_single(tc, out_dir + "/" + targets[i].filename().string());
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!failed.exchange(true)) first_error = e.what();
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failed.load()) throw NumericError("batch invert: " + first_error);
  return 0;
}

SyntheticTruth make_synthetic_bundle(const Config& cfg,
                                     const std::string& out_dir) {
  fs::create_directories(out_dir);
  DecoderWeights weights = decoder_from(cfg);
  RenderConfig rc = render_from(cfg);
  MeshTopology topo =
      build_sphere_template(weights.dims.grid_h, weights.dims.grid_w);
  Rng rng(cfg.get_u64("seed"));

  SyntheticTruth truth;
  truth.z.resize(static_cast<std::size_t>(weights.dims.latent));
  for (double& v : truth.z) v = rng.gaussian();
  Decoded dec = decode(truth.z, weights);
  std::vector<Vec3> v = apply_deformation(dec.deformation, topo);

  double min_cov = cfg.get_f("synthetic.min_coverage");
  std::size_t need = static_cast<std::size_t>(
      min_cov * rc.resolution * rc.resolution);
  RenderOutput ro;
  bool placed = false;
  for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
    truth.pose_true = random_camera(rng);
    ro = rasterize(v, topo.faces, topo.uv, dec.texture, truth.pose_true, rc);
    placed = ro.mask.count() >= std::max<std::size_t>(need, 1);
  }
  if (!placed)
    throw NumericError("make_synthetic: could not place camera with coverage");

  double deg = cfg.get_f("synthetic.perturb_deg");
  double dscale = cfg.get_f("synthetic.perturb_scale");
  double dt = cfg.get_f("synthetic.perturb_t");
  Vec3 axis;
  do {
    axis = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
  } while (norm(axis) < 1e-6);
  auto q_pert = quat_from_axis_angle(axis, deg * kPi / 180.0);
  truth.pose_init = truth.pose_true;
  truth.pose_init.quat = quat_multiply(q_pert, truth.pose_true.quat);
  truth.pose_init.scale =
      truth.pose_true.scale * (1.0 + (rng.below(2) == 0 ? dscale : -dscale));
  double psi = rng.uniform(0.0, 2.0 * kPi);
  truth.pose_init.tx = truth.pose_true.tx + dt * std::cos(psi);
  truth.pose_init.ty = truth.pose_true.ty + dt * std::sin(psi);

  write_png(out_dir + "/image.png", ro.image);
  write_png_mask(out_dir + "/mask.png", ro.mask);

  auto pose_tensor = [](const CameraPose& p) {
    auto packed = p.packed();
    return Tensor::from_vector({packed.begin(), packed.end()});
  };
  save_tensors(out_dir + "/truth.miv1",
               {{"z", Tensor::from_vector(truth.z)},
                {"cam_true", pose_tensor(truth.pose_true)},
                {"cam_init", pose_tensor(truth.pose_init)}});

  json tj = {{"seed", cfg.get_u64("seed")},
             {"perturb",
              {{"rotation_deg", deg},
               {"scale_fraction", dscale},
               {"translation", dt}}},
             {"coverage_pixels", ro.mask.count()},
             {"camera_true", pose_json(truth.pose_true)},
             {"camera_init", pose_json(truth.pose_init)}};
  write_text(out_dir + "/truth.json", tj.dump(2) + "\n");

  std::string tcfg;
  tcfg += "input.image = image.png\n";
  tcfg += "input.mask = mask.png\n";
  tcfg += "camera.scale = " + num17(truth.pose_init.scale) + "\n";
  tcfg += "camera.tx = " + num17(truth.pose_init.tx) + "\n";
  tcfg += "camera.ty = " + num17(truth.pose_init.ty) + "\n";
  tcfg += "camera.quat = " + quat_cfg(truth.pose_init.quat) + "\n";
  std::string wpath = cfg.get_path("decoder.weights");
  if (!wpath.empty())
    tcfg += "decoder.weights = " + fs::absolute(wpath).string() + "\n";
  else
    tcfg += "decoder.seed = " + std::to_string(cfg.get_u64("decoder.seed")) + "\n";
  for (const char* k :
       {"decoder.latent_dim", "decoder.hidden_dim", "decoder.grid_h",
        "decoder.grid_w", "decoder.tex_h", "decoder.tex_w",
        "decoder.fourier_k", "render.resolution"})
    tcfg += std::string(k) + " = " + cfg.get_str(k) + "\n";
  tcfg += "render.background = " + cfg.get_str("render.background") + "\n";
  write_text(out_dir + "/target.cfg", tcfg);
  return truth;
}

int cmd_make_synthetic(const Config& cfg, const std::string& out_dir) {
  make_synthetic_bundle(cfg, out_dir);
  return 0;
}

int cmd_render(const Config& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::string mesh_path = cfg.get_path("render.mesh");
  std::string tex_path = cfg.get_path("render.texture");
  if (mesh_path.empty() || tex_path.empty())
    throw ConfigError("render: render.mesh and render.texture are required");
  ObjMesh mesh = read_obj(mesh_path);
  Tensor texture = texture_from_image(read_png(tex_path));
  CameraPose pose =
      cfg.get_b("render.identity_pose") ? CameraPose{} : camera_from(cfg);
  RenderOutput ro = rasterize(mesh.vertices, mesh.faces, mesh.uv, texture,
                              pose, render_from(cfg));
  write_png(out_dir + "/render.png", ro.image);
  write_png_mask(out_dir + "/render_mask.png", ro.mask);
  return 0;
}

namespace {

double fit_loglog_slope(const std::vector<std::pair<double, double>>& xy) {
  // Least squares on (log10 x, log10 y).
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : xy) {
    double lx = std::log10(x), ly = std::log10(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double n = static_cast<double>(xy.size());
  double denom = n * sxx - sx * sx;
  if (std::fabs(denom) < 1e-12) return 0.0;
  return (n * sxy - sx * sy) / denom;
}

}  // namespace

SensitivityResult run_sensitivity(const Config& cfg,
                                  const std::string& out_dir) {
  fs::create_directories(out_dir);
  DecoderWeights weights = decoder_from(cfg);
  RenderConfig rc = render_from(cfg);
  MeshTopology topo =
      build_sphere_template(weights.dims.grid_h, weights.dims.grid_w);
  int n_shapes = cfg.get_i("sensitivity.n_shapes");
  std::size_t n_surf =
      static_cast<std::size_t>(cfg.get_i("sensitivity.surface_samples"));
  double min_cov = cfg.get_f("synthetic.min_coverage");
  Rng rng(cfg.get_u64("seed"));

  // eta = 0 control plus three points per decade across [1e-6, 1e-1].
  std::vector<double> etas{0.0};
  for (int k = 0; k <= 15; ++k) etas.push_back(std::pow(10.0, -6.0 + k / 3.0));

  struct Row {
    int shape;
    double eta, cd3d, l_cm, l_iou, l_l1;
    bool degenerate;
  };
  std::vector<Row> rows;
  std::string cam_csv = "shape_id,scale,tx,ty,qw,qx,qy,qz\n";

  for (int i = 0; i < n_shapes; ++i) {
    std::vector<double> z(static_cast<std::size_t>(weights.dims.latent));
    for (double& v : z) v = rng.gaussian();
    Decoded dec = decode(z, weights);
    std::vector<Vec3> v = apply_deformation(dec.deformation, topo);

    CameraPose cam;
    Mask base_mask;
    std::size_t need = std::max<std::size_t>(
        static_cast<std::size_t>(min_cov * rc.resolution * rc.resolution), 1);
    bool placed = false;
    RenderOutput base_ro;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      cam = random_camera(rng);
      base_ro = rasterize(v, topo.faces, topo.uv, dec.texture, cam, rc);
      placed = base_ro.mask.count() >= need;
    }
    if (!placed)
      throw NumericError("sensitivity: could not place camera for shape " +
                         std::to_string(i));
    base_mask = base_ro.mask;
    cam_csv += std::to_string(i) + "," + num(cam.scale) + "," + num(cam.tx) +
               "," + num(cam.ty) + "," + num(cam.quat[0]) + "," +
               num(cam.quat[1]) + "," + num(cam.quat[2]) + "," +
               num(cam.quat[3]) + "\n";

    Projection base_proj = project_weak_perspective(cam, v);
    std::uint64_t pair_seed = rng.next_u64();
    Rng sample_rng_a(pair_seed);
    std::vector<Vec3> base_samples =
        sample_surface(v, topo.faces, n_surf, sample_rng_a);

    for (double eta : etas) {
      std::vector<double> dir(z.size());
      for (double& d : dir) d = rng.gaussian();
      double dn = 0.0;
      for (double d : dir) dn += d * d;
      dn = std::sqrt(dn);
      std::vector<double> z2 = z;
      for (std::size_t k = 0; k < z.size(); ++k) z2[k] += eta * dir[k] / dn;

      Decoded dec2 = decode(z2, weights);
      std::vector<Vec3> v2 = apply_deformation(dec2.deformation, topo);
      Rng sample_rng_b(pair_seed);
      std::vector<Vec3> samples2 =
          sample_surface(v2, topo.faces, n_surf, sample_rng_b);
      double cd = chamfer3d(base_samples, samples2);

      Projection proj2 = project_weak_perspective(cam, v2);
      double l_cm = chamfer_mask_loss(proj2.points, base_proj.points);
      RenderOutput ro2 =
          rasterize(v2, topo.faces, topo.uv, dec2.texture, cam, rc);
      bool degenerate = ro2.mask.count() == 0;
      double l_iou = degenerate ? 1.0 : iou_mask_loss(ro2.mask, base_mask);
      double l_l1 = degenerate ? 1.0 : l1_loss(ro2.mask, base_mask);
      rows.push_back({i, eta, cd, l_cm, l_iou, l_l1, degenerate});
    }
  }

  std::string csv = "shape_id,eta,cd3d,l_cm,l_iou,l_l1\n";
  for (const Row& r : rows)
    csv += std::to_string(r.shape) + "," + num(r.eta) + "," + num(r.cd3d) +
           "," + num(r.l_cm) + "," + num(r.l_iou) + "," + num(r.l_l1) + "\n";
  write_text(out_dir + "/sensitivity.csv", csv);
  write_text(out_dir + "/cameras.csv", cam_csv);

  SensitivityResult result;
  const char* names[3] = {"l_cm", "l_iou", "l_l1"};
  for (int li = 0; li < 3; ++li) {
    for (int dec_exp = -6; dec_exp <= -3; ++dec_exp) {
      double lo = std::pow(10.0, dec_exp);
      double hi = std::pow(10.0, dec_exp + 1);
      std::vector<std::pair<double, double>> pts;
      int zero = 0, n_rows = 0;
      for (const Row& r : rows) {
        if (r.degenerate || !(r.cd3d >= lo && r.cd3d < hi)) continue;
        double loss = li == 0 ? r.l_cm : (li == 1 ? r.l_iou : r.l_l1);
        ++n_rows;
        if (loss == 0.0)
          ++zero;  // excluded from the log fit
        else
          pts.emplace_back(r.cd3d, loss);
      }
      SlopeRow sr;
      sr.loss = names[li];
      sr.decade_lo = lo;
      sr.decade_hi = hi;
      sr.n_rows = n_rows;
      sr.n_zero = zero;
      sr.slope = pts.size() >= 2 ? fit_loglog_slope(pts) : 0.0;
      result.slopes.push_back(sr);
    }
  }
  for (const Row& r : rows) {
    if (r.degenerate || !(r.cd3d >= 1e-6 && r.cd3d <= 1e-2)) continue;
    ++result.window_rows;
    if (r.l_iou == 0.0) ++result.window_zero_iou;
    if (r.l_l1 == 0.0) ++result.window_zero_l1;
  }

  std::string sum_csv = "loss,decade_lo,decade_hi,n_rows,n_zero,slope\n";
  for (const SlopeRow& sr : result.slopes)
    sum_csv += sr.loss + "," + num(sr.decade_lo) + "," + num(sr.decade_hi) +
               "," + std::to_string(sr.n_rows) + "," +
               std::to_string(sr.n_zero) + "," + num(sr.slope) + "\n";
  write_text(out_dir + "/sensitivity_summary.csv", sum_csv);
  return result;
}

int cmd_sensitivity(const Config& cfg, const std::string& out_dir) {
  run_sensitivity(cfg, out_dir);
  return 0;
}

int cmd_eps_sweep(const Config& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  int n_targets = cfg.get_i("eps_sweep.n_targets");
  std::vector<double> eps_values = cfg.get_list("eps_sweep.values");
  std::uint64_t seed = cfg.get_u64("seed");

  std::vector<std::string> target_dirs;
  for (int i = 0; i < n_targets; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "/targets/t%02d", i);
    std::string dir = out_dir + name;
    Config tc = cfg;
    tc.apply_kv("seed", std::to_string(seed + 7919ull * (i + 1)));
    make_synthetic_bundle(tc, dir);
    target_dirs.push_back(dir);
  }

  std::string csv = "eps_s,mean_iou,mean_tex_mae\n";
  for (std::size_t e = 0; e < eps_values.size(); ++e) {
    double sum_iou = 0.0, sum_mae = 0.0;
    for (std::size_t t = 0; t < target_dirs.size(); ++t) {
      Config rc = cfg;
      rc.apply_file(target_dirs[t] + "/target.cfg");
      rc.apply_kv("loss.eps_s", num17(eps_values[e]));
      rc.apply_kv("seed", std::to_string(seed));  // identical across rows
      char name[48];
      std::snprintf(name, sizeof(name), "/runs/eps%02zu/t%02zu", e, t);
      InvertOutcome out = run_invert_single(rc, out_dir + name);
      sum_iou += out.metrics.iou2d;
      sum_mae += out.metrics.tex_mae;
    }
    csv += num(eps_values[e]) + "," + num(sum_iou / target_dirs.size()) + "," +
           num(sum_mae / target_dirs.size()) + "\n";
  }
  write_text(out_dir + "/eps_sweep.csv", csv);
  return 0;
}

int cmd_grad_check(const Config& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<GradSuiteRow> rows = run_gradient_suite(cfg.get_u64("seed"));
  std::string csv = "check,config,max_abs_err,max_rel_err,n_checked,threshold,pass\n";
  bool all_pass = true;
  for (const GradSuiteRow& r : rows) {
    csv += r.check + "," + std::to_string(r.config_index) + "," +
           num(r.report.max_abs_err) + "," + num(r.report.max_rel_err) + "," +
           std::to_string(r.report.n_checked) + "," + num(r.threshold) + "," +
           (r.pass ? "1" : "0") + "\n";
    all_pass &= r.pass;
  }
  write_text(out_dir + "/grad_check.csv", csv);
  std::fputs(csv.c_str(), stdout);
  if (!all_pass) throw NumericError("grad-check: at least one check failed");
  return 0;
}

}  // namespace meshfit
