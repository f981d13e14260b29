// Timings of the OpenMP kernels against their serial references.

#include <chrono>
#include <cstdio>
#include <vector>

#include "meshfit/camera.hpp"
#include "meshfit/decoder.hpp"
#include "meshfit/geometry.hpp"
#include "meshfit/kernels.hpp"
#include "meshfit/render.hpp"
#include "meshfit/tensor.hpp"

using namespace meshfit;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(
             clock::now().time_since_epoch())
      .count();
}

template <typename Fn>
double time_best_of(int reps, Fn fn) {
  double best = 1e30;
  for (int r = 0; r < reps; ++r) {
    double t0 = now_ms();
    fn();
    double dt = now_ms() - t0;
    if (dt < best) best = dt;
  }
  return best;
}

std::vector<double> random_points(Rng& rng, std::size_t n, std::size_t dim) {
  std::vector<double> p(n * dim);
  for (double& v : p) v = rng.uniform(-1.0, 1.0);
  return p;
}

}  // namespace

int main() {
  Rng rng(42);
  std::printf("%-28s %10s %10s %8s\n", "kernel", "serial ms", "openmp ms",
              "speedup");

  {
    const std::size_t n = 4096;
    auto a = random_points(rng, n, 3);
    auto b = random_points(rng, n, 3);
    kernels::NnResult out;
    double ts = time_best_of(3, [&] {
      kernels::nn_bidirectional_serial(a.data(), n, b.data(), n, 3, out);
    });
    double tp = time_best_of(3, [&] {
      kernels::nn_bidirectional_parallel(a.data(), n, b.data(), n, 3, out);
    });
    std::printf("%-28s %10.2f %10.2f %8.2f\n", "nn 4096x4096 (3d)", ts, tp,
                ts / tp);
  }

  {
    const std::size_t n = 2048;
    auto pa = random_points(rng, n, 2);
    auto pb = random_points(rng, n, 2);
    auto aa = random_points(rng, n, 3);
    auto ab = random_points(rng, n, 3);
    kernels::CtParams p;
    kernels::NnResult out;
    double ts = time_best_of(3, [&] {
      kernels::ct_bidirectional_serial(pa.data(), aa.data(), n, pb.data(),
                                       ab.data(), n, 3, p, out);
    });
    double tp = time_best_of(3, [&] {
      kernels::ct_bidirectional_parallel(pa.data(), aa.data(), n, pb.data(),
                                         ab.data(), n, 3, p, out);
    });
    std::printf("%-28s %10.2f %10.2f %8.2f\n", "colored chamfer 2048x2048",
                ts, tp, ts / tp);
  }

  {
    DecoderDims dims;
    DecoderWeights w = init_decoder(7, dims);
    std::vector<double> z(64, 0.0);
    Rng zr(9);
    for (double& v : z) v = zr.gaussian();
    Decoded dec = decode(z, w);
    MeshTopology topo = build_sphere_template(dims.grid_h, dims.grid_w);
    std::vector<Vec3> v = apply_deformation(dec.deformation, topo);
    CameraPose pose;
    pose.scale = 0.75;
    RenderConfig rc;
    rc.resolution = 256;
    double ts = time_best_of(3, [&] {
      kernels::set_parallel(false);
      rasterize(v, topo.faces, topo.uv, dec.texture, pose, rc);
    });
    double tp = time_best_of(3, [&] {
      kernels::set_parallel(true);
      rasterize(v, topo.faces, topo.uv, dec.texture, pose, rc);
    });
    kernels::set_parallel(true);
    std::printf("%-28s %10.2f %10.2f %8.2f\n", "rasterize 256px sphere", ts,
                tp, ts / tp);
  }
  return 0;
}
