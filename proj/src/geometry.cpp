#include "meshfit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "meshfit/kernels.hpp"

namespace meshfit {

namespace {

static_assert(sizeof(Vec3) == 3 * sizeof(double), "Vec3 must be packed");

constexpr double kDegenerateArea = 1e-12;

const double* flat(const std::vector<Vec3>& v) {
  return reinterpret_cast<const double*>(v.data());
}

int vertex_position_class(int i, int j, int h, int w) {
  if (i == 0) return 0;
  if (i == h - 1) return 1;
  return 2 + (i - 1) * (w - 1) + (j % (w - 1));
}

struct FaceNormal {
  Vec3 unit;
  Vec3 raw;     // unnormalized cross product
  double len;   // |raw|
  bool valid;   // area >= threshold
};

FaceNormal face_normal(const std::vector<Vec3>& v,
                       const std::array<int, 3>& f) {
  Vec3 e1 = v[f[1]] - v[f[0]];
  Vec3 e2 = v[f[2]] - v[f[0]];
  Vec3 raw = cross(e1, e2);
  double len = norm(raw);
  FaceNormal out;
  out.raw = raw;
  out.len = len;
  out.valid = 0.5 * len >= kDegenerateArea;
  out.unit = out.valid ? (1.0 / len) * raw : Vec3{};
  return out;
}

}  // namespace

int half_grid_width(int w_uv) { return (w_uv + 1) / 2; }

MeshTopology build_sphere_template(int h_uv, int w_uv) {
  if (h_uv < 3 || w_uv < 3)
    throw NumericError("build_sphere_template: grid dims must be >= 3");

  MeshTopology topo;
  topo.h = h_uv;
  topo.w = w_uv;
  topo.uv.resize(static_cast<std::size_t>(h_uv) * w_uv);
  topo.base_vertices.resize(topo.uv.size());
  topo.vertex_class.resize(topo.uv.size());

  for (int i = 0; i < h_uv; ++i) {
    double theta = kPi * i / (h_uv - 1);
    for (int j = 0; j < w_uv; ++j) {
      double phi = 2.0 * kPi * j / (w_uv - 1);
      int idx = topo.vertex_index(i, j);
      topo.uv[idx] = {static_cast<double>(j) / (w_uv - 1),
                      static_cast<double>(i) / (h_uv - 1)};
      topo.base_vertices[idx] = {std::sin(theta) * std::sin(phi),
                                 std::cos(theta),
                                 std::sin(theta) * std::cos(phi)};
      topo.vertex_class[idx] = vertex_position_class(i, j, h_uv, w_uv);
    }
  }

  for (int i = 0; i + 1 < h_uv; ++i) {
    for (int j = 0; j + 1 < w_uv; ++j) {
      int v00 = topo.vertex_index(i, j);
      int v10 = topo.vertex_index(i + 1, j);
      int v01 = topo.vertex_index(i, j + 1);
      int v11 = topo.vertex_index(i + 1, j + 1);
      topo.faces.push_back({v00, v10, v11});
      topo.faces.push_back({v00, v11, v01});
    }
  }

  topo.adjacent_face_pairs = face_adjacency(topo.faces, topo.vertex_class);
  return topo;
}

Tensor symmetrize(const Tensor& s_half, int h_uv, int w_uv) {
  int wh = half_grid_width(w_uv);
  if (s_half.rank() != 3 || s_half.shape[0] != static_cast<std::size_t>(h_uv) ||
      s_half.shape[1] != static_cast<std::size_t>(wh) || s_half.shape[2] != 3)
    throw NumericError("symmetrize: half grid has wrong shape");

  const bool odd = (w_uv % 2) != 0;
  Tensor full({static_cast<std::size_t>(h_uv), static_cast<std::size_t>(w_uv), 3});
  for (int i = 0; i < h_uv; ++i) {
    bool pole = (i == 0 || i == h_uv - 1);
    for (int j = 0; j < w_uv; ++j) {
      int jj = (j < wh) ? j : (w_uv - 1 - j);
      double sign = (j < wh) ? 1.0 : -1.0;
      int src_col = pole ? 0 : jj;
      double x = s_half.at(i, src_col, 0);
      if (pole || src_col == 0 || (odd && src_col == wh - 1)) x = 0.0;
      full.at(i, j, 0) = sign * x;
      full.at(i, j, 1) = s_half.at(i, src_col, 1);
      full.at(i, j, 2) = s_half.at(i, src_col, 2);
    }
  }
  return full;
}

Tensor symmetrize_backward(const Tensor& grad_full, int h_uv, int w_uv) {
  int wh = half_grid_width(w_uv);
  if (grad_full.rank() != 3 ||
      grad_full.shape[0] != static_cast<std::size_t>(h_uv) ||
      grad_full.shape[1] != static_cast<std::size_t>(w_uv) ||
      grad_full.shape[2] != 3)
    throw NumericError("symmetrize_backward: full grid has wrong shape");

  const bool odd = (w_uv % 2) != 0;
  Tensor grad({static_cast<std::size_t>(h_uv), static_cast<std::size_t>(wh), 3});
  for (int i = 0; i < h_uv; ++i) {
    bool pole = (i == 0 || i == h_uv - 1);
    for (int j = 0; j < w_uv; ++j) {
      int jj = (j < wh) ? j : (w_uv - 1 - j);
      double sign = (j < wh) ? 1.0 : -1.0;
      int src_col = pole ? 0 : jj;
      bool x_forced = pole || src_col == 0 || (odd && src_col == wh - 1);
      if (!x_forced) grad.at(i, src_col, 0) += sign * grad_full.at(i, j, 0);
      grad.at(i, src_col, 1) += grad_full.at(i, j, 1);
      grad.at(i, src_col, 2) += grad_full.at(i, j, 2);
    }
  }
  return grad;
}

std::vector<Vec3> apply_deformation(const Tensor& s_full,
                                    const MeshTopology& topo) {
  if (s_full.rank() != 3 ||
      s_full.shape[0] != static_cast<std::size_t>(topo.h) ||
      s_full.shape[1] != static_cast<std::size_t>(topo.w) ||
      s_full.shape[2] != 3)
    throw NumericError("apply_deformation: grid/topology dim mismatch");

  std::vector<Vec3> v(topo.base_vertices.size());
  for (int i = 0; i < topo.h; ++i)
    for (int j = 0; j < topo.w; ++j) {
      int idx = topo.vertex_index(i, j);
      v[idx] = topo.base_vertices[idx] +
               Vec3{s_full.at(i, j, 0), s_full.at(i, j, 1), s_full.at(i, j, 2)};
    }
  return v;
}

Tensor apply_deformation_backward(const std::vector<Vec3>& grad_v,
                                  const MeshTopology& topo) {
  if (grad_v.size() != topo.base_vertices.size())
    throw NumericError("apply_deformation_backward: vertex count mismatch");
  Tensor grad({static_cast<std::size_t>(topo.h),
               static_cast<std::size_t>(topo.w), 3});
  for (int i = 0; i < topo.h; ++i)
    for (int j = 0; j < topo.w; ++j) {
      const Vec3& g = grad_v[topo.vertex_index(i, j)];
      grad.at(i, j, 0) = g.x;
      grad.at(i, j, 1) = g.y;
      grad.at(i, j, 2) = g.z;
    }
  return grad;
}

std::vector<std::array<int, 2>> face_adjacency(
    const std::vector<std::array<int, 3>>& faces,
    const std::vector<int>& vertex_class) {
  auto cls = [&](int v) {
    return vertex_class.empty() ? v : vertex_class[v];
  };
  std::unordered_map<std::uint64_t, std::vector<int>> edge_faces;
  for (int f = 0; f < static_cast<int>(faces.size()); ++f) {
    int c[3] = {cls(faces[f][0]), cls(faces[f][1]), cls(faces[f][2])};
    // Degenerate in the identified complex: repeated corner class.
    if (c[0] == c[1] || c[1] == c[2] || c[0] == c[2]) continue;
    for (int e = 0; e < 3; ++e) {
      int a = c[e], b = c[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      std::uint64_t key =
          (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
      edge_faces[key].push_back(f);
    }
  }
  std::vector<std::array<int, 2>> pairs;
  for (const auto& [key, fs] : edge_faces) {
    (void)key;
    for (std::size_t a = 0; a < fs.size(); ++a)
      for (std::size_t b = a + 1; b < fs.size(); ++b)
        pairs.push_back({fs[a], fs[b]});
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

double smoothness_loss(const std::vector<Vec3>& v,
                       const std::vector<std::array<int, 3>>& faces) {
  return smoothness_loss(v, faces, face_adjacency(faces, {}));
}

double smoothness_loss(const std::vector<Vec3>& v,
                       const std::vector<std::array<int, 3>>& faces,
                       const std::vector<std::array<int, 2>>& pairs) {
  std::vector<FaceNormal> normals(faces.size());
  for (std::size_t f = 0; f < faces.size(); ++f)
    normals[f] = face_normal(v, faces[f]);
  double total = 0.0;
  std::size_t used = 0;
  for (const auto& pr : pairs) {
    const FaceNormal& a = normals[pr[0]];
    const FaceNormal& b = normals[pr[1]];
    if (!a.valid || !b.valid) continue;
    total += 1.0 - dot(a.unit, b.unit);
    ++used;
  }
  if (used == 0)
    throw NumericError("smoothness_loss: all adjacent face pairs degenerate");
  return total / static_cast<double>(used);
}

double smoothness_loss_grad(const std::vector<Vec3>& v,
                            const std::vector<std::array<int, 3>>& faces,
                            const std::vector<std::array<int, 2>>& pairs,
                            std::vector<Vec3>& grad_v) {
  std::vector<FaceNormal> normals(faces.size());
  for (std::size_t f = 0; f < faces.size(); ++f)
    normals[f] = face_normal(v, faces[f]);

  double total = 0.0;
  std::size_t used = 0;
  for (const auto& pr : pairs) {
    if (!normals[pr[0]].valid || !normals[pr[1]].valid) continue;
    total += 1.0 - dot(normals[pr[0]].unit, normals[pr[1]].unit);
    ++used;
  }
  if (used == 0)
    throw NumericError("smoothness_loss: all adjacent face pairs degenerate");
  double inv = 1.0 / static_cast<double>(used);

  grad_v.assign(v.size(), Vec3{});
  // d(1 - n_a . n_b): each face normal receives -n_other / used, then chains
  // through the normalization and the cross product.
  std::vector<Vec3> grad_unit(faces.size(), Vec3{});
  for (const auto& pr : pairs) {
    const FaceNormal& a = normals[pr[0]];
    const FaceNormal& b = normals[pr[1]];
    if (!a.valid || !b.valid) continue;
    grad_unit[pr[0]] += (-inv) * b.unit;
    grad_unit[pr[1]] += (-inv) * a.unit;
  }
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const FaceNormal& n = normals[f];
    if (!n.valid) continue;
    Vec3 g = grad_unit[f];
    if (g.x == 0.0 && g.y == 0.0 && g.z == 0.0) continue;
    // through unit = raw/|raw|: g_raw = (g - unit*(unit.g)) / |raw|
    Vec3 g_raw = (1.0 / n.len) * (g - dot(n.unit, g) * n.unit);
    const auto& fc = faces[f];
    Vec3 e1 = v[fc[1]] - v[fc[0]];
    Vec3 e2 = v[fc[2]] - v[fc[0]];
    // raw = cross(e1, e2)
    Vec3 g_b = cross(e2, g_raw);
    Vec3 g_c = cross(g_raw, e1);
    grad_v[fc[1]] += g_b;
    grad_v[fc[2]] += g_c;
    grad_v[fc[0]] += (-1.0) * (g_b + g_c);
  }
  return total * inv;
}

std::vector<Vec3> sample_surface(const std::vector<Vec3>& v,
                                 const std::vector<std::array<int, 3>>& faces,
                                 std::size_t n, Rng& rng) {
  std::vector<double> cdf(faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    total += 0.5 * norm(cross(v[faces[f][1]] - v[faces[f][0]],
                              v[faces[f][2]] - v[faces[f][0]]));
    cdf[f] = total;
  }
  if (!(total > 0.0))
    throw NumericError("sample_surface: mesh has zero total area");

  std::vector<Vec3> points;
  points.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    double u = rng.uniform() * total;
    std::size_t f =
        std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    if (f >= faces.size()) f = faces.size() - 1;
    double b1 = rng.uniform();
    double b2 = rng.uniform();
    if (b1 + b2 > 1.0) {
      b1 = 1.0 - b1;
      b2 = 1.0 - b2;
    }
    const auto& fc = faces[f];
    points.push_back(v[fc[0]] + b1 * (v[fc[1]] - v[fc[0]]) +
                     b2 * (v[fc[2]] - v[fc[0]]));
  }
  return points;
}

double chamfer3d(const std::vector<Vec3>& p, const std::vector<Vec3>& q) {
  if (p.empty() || q.empty())
    throw NumericError("chamfer3d: point set is empty");
  kernels::NnResult nn =
      kernels::nn_bidirectional(flat(p), p.size(), flat(q), q.size(), 3);
  double fwd = kernels::sum(nn.row_min) / static_cast<double>(p.size());
  double bwd = kernels::sum(nn.col_min) / static_cast<double>(q.size());
  return 0.5 * (fwd + bwd);
}

}  // namespace meshfit
