#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "meshfit/common.hpp"
#include "meshfit/tensor.hpp"

namespace meshfit {

// Latitude-longitude sphere template. Vertex (i, j) sits at
// theta = pi*i/(h-1), phi = 2*pi*j/(w-1) with axes chosen so that mirroring
// j -> w-1-j negates x and fixes y, z. Poles and the phi = 0/2pi seam are
// duplicated in index space; `vertex_class` identifies coincident vertices so
// adjacency and Euler-style bookkeeping can treat the surface as closed.
struct MeshTopology {
  int h = 0, w = 0;
  std::vector<std::array<int, 3>> faces;
  std::vector<Vec2> uv;               // per vertex, in [0,1]^2
  std::vector<Vec3> base_vertices;    // unit sphere positions
  std::vector<int> vertex_class;      // identified-position class per vertex
  std::vector<std::array<int, 2>> adjacent_face_pairs;

  int vertex_count() const { return h * w; }
  int vertex_index(int i, int j) const { return i * w + j; }
};

MeshTopology build_sphere_template(int h_uv, int w_uv);

// Width of the half deformation grid the decoder emits (u in [0, 0.5]).
int half_grid_width(int w_uv);

// Mirror a (h, w_half, 3) half grid into the full (h, w, 3) map. The seam
// column u=0 and (for odd w) the u=0.5 column get x forced to 0, and pole
// rows collapse to a single shared offset, so the deformed surface stays
// closed and x-mirror symmetric.
Tensor symmetrize(const Tensor& s_half, int h_uv, int w_uv);
// Adjoint of symmetrize: scatters a gradient on the full map back onto the
// half grid.
Tensor symmetrize_backward(const Tensor& grad_full, int h_uv, int w_uv);

std::vector<Vec3> apply_deformation(const Tensor& s_full,
                                    const MeshTopology& topo);
// d(loss)/dS given d(loss)/dV; identity scatter onto the grid.
Tensor apply_deformation_backward(const std::vector<Vec3>& grad_v,
                                  const MeshTopology& topo);

std::vector<std::array<int, 2>> face_adjacency(
    const std::vector<std::array<int, 3>>& faces,
    const std::vector<int>& vertex_class);

// Mean of (1 - cos angle) between normals of adjacent face pairs. Pairs with
// a currently degenerate face (area < 1e-12) are skipped; all pairs
// degenerate is an error.
double smoothness_loss(const std::vector<Vec3>& v,
                       const std::vector<std::array<int, 3>>& faces);
double smoothness_loss(const std::vector<Vec3>& v,
                       const std::vector<std::array<int, 3>>& faces,
                       const std::vector<std::array<int, 2>>& pairs);
double smoothness_loss_grad(const std::vector<Vec3>& v,
                            const std::vector<std::array<int, 3>>& faces,
                            const std::vector<std::array<int, 2>>& pairs,
                            std::vector<Vec3>& grad_v);

// Area-weighted uniform surface samples; deterministic for a given rng.
std::vector<Vec3> sample_surface(const std::vector<Vec3>& v,
                                 const std::vector<std::array<int, 3>>& faces,
                                 std::size_t n, Rng& rng);

// Symmetric mean of unsquared nearest-neighbor distances.
double chamfer3d(const std::vector<Vec3>& p, const std::vector<Vec3>& q);

}  // namespace meshfit
