#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace meshfit::kernels {

// Global switch between the OpenMP kernels and the serial reference path.
// Both paths run the same per-pair arithmetic in the same order within a row;
// column minima merge by (value, index) so results are identical for any
// thread count.
void set_parallel(bool enabled);
bool parallel_enabled();

// Row/column nearest-neighbor minima of a pairwise distance matrix, without
// materializing the matrix. Ties resolve to the lowest index.
struct NnResult {
  std::vector<double> row_min;
  std::vector<std::uint32_t> row_arg;
  std::vector<double> col_min;
  std::vector<std::uint32_t> col_arg;
};

// Plain Euclidean nearest neighbors between two dim-d point sets.
void nn_bidirectional_serial(const double* a, std::size_t na, const double* b,
                             std::size_t nb, std::size_t dim, NnResult& out);
void nn_bidirectional_parallel(const double* a, std::size_t na, const double* b,
                               std::size_t nb, std::size_t dim, NnResult& out);
NnResult nn_bidirectional(const double* a, std::size_t na, const double* b,
                          std::size_t nb, std::size_t dim);

// Colored-point pairwise reduce: entries are
//   max((|pa-pb| + eps_s)^alpha, 1) * (|aa-ab| + eps_a)
// with 2-d positions and attr_dim-d attributes.
struct CtParams {
  double eps_s = 0.9;
  double eps_a = 1.0;
  double alpha = 1.0;
};

void ct_bidirectional_serial(const double* pos_a, const double* attr_a,
                             std::size_t na, const double* pos_b,
                             const double* attr_b, std::size_t nb,
                             std::size_t attr_dim, const CtParams& p,
                             NnResult& out);
void ct_bidirectional_parallel(const double* pos_a, const double* attr_a,
                               std::size_t na, const double* pos_b,
                               const double* attr_b, std::size_t nb,
                               std::size_t attr_dim, const CtParams& p,
                               NnResult& out);
NnResult ct_bidirectional(const double* pos_a, const double* attr_a,
                          std::size_t na, const double* pos_b,
                          const double* attr_b, std::size_t nb,
                          std::size_t attr_dim, const CtParams& p);

// Serial sum; callers use it so totals do not depend on the thread count.
double sum(const std::vector<double>& v);

}  // namespace meshfit::kernels
