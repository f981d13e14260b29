#include "meshfit/kernels.hpp"

#include <atomic>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace meshfit::kernels {

namespace {

std::atomic<bool> g_parallel{true};

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double sq_dist(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

// One row of the plain-NN sweep: row minimum plus updates into the caller's
// column buffers. Rows must be visited in ascending order per buffer so the
// lowest-index tie rule matches the serial scan.
inline void nn_row(const double* a, std::size_t i, const double* b,
                   std::size_t nb, std::size_t dim, double* row_min,
                   std::uint32_t* row_arg, double* col_min,
                   std::uint32_t* col_arg) {
  const double* ai = a + i * dim;
  double best = kInf;
  std::uint32_t best_j = 0;
  for (std::size_t j = 0; j < nb; ++j) {
    double d2 = sq_dist(ai, b + j * dim, dim);
    if (d2 < best) {
      best = d2;
      best_j = static_cast<std::uint32_t>(j);
    }
    if (d2 < col_min[j]) {
      col_min[j] = d2;
      col_arg[j] = static_cast<std::uint32_t>(i);
    }
  }
  row_min[i] = best;
  row_arg[i] = best_j;
}

inline void ct_row(const double* pos_a, const double* attr_a, std::size_t i,
                   const double* pos_b, const double* attr_b, std::size_t nb,
                   std::size_t attr_dim, const CtParams& p, double* row_min,
                   std::uint32_t* row_arg, double* col_min,
                   std::uint32_t* col_arg) {
  const double* pa = pos_a + i * 2;
  const double* aa = attr_a + i * attr_dim;
  const bool unit_alpha = (p.alpha == 1.0);
  double best = kInf;
  std::uint32_t best_j = 0;
  for (std::size_t j = 0; j < nb; ++j) {
    double ds = std::sqrt(sq_dist(pa, pos_b + j * 2, 2));
    double da = std::sqrt(sq_dist(aa, attr_b + j * attr_dim, attr_dim));
    double spatial = ds + p.eps_s;
    if (!unit_alpha) spatial = std::pow(spatial, p.alpha);
    if (spatial < 1.0) spatial = 1.0;
    double d = spatial * (da + p.eps_a);
    if (d < best) {
      best = d;
      best_j = static_cast<std::uint32_t>(j);
    }
    if (d < col_min[j]) {
      col_min[j] = d;
      col_arg[j] = static_cast<std::uint32_t>(i);
    }
  }
  row_min[i] = best;
  row_arg[i] = best_j;
}

void init_result(NnResult& out, std::size_t na, std::size_t nb) {
  out.row_min.assign(na, kInf);
  out.row_arg.assign(na, 0);
  out.col_min.assign(nb, kInf);
  out.col_arg.assign(nb, 0);
}

// Merge a per-thread column buffer covering rows >= those already merged.
void merge_cols(NnResult& out, const std::vector<double>& col_min,
                const std::vector<std::uint32_t>& col_arg) {
  for (std::size_t j = 0; j < out.col_min.size(); ++j) {
    if (col_min[j] < out.col_min[j]) {
      out.col_min[j] = col_min[j];
      out.col_arg[j] = col_arg[j];
    }
  }
}

template <typename RowFn>
void run_serial(std::size_t na, std::size_t nb, NnResult& out, RowFn row_fn) {
  init_result(out, na, nb);
  for (std::size_t i = 0; i < na; ++i)
    row_fn(i, out.row_min.data(), out.row_arg.data(), out.col_min.data(),
           out.col_arg.data());
}

template <typename RowFn>
void run_parallel(std::size_t na, std::size_t nb, NnResult& out, RowFn row_fn) {
  init_result(out, na, nb);
#ifdef _OPENMP
  int n_threads = omp_get_max_threads();
#else
  int n_threads = 1;
#endif
  if (n_threads <= 1 || na < 2) {
    for (std::size_t i = 0; i < na; ++i)
      row_fn(i, out.row_min.data(), out.row_arg.data(), out.col_min.data(),
             out.col_arg.data());
    return;
  }
  std::vector<std::vector<double>> tl_min(static_cast<std::size_t>(n_threads));
  std::vector<std::vector<std::uint32_t>> tl_arg(
      static_cast<std::size_t>(n_threads));
#pragma omp parallel num_threads(n_threads)
  {
#ifdef _OPENMP
    int tid = omp_get_thread_num();
#else
    int tid = 0;
#endif
    auto& cmin = tl_min[static_cast<std::size_t>(tid)];
    auto& carg = tl_arg[static_cast<std::size_t>(tid)];
    cmin.assign(nb, kInf);
    carg.assign(nb, 0);
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < na; ++i)
      row_fn(i, out.row_min.data(), out.row_arg.data(), cmin.data(),
             carg.data());
  }
  // Static schedule assigns ascending row blocks to ascending thread ids, so
  // merging in tid order reproduces the serial lowest-row tie choice.
  for (int t = 0; t < n_threads; ++t) {
    if (tl_min[static_cast<std::size_t>(t)].empty()) continue;
    merge_cols(out, tl_min[static_cast<std::size_t>(t)],
               tl_arg[static_cast<std::size_t>(t)]);
  }
}

void sqrt_all(std::vector<double>& v) {
  for (double& x : v) x = std::sqrt(x);
}

}  // namespace

void set_parallel(bool enabled) { g_parallel.store(enabled); }
bool parallel_enabled() { return g_parallel.load(); }

void nn_bidirectional_serial(const double* a, std::size_t na, const double* b,
                             std::size_t nb, std::size_t dim, NnResult& out) {
  run_serial(na, nb, out,
             [&](std::size_t i, double* rm, std::uint32_t* ra, double* cm,
                 std::uint32_t* ca) { nn_row(a, i, b, nb, dim, rm, ra, cm, ca); });
  sqrt_all(out.row_min);
  sqrt_all(out.col_min);
}

void nn_bidirectional_parallel(const double* a, std::size_t na, const double* b,
                               std::size_t nb, std::size_t dim, NnResult& out) {
  run_parallel(na, nb, out,
               [&](std::size_t i, double* rm, std::uint32_t* ra, double* cm,
                   std::uint32_t* ca) { nn_row(a, i, b, nb, dim, rm, ra, cm, ca); });
  sqrt_all(out.row_min);
  sqrt_all(out.col_min);
}

NnResult nn_bidirectional(const double* a, std::size_t na, const double* b,
                          std::size_t nb, std::size_t dim) {
  NnResult out;
  if (parallel_enabled())
    nn_bidirectional_parallel(a, na, b, nb, dim, out);
  else
    nn_bidirectional_serial(a, na, b, nb, dim, out);
  return out;
}

void ct_bidirectional_serial(const double* pos_a, const double* attr_a,
                             std::size_t na, const double* pos_b,
                             const double* attr_b, std::size_t nb,
                             std::size_t attr_dim, const CtParams& p,
                             NnResult& out) {
  run_serial(na, nb, out,
             [&](std::size_t i, double* rm, std::uint32_t* ra, double* cm,
                 std::uint32_t* ca) {
               ct_row(pos_a, attr_a, i, pos_b, attr_b, nb, attr_dim, p, rm, ra,
                      cm, ca);
             });
}

void ct_bidirectional_parallel(const double* pos_a, const double* attr_a,
                               std::size_t na, const double* pos_b,
                               const double* attr_b, std::size_t nb,
                               std::size_t attr_dim, const CtParams& p,
                               NnResult& out) {
  run_parallel(na, nb, out,
               [&](std::size_t i, double* rm, std::uint32_t* ra, double* cm,
                   std::uint32_t* ca) {
                 ct_row(pos_a, attr_a, i, pos_b, attr_b, nb, attr_dim, p, rm,
                        ra, cm, ca);
               });
}

NnResult ct_bidirectional(const double* pos_a, const double* attr_a,
                          std::size_t na, const double* pos_b,
                          const double* attr_b, std::size_t nb,
                          std::size_t attr_dim, const CtParams& p) {
  NnResult out;
  if (parallel_enabled())
    ct_bidirectional_parallel(pos_a, attr_a, na, pos_b, attr_b, nb, attr_dim,
                              p, out);
  else
    ct_bidirectional_serial(pos_a, attr_a, na, pos_b, attr_b, nb, attr_dim, p,
                            out);
  return out;
}

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace meshfit::kernels
