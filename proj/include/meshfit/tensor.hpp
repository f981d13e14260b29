#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "meshfit/common.hpp"

namespace meshfit {

// Dense row-major tensor of 64-bit floats. All optimization math runs in
// doubles; the on-disk container (MIV1) stores 32-bit payloads.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, double fill = 0.0);

  std::size_t numel() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  double& at(std::size_t i, std::size_t j);
  double at(std::size_t i, std::size_t j) const;
  double& at(std::size_t i, std::size_t j, std::size_t k);
  double at(std::size_t i, std::size_t j, std::size_t k) const;

  bool all_finite() const;
  static Tensor from_vector(const std::vector<double>& v);
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);

// Counter-based deterministic generator (splitmix64). The stream is a pure
// function of (seed, draw index), identical on every platform; Gaussians come
// from Box-Muller on two uniform draws so no libm distribution enters the
// determinism contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  double uniform();                 // [0, 1)
  double uniform(double lo, double hi);
  double gaussian();                // N(0, 1)
  std::uint64_t below(std::uint64_t n);  // [0, n)

  std::uint64_t seed() const { return state_; }

 private:
  std::uint64_t state_;
};

struct GradReport {
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  std::size_t n_checked = 0;
  std::size_t worst_index = 0;
};

using ScalarFn = std::function<double(const Tensor&)>;

// Central-difference check of `analytic_grad` against f around x. Coordinates
// flagged in `exclude` (e.g. near a Chamfer argmin switch) are skipped.
GradReport grad_check(const ScalarFn& f, const Tensor& x,
                      const Tensor& analytic_grad, double eps,
                      const std::vector<bool>* exclude = nullptr);

// MIV1 tensor container. Layout: magic "MIV1", u32 tensor count, then per
// tensor u16 name length + name bytes + u8 rank + rank*u32 dims + f32
// little-endian row-major payload. No padding anywhere.
using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

void save_tensors(const std::string& path, const NamedTensors& tensors);
NamedTensors load_tensors(const std::string& path);

const Tensor* find_tensor(const NamedTensors& tensors, const std::string& name);

}  // namespace meshfit
