#include "meshfit/tensor.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

namespace meshfit {

Tensor::Tensor(std::vector<std::size_t> dims, double fill)
    : shape(std::move(dims)), data(shape_numel(shape), fill) {}

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

double& Tensor::at(std::size_t i, std::size_t j) {
  return data[i * shape[1] + j];
}
double Tensor::at(std::size_t i, std::size_t j) const {
  return data[i * shape[1] + j];
}
double& Tensor::at(std::size_t i, std::size_t j, std::size_t k) {
  return data[(i * shape[1] + j) * shape[2] + k];
}
double Tensor::at(std::size_t i, std::size_t j, std::size_t k) const {
  return data[(i * shape[1] + j) * shape[2] + k];
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor Tensor::from_vector(const std::vector<double>& v) {
  Tensor t({v.size()});
  t.data = v;
  return t;
}

std::uint64_t Rng::next_u64() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::gaussian() {
  double u1 = 1.0 - uniform();  // (0, 1]
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

GradReport grad_check(const ScalarFn& f, const Tensor& x,
                      const Tensor& analytic_grad, double eps,
                      const std::vector<bool>* exclude) {
  if (eps <= 0.0) throw NumericError("grad_check: eps must be positive");
  if (analytic_grad.numel() != x.numel())
    throw NumericError("grad_check: gradient/variable size mismatch");

  GradReport report;
  Tensor probe = x;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    if (exclude && (*exclude)[i]) continue;
    double saved = probe[i];
    probe[i] = saved + eps;
    double fp = f(probe);
    probe[i] = saved - eps;
    double fm = f(probe);
    probe[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      char msg[96];
      std::snprintf(msg, sizeof(msg),
                    "grad_check: non-finite value at coordinate %zu", i);
      throw NumericError(msg);
    }
    double fd = (fp - fm) / (2.0 * eps);
    double g = analytic_grad[i];
    double abs_err = std::fabs(fd - g);
    double rel_err =
        abs_err / std::max({std::fabs(fd), std::fabs(g), 1e-6});
    if (abs_err > report.max_abs_err) report.max_abs_err = abs_err;
    if (rel_err > report.max_rel_err) {
      report.max_rel_err = rel_err;
      report.worst_index = i;
    }
    ++report.n_checked;
  }
  if (report.n_checked == 0)
    throw NumericError("grad_check: no coordinates checked");
  return report;
}

namespace {

constexpr unsigned char kMagic[4] = {0x4D, 0x49, 0x56, 0x31};  // "MIV1"
constexpr std::size_t kMaxElems = std::size_t(1) << 31;

void put_u16(std::ostream& os, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

bool get_bytes(std::istream& is, void* dst, std::size_t n) {
  is.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(is.gcount()) == n;
}

std::uint16_t load_u16(const unsigned char* b) {
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t load_u32(const unsigned char* b) {
  return b[0] | (b[1] << 8) | (b[2] << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

float f32_from_le(const unsigned char* b) {
  std::uint32_t u = load_u32(b);
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

}  // namespace

void save_tensors(const std::string& path, const NamedTensors& tensors) {
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const std::string& name = tensors[i].first;
    if (name.empty() || name.size() > 64)
      throw IoError("save_tensors: name length must be in [1, 64]: " + name);
    for (char c : name)
      if (static_cast<unsigned char>(c) < 0x20 ||
          static_cast<unsigned char>(c) > 0x7E)
        throw IoError("save_tensors: non-ASCII name: " + name);
    for (std::size_t j = 0; j < i; ++j)
      if (tensors[j].first == name)
        throw IoError("save_tensors: duplicate name: " + name);
    if (tensors[i].second.numel() != shape_numel(tensors[i].second.shape))
      throw IoError("save_tensors: shape/data mismatch for " + name);
  }

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("save_tensors: cannot open " + path);
  os.write(reinterpret_cast<const char*>(kMagic), 4);
  put_u32(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_u16(os, static_cast<std::uint16_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    os.put(static_cast<char>(t.rank()));
    for (std::size_t d : t.shape) put_u32(os, static_cast<std::uint32_t>(d));
    for (double v : t.data) {
      float f = static_cast<float>(v);
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      put_u32(os, u);
    }
  }
  if (!os) throw IoError("save_tensors: write failure on " + path);
}

NamedTensors load_tensors(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("load_tensors: cannot open " + path);

  unsigned char head[8];
  if (!get_bytes(is, head, 8))
    throw IoError("load_tensors: truncated file (header): " + path);
  if (std::memcmp(head, kMagic, 4) != 0)
    throw IoError("load_tensors: bad magic in " + path);
  std::uint32_t count = load_u32(head + 4);

  NamedTensors out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    unsigned char lb[2];
    if (!get_bytes(is, lb, 2))
      throw IoError("load_tensors: truncated file (name length): " + path);
    std::uint16_t name_len = load_u16(lb);
    std::string name(name_len, '\0');
    if (!get_bytes(is, name.data(), name_len))
      throw IoError("load_tensors: truncated file (name): " + path);
    unsigned char rank;
    if (!get_bytes(is, &rank, 1))
      throw IoError("load_tensors: truncated file (rank): " + path);
    std::vector<std::size_t> shape(rank);
    std::size_t n = 1;
    for (unsigned r = 0; r < rank; ++r) {
      unsigned char db[4];
      if (!get_bytes(is, db, 4))
        throw IoError("load_tensors: truncated file (dims): " + path);
      std::uint32_t d = load_u32(db);
      shape[r] = d;
      if (d != 0 && n > kMaxElems / d)
        throw IoError("load_tensors: shape overflow in " + path);
      n *= d;
    }
    if (n > kMaxElems)
      throw IoError("load_tensors: shape overflow in " + path);
    Tensor t(shape);
    std::vector<unsigned char> payload(n * 4);
    if (!get_bytes(is, payload.data(), payload.size()))
      throw IoError("load_tensors: truncated file (payload): " + path);
    for (std::size_t k = 0; k < n; ++k)
      t.data[k] = static_cast<double>(f32_from_le(payload.data() + 4 * k));
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

const Tensor* find_tensor(const NamedTensors& tensors,
                          const std::string& name) {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

}  // namespace meshfit
