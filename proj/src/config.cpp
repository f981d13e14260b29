#include "meshfit/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace meshfit {

namespace {

struct SchemaEntry {
  const char* key;
  const char* def;
  bool is_path;
};

// Defaults follow the inversion recipe the artifact ships with; the snapshot
// test pins them.
const SchemaEntry kSchema[] = {
    {"seed", "1", false},
    {"workers", "1", false},
    {"input.image", "", true},
    {"input.mask", "", true},
    {"input.dir", "", true},
    {"camera.scale", "0.8", false},
    {"camera.tx", "0", false},
    {"camera.ty", "0", false},
    {"camera.quat", "[1,0,0,0]", false},
    {"decoder.weights", "", true},
    {"decoder.seed", "7", false},
    {"decoder.latent_dim", "64", false},
    {"decoder.hidden_dim", "256", false},
    {"decoder.grid_h", "32", false},
    {"decoder.grid_w", "32", false},
    {"decoder.tex_h", "64", false},
    {"decoder.tex_w", "64", false},
    {"decoder.fourier_k", "16", false},
    {"render.resolution", "128", false},
    {"render.background", "[0.5,0.5,0.5]", false},
    {"render.mesh", "", true},
    {"render.texture", "", true},
    {"render.identity_pose", "false", false},
    {"inversion.stage_lr_z", "[0.1,0.05,0.01,0.005]", false},
    {"inversion.stage_lr_cam", "[0.01,0.005,0.001,0.0005]", false},
    {"inversion.stage_iters", "[50,50,50,50]", false},
    {"inversion.adam_beta1", "0", false},
    {"inversion.adam_beta2", "0.99", false},
    {"inversion.n_sample", "8096", false},
    {"inversion.resample_points", "true", false},
    {"inversion.reset_moments", "true", false},
    {"loss.w_pct", "1", false},
    {"loss.w_fct", "0.05", false},
    {"loss.w_cm", "10", false},
    {"loss.w_smooth", "0.00005", false},
    {"loss.w_z", "0.05", false},
    {"loss.eps_s", "0.9", false},
    {"loss.eps_a", "1", false},
    {"loss.alpha", "1", false},
    {"sensitivity.n_shapes", "100", false},
    {"sensitivity.surface_samples", "4096", false},
    {"synthetic.perturb_deg", "5", false},
    {"synthetic.perturb_scale", "0.05", false},
    {"synthetic.perturb_t", "0.02", false},
    {"synthetic.min_coverage", "0.05", false},
    {"eps_sweep.n_targets", "3", false},
    {"eps_sweep.values", "[0.999,0.99,0.98,0.95,0.9]", false},
};

bool schema_is_path(const std::string& key) {
  for (const auto& e : kSchema)
    if (key == e.key) return e.is_path;
  return false;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string dir_of(const std::string& path) {
  std::size_t p = path.find_last_of('/');
  if (p == std::string::npos) return ".";
  if (p == 0) return "/";
  return path.substr(0, p);
}

double parse_number(const std::string& key, const std::string& v) {
  char* end = nullptr;
  double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError("config: key '" + key + "' expects a number, got '" + v +
                      "'");
  return x;
}

}  // namespace

Config Config::defaults() {
  Config c;
  for (const auto& e : kSchema) c.entries_.push_back({e.key, e.def, "."});
  c.current_base_ = ".";
  return c;
}

Config Config::from_file(const std::string& path) {
  Config c = defaults();
  c.apply_file(path);
  return c;
}

Config::Entry& Config::find(const std::string& key) {
  for (auto& e : entries_)
    if (e.key == key) return e;
  throw ConfigError("config: unknown key '" + key + "'");
}

const Config::Entry& Config::find(const std::string& key) const {
  for (const auto& e : entries_)
    if (e.key == key) return e;
  throw ConfigError("config: unknown key '" + key + "'");
}

void Config::apply_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path);
  current_base_ = dir_of(path);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: " + path + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    apply_kv(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  current_base_ = ".";
}

void Config::apply_kv(const std::string& key, const std::string& value) {
  Entry& e = find(key);
  e.value = value;
  e.base_dir = current_base_;
}

void Config::apply_set_arg(const std::string& key_eq_value) {
  std::size_t eq = key_eq_value.find('=');
  if (eq == std::string::npos)
    throw ConfigError("--set expects key=value, got '" + key_eq_value + "'");
  apply_kv(trim(key_eq_value.substr(0, eq)), trim(key_eq_value.substr(eq + 1)));
}

bool Config::has(const std::string& key) const {
  return !find(key).value.empty();
}

std::string Config::get_str(const std::string& key) const {
  return find(key).value;
}

double Config::get_f(const std::string& key) const {
  return parse_number(key, find(key).value);
}

int Config::get_i(const std::string& key) const {
  double v = get_f(key);
  int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw ConfigError("config: key '" + key + "' expects an integer");
  return i;
}

std::uint64_t Config::get_u64(const std::string& key) const {
  const std::string& v = find(key).value;
  char* end = nullptr;
  std::uint64_t x = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError("config: key '" + key + "' expects an unsigned integer");
  return x;
}

bool Config::get_b(const std::string& key) const {
  const std::string& v = find(key).value;
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: key '" + key + "' expects true/false");
}

std::vector<double> Config::get_list(const std::string& key) const {
  const std::string& v = find(key).value;
  if (v.size() < 2 || v.front() != '[' || v.back() != ']')
    throw ConfigError("config: key '" + key + "' expects [a,b,...]");
  std::vector<double> out;
  std::stringstream ss(v.substr(1, v.size() - 2));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_number(key, item));
  }
  if (out.empty())
    throw ConfigError("config: key '" + key + "' expects a non-empty list");
  return out;
}

std::vector<int> Config::get_ilist(const std::string& key) const {
  std::vector<int> out;
  for (double v : get_list(key)) {
    int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
      throw ConfigError("config: key '" + key + "' expects integers");
    out.push_back(i);
  }
  return out;
}

std::string Config::get_path(const std::string& key) const {
  const Entry& e = find(key);
  if (!schema_is_path(key))
    throw ConfigError("config: key '" + key + "' is not a path");
  if (e.value.empty()) return "";
  if (e.value.front() == '/' || e.base_dir == "." ) return e.value;
  return e.base_dir + "/" + e.value;
}

std::string Config::to_text() const {
  std::string out;
  for (const auto& e : entries_) {
    out += e.key;
    out += " = ";
    out += e.value;
    out += "\n";
  }
  return out;
}

}  // namespace meshfit
