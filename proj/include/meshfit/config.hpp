#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "meshfit/common.hpp"

namespace meshfit {

// Flat key-value configuration: one `key = value` per line, `#` comments,
// dotted keys, bracketed lists. Keys are validated against a fixed schema;
// unknown keys are rejected. `--set key=value` overrides reuse apply_kv.
class Config {
 public:
  static Config defaults();
  static Config from_file(const std::string& path);

  void apply_file(const std::string& path);
  void apply_kv(const std::string& key, const std::string& value);
  void apply_set_arg(const std::string& key_eq_value);

  bool has(const std::string& key) const;
  std::string get_str(const std::string& key) const;
  double get_f(const std::string& key) const;
  int get_i(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_b(const std::string& key) const;
  std::vector<double> get_list(const std::string& key) const;
  std::vector<int> get_ilist(const std::string& key) const;

  // Paths resolve relative to the directory of the last config file that set
  // them (so a target bundle can reference its own files).
  std::string get_path(const std::string& key) const;

  // Canonical schema-ordered dump.
  std::string to_text() const;

 private:
  struct Entry {
    std::string key;
    std::string value;
    std::string base_dir;  // for path keys
  };
  std::vector<Entry> entries_;  // schema order

  Entry& find(const std::string& key);
  const Entry& find(const std::string& key) const;
  std::string current_base_;
};

}  // namespace meshfit
