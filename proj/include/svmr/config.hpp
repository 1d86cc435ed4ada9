#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace svmr {

/// Flat `key = value` text configuration. Lines starting with '#' are
/// comments. Typed getters raise config errors on malformed values.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  std::string to_text() const;

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  /// Applies a "key=value" override.
  void apply_override(const std::string& assignment);

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<long long> get_int_list(const std::string& key, const std::vector<long long>& fallback) const;

  /// Rejects keys outside `known` (prefix matches with a trailing '.').
  void require_known(const std::set<std::string>& known) const;

  /// FNV-1a over the canonical text; recorded in logs next to the seed.
  std::uint64_t hash() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::string origin_ = "config";
};

std::string hex64(std::uint64_t v);

}  // namespace svmr
