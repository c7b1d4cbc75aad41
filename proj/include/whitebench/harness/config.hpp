#pragma once
// Flat `key = value` files with `[section]` headers; `;` starts a comment.
// Every key must be consumed by the reader, so a typo surfaces as an error
// instead of a silently ignored setting.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace wb {

class ConfigFile {
 public:
  static ConfigFile load(const std::string& path);
  static ConfigFile parse(const std::string& text, const std::string& source = "<config>");

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const;

  std::optional<std::string> get(const std::string& section, const std::string& key);
  std::string get_or(const std::string& section, const std::string& key, const std::string& fallback);
  std::string require(const std::string& section, const std::string& key);

  double get_double(const std::string& section, const std::string& key, double fallback);
  long get_long(const std::string& section, const std::string& key, long fallback);
  std::uint64_t get_u64(const std::string& section, const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& section, const std::string& key, bool fallback);
  /// Comma-separated list; empty when the key is absent.
  std::vector<std::string> get_list(const std::string& section, const std::string& key);
  std::vector<double> get_doubles(const std::string& section, const std::string& key);
  std::vector<long> get_longs(const std::string& section, const std::string& key);

  /// Throws ConfigError listing keys and sections nobody asked for.
  void reject_unknown() const;

  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::map<std::string, std::map<std::string, std::string>> values_;
  std::set<std::string> used_;
};

}  // namespace wb
