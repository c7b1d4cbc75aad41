#include "whitebench/harness/config.hpp"

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <sstream>

#include "whitebench/errors.hpp"

namespace wb {

namespace pt = boost::property_tree;

namespace {

std::string path_key(const std::string& section, const std::string& key) { return section + "." + key; }

ConfigFile from_stream(std::istream& in, const std::string& source,
                       std::map<std::string, std::map<std::string, std::string>>& values) {
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ": line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(source + ": key \"" + section + "\" appears outside any [section]");
    }
    auto& dst = values[section];
    for (const auto& [key, leaf] : body) dst[key] = boost::algorithm::trim_copy(leaf.data());
  }
  return {};
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text, const std::string& source) {
  ConfigFile c;
  c.source_ = source;
  std::istringstream in(text);
  from_stream(in, source, c.values_);
  return c;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  ConfigFile c;
  c.source_ = path;
  from_stream(in, path, c.values_);
  return c;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  const auto s = values_.find(section);
  return s != values_.end() && s->second.count(key) > 0;
}

bool ConfigFile::has_section(const std::string& section) const { return values_.count(section) > 0; }

std::optional<std::string> ConfigFile::get(const std::string& section, const std::string& key) {
  used_.insert(path_key(section, key));
  used_.insert(section);
  const auto s = values_.find(section);
  if (s == values_.end()) return std::nullopt;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

std::string ConfigFile::get_or(const std::string& section, const std::string& key, const std::string& fallback) {
  return get(section, key).value_or(fallback);
}

std::string ConfigFile::require(const std::string& section, const std::string& key) {
  auto v = get(section, key);
  if (!v) throw ConfigError(source_ + ": missing required key [" + section + "] " + key);
  return *v;
}

namespace {

template <typename T>
T parse_number(const std::string& s, const std::string& where) {
  T v{};
  const char* b = s.data();
  const char* e = b + s.size();
  const auto [ptr, ec] = std::from_chars(b, e, v);
  if (s.empty() || ec != std::errc() || ptr != e) throw ConfigError(where + ": not a valid number: \"" + s + "\"");
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(boost::algorithm::trim_copy(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(boost::algorithm::trim_copy(cur));
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

}  // namespace

double ConfigFile::get_double(const std::string& section, const std::string& key, double fallback) {
  const auto v = get(section, key);
  return v ? parse_number<double>(*v, source_ + ": [" + section + "] " + key) : fallback;
}

long ConfigFile::get_long(const std::string& section, const std::string& key, long fallback) {
  const auto v = get(section, key);
  return v ? parse_number<long>(*v, source_ + ": [" + section + "] " + key) : fallback;
}

std::uint64_t ConfigFile::get_u64(const std::string& section, const std::string& key, std::uint64_t fallback) {
  const auto v = get(section, key);
  return v ? parse_number<std::uint64_t>(*v, source_ + ": [" + section + "] " + key) : fallback;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key, bool fallback) {
  const auto v = get(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "yes" || *v == "1") return true;
  if (*v == "false" || *v == "no" || *v == "0") return false;
  throw ConfigError(source_ + ": [" + section + "] " + key + ": expected true or false, got \"" + *v + "\"");
}

std::vector<std::string> ConfigFile::get_list(const std::string& section, const std::string& key) {
  const auto v = get(section, key);
  return v ? split_list(*v) : std::vector<std::string>{};
}

std::vector<double> ConfigFile::get_doubles(const std::string& section, const std::string& key) {
  std::vector<double> out;
  for (const auto& s : get_list(section, key)) out.push_back(parse_number<double>(s, source_ + ": [" + section + "] " + key));
  return out;
}

std::vector<long> ConfigFile::get_longs(const std::string& section, const std::string& key) {
  std::vector<long> out;
  for (const auto& s : get_list(section, key)) out.push_back(parse_number<long>(s, source_ + ": [" + section + "] " + key));
  return out;
}

void ConfigFile::reject_unknown() const {
  std::string bad;
  for (const auto& [section, keys] : values_) {
    if (!used_.count(section)) {
      bad += " [" + section + "]";
      continue;
    }
    for (const auto& [key, value] : keys) {
      if (!used_.count(path_key(section, key))) bad += " [" + section + "] " + key;
    }
  }
  if (!bad.empty()) throw ConfigError(source_ + ": unknown configuration entries:" + bad);
}

}  // namespace wb
