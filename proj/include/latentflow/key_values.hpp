#pragma once

#include <map>
#include <string>
#include <vector>

namespace latentflow {

/// Ordered `key = value` entries. Blank lines and `#` comments are skipped.
struct KeyValues {
  std::vector<std::pair<std::string, std::string>> entries;

  static KeyValues parse(const std::string& text);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;  ///< ConfigError if missing
  std::string render() const;
};

double parse_double(const std::string& key, const std::string& value);
long long parse_int(const std::string& key, const std::string& value);
std::size_t parse_size(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);

/// Shortest decimal that round-trips the double.
std::string format_double(double v);

}  // namespace latentflow
