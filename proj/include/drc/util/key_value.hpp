#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace drc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ordered `key = value` pairs. Blank lines and lines starting with '#' are
/// ignored; keys may repeat only once per file.
class KeyValueFile {
 public:
  static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueFile load(const std::filesystem::path& file);

  void set(const std::string& key, const std::string& value);
  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  std::string str() const;

 private:
  std::map<std::string, std::string> values_;
};

int parse_int(const std::string& key, const std::string& value);
long long parse_int64(const std::string& key, const std::string& value);
double parse_double(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);
std::vector<int> parse_int_list(const std::string& key, const std::string& value);

std::string format_double(double value);
std::string format_int_list(const std::vector<int>& values);

}  // namespace drc
