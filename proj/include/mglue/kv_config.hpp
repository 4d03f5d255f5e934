#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mglue {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Flat `key = value` file; `#` starts a comment.  Later keys override earlier ones.
class KvConfig {
public:
  KvConfig() = default;
  static KvConfig load(const std::filesystem::path& file);
  static KvConfig parse(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  int integer(const std::string& key) const;
  int integer_or(const std::string& key, int fallback) const;
  // Comma- or whitespace-separated list of numbers.
  std::vector<double> numbers(const std::string& key) const;
  std::vector<double> numbers_or(const std::string& key, std::vector<double> fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& values() const { return values_; }
  const std::string& origin() const { return origin_; }

private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

}  // namespace mglue
