#include "mglue/kv_config.hpp"

#include <fstream>
#include <sstream>

namespace mglue {

namespace {
std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

double to_number(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    double d = std::stod(v, &used);
    if (trim(v.substr(used)).empty()) return d;
  } catch (const std::logic_error&) {
  }
  throw ConfigError("key '" + key + "' is not a number: '" + v + "'");
}
}  // namespace

KvConfig KvConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), file.string());
}

KvConfig KvConfig::parse(const std::string& text, const std::string& origin) {
  KvConfig cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

std::string KvConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing key '" + key + "' in " + origin_);
  return it->second;
}

std::string KvConfig::get_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

double KvConfig::number(const std::string& key) const { return to_number(key, get(key)); }

double KvConfig::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

int KvConfig::integer(const std::string& key) const {
  double d = number(key);
  if (d != static_cast<int>(d)) throw ConfigError("key '" + key + "' must be an integer");
  return static_cast<int>(d);
}

int KvConfig::integer_or(const std::string& key, int fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::vector<double> KvConfig::numbers(const std::string& key) const {
  std::string v = get(key);
  for (char& c : v)
    if (c == ',') c = ' ';
  std::istringstream in(v);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(to_number(key, tok));
  return out;
}

std::vector<double> KvConfig::numbers_or(const std::string& key, std::vector<double> fallback) const {
  return has(key) ? numbers(key) : fallback;
}

}  // namespace mglue
