#include "orbitsig/config_file.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "orbitsig/error.hpp"

namespace orbitsig {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& origin) {
  KeyValueConfig cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kBadConfig,
                  origin + ":" + std::to_string(lineno) + ": expected `key = value`");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) {
      throw Error(ErrorCode::kBadConfig, origin + ":" + std::to_string(lineno) + ": empty key");
    }
    if (cfg.entries_.count(key) != 0) {
      throw Error(ErrorCode::kBadConfig,
                  origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    cfg.entries_[key] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kBadConfig, "cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) != 0; }

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
  consumed_.erase(key);
}

std::optional<std::string> KeyValueConfig::get_string(const std::string& key) {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  consumed_.insert(key);
  return it->second;
}

namespace {

double to_double(const std::string& key, const std::string& text) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE) {
    throw Error(ErrorCode::kBadConfig, "key '" + key + "': not a number: '" + text + "'");
  }
  return v;
}

}  // namespace

std::optional<double> KeyValueConfig::get_double(const std::string& key) {
  auto s = get_string(key);
  if (!s) return std::nullopt;
  return to_double(key, *s);
}

std::optional<long long> KeyValueConfig::get_int(const std::string& key) {
  auto s = get_string(key);
  if (!s) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s->c_str(), &end, 10);
  if (s->empty() || end != s->c_str() + s->size() || errno == ERANGE) {
    throw Error(ErrorCode::kBadConfig, "key '" + key + "': not an integer: '" + *s + "'");
  }
  return v;
}

std::optional<std::vector<double>> KeyValueConfig::get_doubles(const std::string& key) {
  auto s = get_string(key);
  if (!s) return std::nullopt;
  std::vector<double> out;
  for (const auto& item : split_list(*s)) out.push_back(to_double(key, item));
  return out;
}

std::optional<std::vector<std::string>> KeyValueConfig::get_strings(const std::string& key) {
  auto s = get_string(key);
  if (!s) return std::nullopt;
  return split_list(*s);
}

void KeyValueConfig::finish() const {
  std::string unknown;
  for (const auto& [key, value] : entries_) {
    if (consumed_.count(key) == 0) unknown += (unknown.empty() ? "" : ", ") + key;
  }
  if (!unknown.empty()) {
    throw Error(ErrorCode::kBadConfig, origin_ + ": unknown keys: " + unknown);
  }
}

}  // namespace orbitsig
