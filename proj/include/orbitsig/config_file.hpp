#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace orbitsig {

// Plain-text `key = value` configuration. Blank lines and lines starting with
// '#' are ignored. Consumers pull the keys they understand with the get_*
// helpers and then call finish(), which rejects anything left unread.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  std::optional<std::string> get_string(const std::string& key);
  std::optional<double> get_double(const std::string& key);
  std::optional<long long> get_int(const std::string& key);
  std::optional<std::vector<double>> get_doubles(const std::string& key);
  std::optional<std::vector<std::string>> get_strings(const std::string& key);

  // Throws BadConfig listing every key that was never consumed.
  void finish() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
  std::set<std::string> consumed_;
  std::string origin_;
};

std::string trim(const std::string& s);
std::vector<std::string> split_list(const std::string& s, char sep = ',');

}  // namespace orbitsig
