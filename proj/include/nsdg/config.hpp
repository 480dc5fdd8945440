#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nsdg {

/// Invalid configuration; key() is the dotted path "section.key" (or "" for syntax errors).
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

private:
  std::string key_;
};

/// Flat key=value text with [section] headers. '#' and ';' start comments.
/// Keys before any section header live in the unnamed top-level section.
/// Typed getters record which keys were consumed so leftovers can be rejected.
class Config {
public:
  static Config parse(std::string_view text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::optional<std::string> get_string(const std::string& key) const;
  std::optional<double> get_double(const std::string& key) const;
  std::optional<int> get_int(const std::string& key) const;
  std::optional<bool> get_bool(const std::string& key) const;
  /// Whitespace- or comma-separated list.
  std::optional<std::vector<double>> get_doubles(const std::string& key) const;
  std::optional<std::vector<int>> get_ints(const std::string& key) const;
  std::optional<std::vector<std::string>> get_strings(const std::string& key) const;

  /// Throws ConfigError naming the first key never read by a getter.
  void reject_unused() const;

  const std::map<std::string, std::string>& values() const { return values_; }

private:
  const std::string* raw(const std::string& key) const;

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace nsdg
