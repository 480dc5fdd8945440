#include "nsdg/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace nsdg {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool valid_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

std::vector<std::string> split_list(const std::string& s) {
  std::string t = s;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream is(t);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

double to_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError(key, "expected a number, got '" + s + "'");
  return v;
}

int to_int(const std::string& key, const std::string& s) {
  int v = 0;
  const char* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError(key, "expected an integer, got '" + s + "'");
  return v;
}

}  // namespace

Config Config::parse(std::string_view text) {
  Config c;
  std::string section;
  std::istringstream is{std::string(text)};
  int lineno = 0;
  for (std::string line; std::getline(is, line);) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("", where + ": unterminated section header");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      if (!valid_name(section)) throw ConfigError("", where + ": invalid section name '" + section + "'");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("", where + ": expected key = value");
    const std::string name = trim(std::string_view(t).substr(0, eq));
    const std::string key = section.empty() ? name : section + "." + name;
    if (!valid_name(name)) throw ConfigError(key, where + ": invalid key name");
    if (c.values_.count(key)) throw ConfigError(key, where + ": duplicate key");
    c.values_[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("", "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

const std::string* Config::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

std::optional<std::string> Config::get_string(const std::string& key) const {
  const std::string* v = raw(key);
  if (!v) return std::nullopt;
  if (v->empty()) throw ConfigError(key, "empty value");
  return *v;
}

std::optional<double> Config::get_double(const std::string& key) const {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  return to_double(key, *s);
}

std::optional<int> Config::get_int(const std::string& key) const {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  return to_int(key, *s);
}

std::optional<bool> Config::get_bool(const std::string& key) const {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  if (*s == "true" || *s == "yes" || *s == "1" || *s == "on") return true;
  if (*s == "false" || *s == "no" || *s == "0" || *s == "off") return false;
  throw ConfigError(key, "expected a boolean, got '" + *s + "'");
}

std::optional<std::vector<double>> Config::get_doubles(const std::string& key) const {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  std::vector<double> out;
  for (const auto& w : split_list(*s)) out.push_back(to_double(key, w));
  return out;
}

std::optional<std::vector<int>> Config::get_ints(const std::string& key) const {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  std::vector<int> out;
  for (const auto& w : split_list(*s)) out.push_back(to_int(key, w));
  return out;
}

std::optional<std::vector<std::string>> Config::get_strings(const std::string& key) const {
  const auto s = get_string(key);
  if (!s) return std::nullopt;
  return split_list(*s);
}

void Config::reject_unused() const {
  for (const auto& [key, value] : values_)
    if (!used_.count(key)) throw ConfigError(key, "unknown key");
}

}  // namespace nsdg
