#include "sdelab/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace sdelab {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Drops a trailing comment that is not inside a string literal.
std::string_view stripComment(std::string_view s) {
  bool inStr = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) inStr = !inStr;
    if (s[i] == '#' && !inStr) return s.substr(0, i);
  }
  return s;
}

bool validKey(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  return k.front() != '.' && k.back() != '.';
}

bool parseNumber(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  std::string buf;
  buf.reserve(s.size());
  for (char c : s)
    if (c != '_') buf.push_back(c);
  const char* b = buf.data();
  const char* e = b + buf.size();
  auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e && !buf.empty();
}

bool parseString(std::string_view s, std::string& out) {
  s = trim(s);
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') return false;
  out.clear();
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '\\' && i + 2 < s.size()) {
      ++i;
      out.push_back(s[i] == 'n' ? '\n' : s[i]);
    } else if (s[i] == '"') {
      return false;
    } else {
      out.push_back(s[i]);
    }
  }
  return true;
}

std::vector<std::string_view> splitTopLevel(std::string_view s) {
  std::vector<std::string_view> parts;
  bool inStr = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') inStr = !inStr;
    if (s[i] == ',' && !inStr) {
      parts.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  auto last = trim(s.substr(start));
  if (!last.empty() || !parts.empty()) parts.push_back(last);
  if (!parts.empty() && parts.back().empty()) parts.pop_back(); // trailing comma
  return parts;
}

Config::Value parseValue(std::string_view raw, const std::string& where) {
  const std::string_view s = trim(raw);
  if (s.empty()) throw ConfigError(where + ": missing value");
  if (s == "true") return true;
  if (s == "false") return false;
  if (s.front() == '"') {
    std::string out;
    if (!parseString(s, out)) throw ConfigError(where + ": malformed string");
    return out;
  }
  if (s.front() == '[') {
    if (s.back() != ']') throw ConfigError(where + ": arrays must be closed on the same line");
    const auto parts = splitTopLevel(s.substr(1, s.size() - 2));
    if (parts.empty()) return std::vector<double>{};
    if (parts.front().front() == '"') {
      std::vector<std::string> out;
      for (auto p : parts) {
        std::string v;
        if (!parseString(p, v)) throw ConfigError(where + ": mixed or malformed string array");
        out.push_back(std::move(v));
      }
      return out;
    }
    std::vector<double> out;
    for (auto p : parts) {
      double v;
      if (!parseNumber(p, v)) throw ConfigError(where + ": malformed number '" + std::string(p) + "' in array");
      out.push_back(v);
    }
    return out;
  }
  double v;
  if (!parseNumber(s, v)) throw ConfigError(where + ": cannot parse value '" + std::string(s) + "'");
  return v;
}

const char* typeName(const Config::Value& v) {
  switch (v.index()) {
  case 0: return "number";
  case 1: return "string";
  case 2: return "boolean";
  case 3: return "number array";
  default: return "string array";
  }
}

} // namespace

Config Config::parse(std::string_view text, const std::string& source) {
  Config cfg;
  std::string prefix;
  std::size_t lineNo = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view rawLine = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineNo;
    const std::string where = source + ":" + std::to_string(lineNo);
    const std::string_view line = trim(stripComment(rawLine));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed table header");
      const auto name = trim(line.substr(1, line.size() - 2));
      if (!validKey(name)) throw ConfigError(where + ": invalid table name '" + std::string(name) + "'");
      prefix = std::string(name) + ".";
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    if (!validKey(key)) throw ConfigError(where + ": invalid key '" + std::string(key) + "'");
    const std::string full = prefix + std::string(key);
    if (cfg.values_.count(full)) throw ConfigError(where + ": duplicate key '" + full + "'");
    cfg.values_[full] = parseValue(line.substr(eq + 1), where);
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

void Config::set(const std::string& key, Value value) { values_[key] = std::move(value); }

std::vector<std::string> Config::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

const Config::Value& Config::at(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing required key '" + key + "'");
  return it->second;
}

double Config::number(const std::string& key) const {
  const Value& v = at(key);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  throw ConfigError("key '" + key + "' must be a number, found " + typeName(v));
}

double Config::number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

std::string Config::string(const std::string& key) const {
  const Value& v = at(key);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw ConfigError("key '" + key + "' must be a string, found " + typeName(v));
}

std::string Config::string(const std::string& key, const std::string& fallback) const {
  return has(key) ? string(key) : fallback;
}

bool Config::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const Value& v = at(key);
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  throw ConfigError("key '" + key + "' must be a boolean, found " + typeName(v));
}

std::vector<double> Config::numbers(const std::string& key) const {
  const Value& v = at(key);
  if (const auto* d = std::get_if<double>(&v)) return {*d};
  if (const auto* a = std::get_if<std::vector<double>>(&v)) return *a;
  throw ConfigError("key '" + key + "' must be a number or number array, found " + typeName(v));
}

std::vector<double> Config::numbers(const std::string& key, const std::vector<double>& fallback) const {
  return has(key) ? numbers(key) : fallback;
}

std::vector<std::string> Config::strings(const std::string& key, const std::vector<std::string>& fallback) const {
  if (!has(key)) return fallback;
  const Value& v = at(key);
  if (const auto* s = std::get_if<std::string>(&v)) return {*s};
  if (const auto* a = std::get_if<std::vector<std::string>>(&v)) return *a;
  if (const auto* a = std::get_if<std::vector<double>>(&v); a && a->empty()) return {};
  throw ConfigError("key '" + key + "' must be a string or string array, found " + typeName(v));
}

} // namespace sdelab
