#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sdelab {

// Experiment files use a TOML subset:
//   # comment
//   [table] or [table.sub]          table header; keys below are prefixed "table.sub."
//   key = 1.5e-3                    number (integers and scientific notation accepted)
//   key = "text"                    string
//   key = true                      boolean
//   key = [1, 2, 3e-1]              single-line array of numbers
//   key = ["a", "b"]                single-line array of strings
// Dotted keys (a.b = 1) are accepted inside any table.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class Config {
public:
  using Value = std::variant<double, std::string, bool, std::vector<double>, std::vector<std::string>>;

  static Config parse(std::string_view text, const std::string& source = "<string>");
  static Config load(const std::string& path);

  bool has(const std::string& key) const;
  void set(const std::string& key, Value value);
  std::vector<std::string> keys() const;

  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::string string(const std::string& key) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  // Accepts a scalar (returned as a one-element list) or a numeric array.
  std::vector<double> numbers(const std::string& key) const;
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::string> strings(const std::string& key, const std::vector<std::string>& fallback) const;

private:
  const Value& at(const std::string& key) const;
  std::map<std::string, Value> values_;
};

} // namespace sdelab
