#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace sthawkes {

/// Invalid configuration (exit code 2 in the CLI); carries the line number
/// when the problem is positional.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "config line " + std::to_string(line) + ": " + what : what), line_(line) {}
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct ConfigValue {
  using Array = std::vector<std::variant<double, std::string, bool>>;
  std::variant<double, std::string, bool, Array> v;
  std::size_t line{0};
};

/// TOML-style document: [section] / [a.b.c] headers, `key = value` with
/// strings, numbers, booleans and one-line arrays; `#` comments.
class Config {
 public:
  static Config parse(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string raw, section;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      std::string line = strip(remove_comment(raw));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']' || line.size() < 3) throw ConfigError("malformed section header", lineno);
        section = strip(line.substr(1, line.size() - 2));
        if (section.empty() || section.find_first_of(" \t\"") != std::string::npos) {
          throw ConfigError("malformed section name", lineno);
        }
        c.sections_.push_back(section);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("expected key = value", lineno);
      const std::string key = strip(line.substr(0, eq));
      if (key.empty() || key.find_first_of(" \t") != std::string::npos) throw ConfigError("malformed key", lineno);
      const std::string full = section.empty() ? key : section + "." + key;
      if (c.values_.count(full)) throw ConfigError("duplicate key '" + full + "'", lineno);
      c.values_[full] = parse_value(strip(line.substr(eq + 1)), lineno);
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) > 0; }
  [[nodiscard]] const std::vector<std::string>& sections() const { return sections_; }
  [[nodiscard]] const std::map<std::string, ConfigValue>& values() const { return values_; }

  [[nodiscard]] std::optional<std::string> get_string(const std::string& key) const {
    return get<std::string>(key, "a string");
  }
  [[nodiscard]] std::optional<double> get_number(const std::string& key) const { return get<double>(key, "a number"); }
  [[nodiscard]] std::optional<bool> get_bool(const std::string& key) const { return get<bool>(key, "a boolean"); }

  [[nodiscard]] std::optional<long long> get_int(const std::string& key) const {
    const auto v = get_number(key);
    if (!v) return std::nullopt;
    if (*v != static_cast<double>(static_cast<long long>(*v))) {
      throw ConfigError("'" + key + "' must be an integer", values_.at(key).line);
    }
    return static_cast<long long>(*v);
  }

  [[nodiscard]] std::optional<std::vector<std::string>> get_strings(const std::string& key) const {
    const auto* arr = array(key);
    if (!arr) return std::nullopt;
    std::vector<std::string> out;
    for (const auto& e : *arr) {
      if (!std::holds_alternative<std::string>(e)) throw ConfigError("'" + key + "' must hold strings", values_.at(key).line);
      out.push_back(std::get<std::string>(e));
    }
    return out;
  }

  [[nodiscard]] std::optional<std::vector<double>> get_numbers(const std::string& key) const {
    const auto* arr = array(key);
    if (!arr) return std::nullopt;
    std::vector<double> out;
    for (const auto& e : *arr) {
      if (!std::holds_alternative<double>(e)) throw ConfigError("'" + key + "' must hold numbers", values_.at(key).line);
      out.push_back(std::get<double>(e));
    }
    return out;
  }

  [[nodiscard]] std::size_t line_of(const std::string& key) const {
    const auto it = values_.find(key);
    return it == values_.end() ? 0 : it->second.line;
  }

  /// Rejects keys outside `allowed` (entries ending in ".*" match prefixes).
  void check_keys(const std::vector<std::string>& allowed) const {
    for (const auto& [key, val] : values_) {
      bool ok = false;
      for (const auto& a : allowed) {
        if (a == key || (a.size() > 1 && a.back() == '*' && key.rfind(a.substr(0, a.size() - 1), 0) == 0)) ok = true;
      }
      if (!ok) throw ConfigError("unknown key '" + key + "'", val.line);
    }
  }

  /// FNV-1a of the canonical key/value listing.
  [[nodiscard]] std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const std::string& s) {
      for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
      }
    };
    for (const auto& [key, val] : values_) {
      mix(key);
      mix("=");
      mix(render(val));
      mix("\n");
    }
    return h;
  }

  void set(const std::string& key, ConfigValue v) { values_[key] = std::move(v); }

 private:
  template <typename T>
  std::optional<T> get(const std::string& key, const char* what) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    if (!std::holds_alternative<T>(it->second.v)) throw ConfigError("'" + key + "' must be " + what, it->second.line);
    return std::get<T>(it->second.v);
  }

  [[nodiscard]] const ConfigValue::Array* array(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    if (!std::holds_alternative<ConfigValue::Array>(it->second.v)) {
      throw ConfigError("'" + key + "' must be an array", it->second.line);
    }
    return &std::get<ConfigValue::Array>(it->second.v);
  }

  static std::string render(const ConfigValue& v) {
    std::ostringstream os;
    os.precision(17);
    auto scalar = [&os](const auto& x) {
      using X = std::decay_t<decltype(x)>;
      if constexpr (std::is_same_v<X, std::string>) {
        os << '"' << x << '"';
      } else if constexpr (std::is_same_v<X, bool>) {
        os << (x ? "true" : "false");
      } else {
        os << x;
      }
    };
    std::visit(
        [&](const auto& x) {
          using X = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<X, ConfigValue::Array>) {
            os << '[';
            for (const auto& e : x) {
              std::visit(scalar, e);
              os << ',';
            }
            os << ']';
          } else {
            scalar(x);
          }
        },
        v.v);
    return os.str();
  }

  static std::string remove_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') quoted = !quoted;
      if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
  }

  static std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  }

  static std::variant<double, std::string, bool> parse_scalar(const std::string& s, std::size_t line) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
      const std::string body = s.substr(1, s.size() - 2);
      if (body.find('"') != std::string::npos) throw ConfigError("unexpected quote in string", line);
      return body;
    }
    if (s == "true") return true;
    if (s == "false") return false;
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("cannot parse value '" + s + "'", line);
  }

  static ConfigValue parse_value(const std::string& s, std::size_t line) {
    if (s.empty()) throw ConfigError("missing value", line);
    ConfigValue out;
    out.line = line;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("unterminated array", line);
      ConfigValue::Array arr;
      std::string cur;
      bool quoted = false;
      const std::string body = s.substr(1, s.size() - 2);
      for (char ch : body) {
        if (ch == '"') quoted = !quoted;
        if (ch == ',' && !quoted) {
          if (!strip(cur).empty()) arr.push_back(parse_scalar(strip(cur), line));
          cur.clear();
        } else {
          cur.push_back(ch);
        }
      }
      if (quoted) throw ConfigError("unterminated string", line);
      if (!strip(cur).empty()) arr.push_back(parse_scalar(strip(cur), line));
      out.v = std::move(arr);
      return out;
    }
    std::visit([&out](auto&& x) { out.v = x; }, parse_scalar(s, line));
    return out;
  }

  std::map<std::string, ConfigValue> values_;
  std::vector<std::string> sections_;
};

}  // namespace sthawkes
