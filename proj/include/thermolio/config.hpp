#pragma once

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "thermolio/common.hpp"
#include "thermolio/io.hpp"

namespace thermolio {

// Sectioned key=value configuration:
//   [section]
//   key=value        # comment
// Unknown keys are rejected against a declared schema before any stage runs.
class Config {
 public:
  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
  }

  static Config parse(const std::string& text, const std::string& origin = "<config>") {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      if (trimmed.front() == '[') {
        if (trimmed.back() != ']' || trimmed.size() < 3) {
          throw ValidationError(origin + ":" + std::to_string(line_no) +
                                ": malformed section header");
        }
        section = trimmed.substr(1, trimmed.size() - 2);
        cfg.sections_[section];  // materialize
        continue;
      }
      const std::size_t eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw ValidationError(origin + ":" + std::to_string(line_no) +
                              ": expected key=value");
      }
      if (section.empty()) {
        throw ValidationError(origin + ":" + std::to_string(line_no) +
                              ": key outside any [section]");
      }
      cfg.sections_[section][trim(trimmed.substr(0, eq))] = trim(trimmed.substr(eq + 1));
    }
    return cfg;
  }

  // Every present section/key must be declared; throws naming the offender.
  void validate_schema(
      const std::map<std::string, std::set<std::string>>& schema) const {
    for (const auto& [section, entries] : sections_) {
      const auto it = schema.find(section);
      if (it == schema.end()) {
        throw ValidationError(origin_ + ": unknown section [" + section + "]");
      }
      for (const auto& [key, value] : entries) {
        if (it->second.find(key) == it->second.end()) {
          throw ValidationError(origin_ + ": unknown key '" + key + "' in [" + section +
                                "]");
        }
      }
    }
  }

  bool has(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
  }

  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return fallback;
    const auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
  }

  std::string require(const std::string& section, const std::string& key) const {
    if (!has(section, key)) {
      throw ValidationError(origin_ + ": missing required key '" + key + "' in [" +
                            section + "]");
    }
    return sections_.at(section).at(key);
  }

  double get_double(const std::string& section, const std::string& key,
                    double fallback) const {
    if (!has(section, key)) return fallback;
    const double v = io::parse_double(sections_.at(section).at(key),
                                      origin_ + " [" + section + "] " + key);
    return v;
  }

  long long get_int(const std::string& section, const std::string& key,
                    long long fallback) const {
    return static_cast<long long>(get_double(section, key, static_cast<double>(fallback)));
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = sections_.at(section).at(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError(origin_ + " [" + section + "] " + key +
                          ": expected a boolean, got '" + v + "'");
  }

  const std::string& origin() const { return origin_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }

  std::string origin_ = "<config>";
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace thermolio
