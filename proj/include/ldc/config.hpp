// Copyright 2026 The LDC Codec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ldc/common.hpp"

namespace ldc {

// Plain-text key=value configuration. Lines starting with '#' and blank
// lines are ignored. Values keep their raw text; typed getters parse on
// access so unknown keys round-trip unchanged.
class Config {
 public:
  Config() = default;

  static Config from_string(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      size_t start = line.find_first_not_of(" \t\r");
      if (start == std::string::npos || line[start] == '#') continue;
      size_t eq = line.find('=', start);
      require(eq != std::string::npos, ErrorKind::kValidation,
              "config line ", lineno, ": expected key=value, got '", line, "'");
      c.set(trim(line.substr(start, eq - start)), trim(line.substr(eq + 1)));
    }
    return c;
  }

  static Config from_file(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), ErrorKind::kIo, "cannot open config: ", path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_string(ss.str());
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_str(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  int64_t get_int(const std::string& key, int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      size_t used = 0;
      int64_t v = std::stoll(it->second, &used);
      require(used == it->second.size(), ErrorKind::kValidation, "trailing junk");
      return v;
    } catch (const std::exception&) {
      fail(ErrorKind::kValidation, "config key '", key, "': not an integer: '", it->second, "'");
    }
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      size_t used = 0;
      double v = std::stod(it->second, &used);
      require(used == it->second.size(), ErrorKind::kValidation, "trailing junk");
      return v;
    } catch (const std::exception&) {
      fail(ErrorKind::kValidation, "config key '", key, "': not a number: '", it->second, "'");
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(ErrorKind::kValidation, "config key '", key, "': not a bool: '", v, "'");
  }

  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    std::istringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = trim(tok);
      if (tok.empty()) continue;
      out.push_back(std::stod(tok));
    }
    require(!out.empty(), ErrorKind::kValidation, "config key '", key, "': empty list");
    return out;
  }

  std::string to_string() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string trim(std::string s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
  }

  std::map<std::string, std::string> values_;
};

}  // namespace ldc
