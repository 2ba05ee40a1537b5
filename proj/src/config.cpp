// Copyright 2026 The EEGTCAV Authors.
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

#include "config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "common.hpp"

namespace eegtcav::config {
namespace {

std::string where(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

}  // namespace

Ini Ini::parse(const std::string& text) {
  Ini ini;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string s = trim_copy(line);
    if (s.empty() || s.front() == ';' || s.front() == '#') continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) {
        throw Error::config("config line " + std::to_string(line_no) +
                            ": malformed section header '" + s + "'");
      }
      section = lower_copy(trim_copy(s.substr(1, s.size() - 2)));
      if (section.empty()) {
        throw Error::config("config line " + std::to_string(line_no) + ": empty section name");
      }
      ini.values_[section];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw Error::config("config line " + std::to_string(line_no) +
                          ": expected 'key = value', got '" + s + "'");
    }
    const std::string key = lower_copy(trim_copy(s.substr(0, eq)));
    if (key.empty()) {
      throw Error::config("config line " + std::to_string(line_no) + ": empty key");
    }
    ini.values_[section][key] = trim_copy(s.substr(eq + 1));
  }
  return ini;
}

Ini Ini::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error::config("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

bool Ini::has(const std::string& section, const std::string& key) const {
  const auto sit = values_.find(lower_copy(section));
  if (sit == values_.end()) return false;
  return sit->second.count(lower_copy(key)) > 0;
}

bool Ini::has_section(const std::string& section) const {
  return values_.count(lower_copy(section)) > 0;
}

std::string Ini::require_string(const std::string& section, const std::string& key) const {
  const auto sit = values_.find(lower_copy(section));
  if (sit != values_.end()) {
    const auto kit = sit->second.find(lower_copy(key));
    if (kit != sit->second.end()) return kit->second;
  }
  throw Error::config("config is missing required key '" + where(section, key) + "'");
}

std::string Ini::get_string(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
  return has(section, key) ? require_string(section, key) : fallback;
}

double Ini::get_double(const std::string& section, const std::string& key,
                       double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string raw = require_string(section, key);
  char* end = nullptr;
  const double v = std::strtod(raw.c_str(), &end);
  if (end == raw.c_str() || *end != '\0') {
    throw Error::config("config key '" + where(section, key) + "': '" + raw +
                        "' is not a number");
  }
  return v;
}

int Ini::get_int(const std::string& section, const std::string& key, int fallback) const {
  if (!has(section, key)) return fallback;
  const std::string raw = require_string(section, key);
  char* end = nullptr;
  const long v = std::strtol(raw.c_str(), &end, 10);
  if (end == raw.c_str() || *end != '\0') {
    throw Error::config("config key '" + where(section, key) + "': '" + raw +
                        "' is not an integer");
  }
  return static_cast<int>(v);
}

std::uint64_t Ini::get_u64(const std::string& section, const std::string& key,
                           std::uint64_t fallback) const {
  if (!has(section, key)) return fallback;
  return require_u64(section, key);
}

std::uint64_t Ini::require_u64(const std::string& section, const std::string& key) const {
  const std::string raw = require_string(section, key);
  char* end = nullptr;
  const unsigned long long v = std::strtoull(raw.c_str(), &end, 10);
  if (end == raw.c_str() || *end != '\0' || raw.front() == '-') {
    throw Error::config("config key '" + where(section, key) + "': '" + raw +
                        "' is not an unsigned integer");
  }
  return static_cast<std::uint64_t>(v);
}

bool Ini::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string raw = lower_copy(require_string(section, key));
  if (raw == "true" || raw == "yes" || raw == "on" || raw == "1") return true;
  if (raw == "false" || raw == "no" || raw == "off" || raw == "0") return false;
  throw Error::config("config key '" + where(section, key) + "': '" + raw +
                      "' is not a boolean");
}

std::vector<std::string> Ini::get_list(const std::string& section, const std::string& key) const {
  std::vector<std::string> out;
  if (!has(section, key)) return out;
  for (const std::string& item : split(require_string(section, key), ',')) {
    const std::string t = trim_copy(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::vector<std::string> Ini::sections() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto& [name, _] : values_) out.push_back(name);
  return out;
}

std::vector<std::string> Ini::keys(const std::string& section) const {
  std::vector<std::string> out;
  const auto sit = values_.find(lower_copy(section));
  if (sit == values_.end()) return out;
  out.reserve(sit->second.size());
  for (const auto& [k, _] : sit->second) out.push_back(k);
  return out;
}

}  // namespace eegtcav::config
