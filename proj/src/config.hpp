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

#ifndef EEGTCAV_CONFIG_HPP_
#define EEGTCAV_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace eegtcav::config {

// Sectioned key/value config. Sections in [brackets], `key = value` lines,
// full-line comments starting with ';' or '#'. Keys and section names are
// case-insensitive; values keep their case. Later duplicates win.
class Ini {
 public:
  static Ini parse(const std::string& text);
  static Ini load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const;

  // `require_*` throw a config error naming section.key when absent; `get_*`
  // fall back to the supplied default. All numeric parses reject trailing
  // garbage.
  std::string require_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::uint64_t require_u64(const std::string& section, const std::string& key) const;

  // Comma-separated list value, trimmed, empty items dropped.
  std::vector<std::string> get_list(const std::string& section, const std::string& key) const;

  std::vector<std::string> sections() const;
  std::vector<std::string> keys(const std::string& section) const;

 private:
  // std::map keeps iteration deterministic regardless of input order.
  std::map<std::string, std::map<std::string, std::string>> values_;
};

}  // namespace eegtcav::config

#endif  // EEGTCAV_CONFIG_HPP_
