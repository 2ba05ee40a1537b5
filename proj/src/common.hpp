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

#ifndef EEGTCAV_COMMON_HPP_
#define EEGTCAV_COMMON_HPP_

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace eegtcav {

// Error taxonomy shared by the whole library. The three kinds map 1:1 onto
// the CLI exit codes (config -> 1, data -> 2, numeric -> 3).
enum class ErrorKind { Config, Data, Numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

  static Error config(const std::string& msg) { return Error(ErrorKind::Config, msg); }
  static Error data(const std::string& msg) { return Error(ErrorKind::Data, msg); }
  static Error numeric(const std::string& msg) { return Error(ErrorKind::Numeric, msg); }

 private:
  ErrorKind kind_;
};

// Deterministic 64-bit mixer used to derive independent substream seeds from
// one experiment seed plus structural indices (bottleneck, set index, ...).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string lower_copy(const std::string& s);
std::string trim_copy(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);

// Runs fn(i) for i in [0, n) on up to `threads` workers. Work items must be
// independent; iteration order is unspecified but coverage is exact.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace eegtcav

#endif  // EEGTCAV_COMMON_HPP_
