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

#ifndef EEGTCAV_PIPELINE_HPP_
#define EEGTCAV_PIPELINE_HPP_

#include <cstdint>
#include <optional>
#include <ostream>

#include "config.hpp"

namespace eegtcav::pipeline {

// Command-line overrides that take precedence over the config file.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool no_timestamp = false;
};

// Each command reads its inputs from the config (see README for the schema),
// writes its outputs, and logs human-readable progress to `log`. Failures
// are reported as eegtcav::Error; the CLI maps the kind to an exit code.
void cmd_preprocess(const config::Ini& cfg, const RunOverrides& ov, std::ostream& log);
void cmd_build_concepts(const config::Ini& cfg, const RunOverrides& ov, std::ostream& log);
void cmd_finetune(const config::Ini& cfg, const RunOverrides& ov, std::ostream& log);
void cmd_tcav(const config::Ini& cfg, const RunOverrides& ov, std::ostream& log);
void cmd_report(const config::Ini& cfg, const RunOverrides& ov, std::ostream& log);

}  // namespace eegtcav::pipeline

#endif  // EEGTCAV_PIPELINE_HPP_
