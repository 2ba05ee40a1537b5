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

#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "eegtcav.h"

namespace {

void print_line(const char* line, void* /*user*/) { std::printf("%s\n", line); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concept-based explanations for EEG sequence models"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", eegtcav_version());

  std::string config_path;
  std::uint64_t seed = 0;
  int threads = 0;
  bool no_timestamp = false;
  app.add_option("--config", config_path, "Path to the INI experiment config")->required();
  auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");
  app.add_flag("--no-timestamp", no_timestamp, "Omit the generation time from SVG output");

  auto* preprocess =
      app.add_subcommand("preprocess", "Screen and filter EDF files into a window container");
  auto* build_concepts =
      app.add_subcommand("build-concepts", "Build concept example sets from recordings");
  auto* finetune = app.add_subcommand("finetune", "Fine-tune the classifier on labeled windows");
  auto* tcav = app.add_subcommand("tcav", "Run concept attribution and write CSV + SVG reports");
  auto* report = app.add_subcommand("report", "Re-render the SVG figure from an existing CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : EEGTCAV_CONFIG;
  }

  eegtcav_config* cfg = nullptr;
  eegtcav_status status = eegtcav_config_load(config_path.c_str(), &cfg);
  if (status != EEGTCAV_OK) {
    std::fprintf(stderr, "error: %s\n", eegtcav_last_error());
    return status;
  }

  eegtcav_run_options options{};
  options.has_seed = seed_opt->count() > 0 ? 1 : 0;
  options.seed = seed;
  options.threads = threads;
  options.no_timestamp = no_timestamp ? 1 : 0;

  if (preprocess->parsed()) {
    status = eegtcav_run_preprocess(cfg, &options, &print_line, nullptr);
  } else if (build_concepts->parsed()) {
    status = eegtcav_run_build_concepts(cfg, &options, &print_line, nullptr);
  } else if (finetune->parsed()) {
    status = eegtcav_run_finetune(cfg, &options, &print_line, nullptr);
  } else if (tcav->parsed()) {
    status = eegtcav_run_tcav(cfg, &options, &print_line, nullptr);
  } else if (report->parsed()) {
    status = eegtcav_run_report(cfg, &options, &print_line, nullptr);
  }

  if (status != EEGTCAV_OK) std::fprintf(stderr, "error: %s\n", eegtcav_last_error());
  eegtcav_config_free(cfg);
  return status;
}
