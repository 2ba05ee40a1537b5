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

#ifndef EEGTCAV_REPORT_HPP_
#define EEGTCAV_REPORT_HPP_

#include <string>
#include <vector>

#include "tcav.hpp"

namespace eegtcav::report {

// One CSV row of a TCAV report. Matches the column order of render_csv.
struct ReportRow {
  std::string concept_id;
  int target_class = 0;
  std::string bottleneck;
  double mean_score = 0.0;
  double p_raw = 1.0;
  double p_corrected = 1.0;
  bool significant = false;
  bool positive = false;
  int n_runs = 0;
};

std::vector<ReportRow> to_rows(const std::vector<tcav::TcavResult>& results);

// Columns: concept,class,bottleneck,mean_score,p_raw,p_corrected,significant,
// direction,n_runs. Deterministic formatting so identical inputs produce
// byte-identical files.
std::string render_csv(const std::vector<ReportRow>& rows);
std::vector<ReportRow> parse_csv(const std::string& text);

struct SvgOptions {
  int width = 960;
  int height = 460;
  std::string title = "TCAV scores (two-sided Mann-Whitney U, Bonferroni corrected)";
  // When false the output carries no generation time, making repeated runs
  // byte-identical.
  bool include_timestamp = true;
  std::string timestamp;  // empty -> current UTC time
};

// Grouped bar chart, one group per bottleneck, one bar per concept; a star
// above a bar marks a significant result (in either direction). SVG 1.1,
// no external dependencies, inspectable as plain text.
std::string render_svg(const std::vector<ReportRow>& rows, const SvgOptions& options);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace eegtcav::report

#endif  // EEGTCAV_REPORT_HPP_
