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

#include "report.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "common.hpp"

namespace eegtcav::report {
namespace {

constexpr const char* kHeader =
    "concept,class,bottleneck,mean_score,p_raw,p_corrected,significant,direction,n_runs";

// Muted qualitative palette; cycles when there are more concepts than colors.
constexpr const char* kPalette[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44",
                                    "#66ccee", "#aa3377", "#cc6644", "#44aa99"};
constexpr int kPaletteSize = 8;

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Splits one CSV record, honouring double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(const std::string& line, int line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) {
    throw Error::data("report CSV line " + std::to_string(line_no) + ": unterminated quote");
  }
  fields.push_back(cur);
  return fields;
}

double parse_num(const std::string& raw, const char* what, int line_no) {
  char* end = nullptr;
  const double v = std::strtod(raw.c_str(), &end);
  if (end == raw.c_str() || *end != '\0') {
    throw Error::data("report CSV line " + std::to_string(line_no) + ": bad " +
                      std::string(what) + " '" + raw + "'");
  }
  return v;
}

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::vector<ReportRow> to_rows(const std::vector<tcav::TcavResult>& results) {
  std::vector<ReportRow> rows;
  rows.reserve(results.size());
  for (const auto& r : results) {
    ReportRow row;
    row.concept_id = r.concept_id;
    row.target_class = r.target_class;
    row.bottleneck = model::bottleneck_name(r.bottleneck);
    row.mean_score = r.mean_score;
    row.p_raw = r.p_raw;
    row.p_corrected = r.p_corrected;
    row.significant = r.significant;
    row.positive = r.positive;
    row.n_runs = static_cast<int>(r.concept_scores.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_csv(const std::vector<ReportRow>& rows) {
  std::string out = kHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += csv_field(r.concept_id);
    out += ',' + std::to_string(r.target_class);
    out += ',' + r.bottleneck;
    out += ',' + fmt("%.6f", r.mean_score);
    out += ',' + fmt("%.9g", r.p_raw);
    out += ',' + fmt("%.9g", r.p_corrected);
    out += r.significant ? ",true" : ",false";
    out += r.positive ? ",positive" : ",negative";
    out += ',' + std::to_string(r.n_runs);
    out += '\n';
  }
  return out;
}

std::vector<ReportRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != kHeader) {
        throw Error::data("report CSV header mismatch; expected '" + std::string(kHeader) + "'");
      }
      continue;
    }
    const auto f = split_csv_line(line, line_no);
    if (f.size() != 9) {
      throw Error::data("report CSV line " + std::to_string(line_no) + ": expected 9 fields, got " +
                        std::to_string(f.size()));
    }
    ReportRow r;
    r.concept_id = f[0];
    r.target_class = static_cast<int>(parse_num(f[1], "class", line_no));
    r.bottleneck = f[2];
    r.mean_score = parse_num(f[3], "mean_score", line_no);
    r.p_raw = parse_num(f[4], "p_raw", line_no);
    r.p_corrected = parse_num(f[5], "p_corrected", line_no);
    if (f[6] != "true" && f[6] != "false") {
      throw Error::data("report CSV line " + std::to_string(line_no) + ": bad significant '" +
                        f[6] + "'");
    }
    r.significant = f[6] == "true";
    if (f[7] != "positive" && f[7] != "negative") {
      throw Error::data("report CSV line " + std::to_string(line_no) + ": bad direction '" +
                        f[7] + "'");
    }
    r.positive = f[7] == "positive";
    r.n_runs = static_cast<int>(parse_num(f[8], "n_runs", line_no));
    rows.push_back(std::move(r));
  }
  if (rows.empty() && line_no == 0) throw Error::data("report CSV is empty");
  return rows;
}

std::string render_svg(const std::vector<ReportRow>& rows, const SvgOptions& options) {
  // Orders follow first appearance so the chart matches the CSV.
  std::vector<std::string> bottlenecks;
  std::vector<std::string> concepts;
  for (const auto& r : rows) {
    if (std::find(bottlenecks.begin(), bottlenecks.end(), r.bottleneck) == bottlenecks.end()) {
      bottlenecks.push_back(r.bottleneck);
    }
    if (std::find(concepts.begin(), concepts.end(), r.concept_id) == concepts.end()) {
      concepts.push_back(r.concept_id);
    }
  }
  const double w = options.width;
  const double h = options.height;
  const double left = 70, right = 30, top = 56, bottom = 96;
  const double pw = w - left - right;
  const double ph = h - top - bottom;
  const auto y_of = [&](double v) { return top + ph * (1.0 - v); };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << options.width
      << "\" height=\"" << options.height << "\" viewBox=\"0 0 " << options.width << " "
      << options.height << "\">\n"
      << "  <rect x=\"0\" y=\"0\" width=\"" << options.width << "\" height=\"" << options.height
      << "\" fill=\"#ffffff\"/>\n"
      << "  <text x=\"" << fmt("%.1f", w / 2)
      << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">"
      << xml_escape(options.title) << "</text>\n";

  // Horizontal gridlines with y-axis labels; the 0.5 chance line is dashed.
  for (double v : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double y = y_of(v);
    svg << "  <line x1=\"" << fmt("%.1f", left) << "\" y1=\"" << fmt("%.1f", y) << "\" x2=\""
        << fmt("%.1f", left + pw) << "\" y2=\"" << fmt("%.1f", y) << "\" stroke=\""
        << (v == 0.5 ? "#888888" : "#dddddd") << "\" stroke-width=\"1\""
        << (v == 0.5 ? " stroke-dasharray=\"5,4\"" : "") << "/>\n"
        << "  <text x=\"" << fmt("%.1f", left - 8) << "\" y=\"" << fmt("%.1f", y + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fmt("%.2f", v)
        << "</text>\n";
  }

  const std::size_t nb = bottlenecks.empty() ? 1 : bottlenecks.size();
  const std::size_t nc = concepts.empty() ? 1 : concepts.size();
  const double gw = pw / static_cast<double>(nb);
  const double bar_w = gw * 0.84 / static_cast<double>(nc);

  for (const auto& r : rows) {
    const auto gi = static_cast<std::size_t>(
        std::find(bottlenecks.begin(), bottlenecks.end(), r.bottleneck) - bottlenecks.begin());
    const auto ci = static_cast<std::size_t>(
        std::find(concepts.begin(), concepts.end(), r.concept_id) - concepts.begin());
    const double x = left + static_cast<double>(gi) * gw + gw * 0.08 +
                     static_cast<double>(ci) * bar_w;
    const double score = std::min(std::max(r.mean_score, 0.0), 1.0);
    const double y = y_of(score);
    svg << "  <rect x=\"" << fmt("%.2f", x) << "\" y=\"" << fmt("%.2f", y) << "\" width=\""
        << fmt("%.2f", bar_w * 0.92) << "\" height=\"" << fmt("%.2f", y_of(0.0) - y)
        << "\" fill=\"" << kPalette[ci % kPaletteSize] << "\"/>\n";
    if (r.significant) {
      svg << "  <text class=\"star\" x=\"" << fmt("%.2f", x + bar_w * 0.46) << "\" y=\""
          << fmt("%.2f", y - 5)
          << "\" font-family=\"sans-serif\" font-size=\"17\" text-anchor=\"middle\">*</text>\n";
    }
  }

  // Axis line and group labels.
  svg << "  <line x1=\"" << fmt("%.1f", left) << "\" y1=\"" << fmt("%.1f", top) << "\" x2=\""
      << fmt("%.1f", left) << "\" y2=\"" << fmt("%.1f", top + ph)
      << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  for (std::size_t g = 0; g < bottlenecks.size(); ++g) {
    svg << "  <text x=\"" << fmt("%.1f", left + (static_cast<double>(g) + 0.5) * gw) << "\" y=\""
        << fmt("%.1f", top + ph + 18)
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">"
        << xml_escape(bottlenecks[g]) << "</text>\n";
  }

  // Legend row under the group labels.
  double lx = left;
  const double ly = top + ph + 44;
  for (std::size_t ci = 0; ci < concepts.size(); ++ci) {
    svg << "  <rect x=\"" << fmt("%.1f", lx) << "\" y=\"" << fmt("%.1f", ly - 10)
        << "\" width=\"12\" height=\"12\" fill=\"" << kPalette[ci % kPaletteSize] << "\"/>\n"
        << "  <text x=\"" << fmt("%.1f", lx + 17) << "\" y=\"" << fmt("%.1f", ly)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(concepts[ci])
        << "</text>\n";
    lx += 17 + 7.0 * static_cast<double>(concepts[ci].size()) + 22;
  }
  svg << "  <text x=\"" << fmt("%.1f", left) << "\" y=\"" << fmt("%.1f", ly + 20)
      << "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#555555\">* significant after "
         "Bonferroni correction; dashed line marks the 0.5 chance level</text>\n";

  if (options.include_timestamp) {
    const std::string ts = options.timestamp.empty() ? utc_now() : options.timestamp;
    svg << "  <text id=\"timestamp\" x=\"" << fmt("%.1f", w - right) << "\" y=\""
        << fmt("%.1f", h - 8)
        << "\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"end\" fill=\"#888888\">"
        << "generated " << xml_escape(ts) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error::config("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error::config("short write to '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error::config("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace eegtcav::report
