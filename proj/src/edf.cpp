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

#include "edf.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "common.hpp"

namespace eegtcav::edf {
namespace {

constexpr std::size_t kHeaderBytes = 256;
constexpr std::size_t kPerSignalBytes = 256;

std::string field(const std::vector<std::uint8_t>& bytes, std::size_t off, std::size_t len) {
  return trim_copy(std::string(reinterpret_cast<const char*>(bytes.data()) + off, len));
}

long parse_long(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error::data(std::string("EDF header: bad ") + what + " field '" + s + "'");
  }
}

double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error::data(std::string("EDF header: bad ") + what + " field '" + s + "'");
  }
}

// Scale factor from the physical-dimension field to microvolts.
double unit_to_uv(const std::string& dim) {
  std::string d = lower_copy(dim);
  if (d == "mv") return 1000.0;
  if (d == "v") return 1.0e6;
  return 1.0;  // uV or unspecified
}

struct TalEvent {
  double onset = 0.0;
  double duration = 0.0;
  std::string text;
};

// Parses one annotation signal's bytes for a single record. TALs look like
// +onset[\x15duration]\x14text\x14[text\x14...]\x00 and are NUL-separated.
void parse_tals(const char* data, std::size_t len, std::vector<TalEvent>* out) {
  std::size_t i = 0;
  while (i < len) {
    if (data[i] == '\0') {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < len && data[end] != '\0') ++end;
    std::string tal(data + i, end - i);
    i = end;

    std::size_t mark = tal.find('\x14');
    if (mark == std::string::npos) continue;  // malformed TAL, skip
    std::string stamp = tal.substr(0, mark);
    double onset = 0.0;
    double duration = 0.0;
    std::size_t dur_sep = stamp.find('\x15');
    try {
      if (dur_sep == std::string::npos) {
        onset = std::stod(stamp);
      } else {
        onset = std::stod(stamp.substr(0, dur_sep));
        duration = std::stod(stamp.substr(dur_sep + 1));
      }
    } catch (const std::exception&) {
      continue;  // unparsable timestamp, skip
    }
    std::size_t pos = mark;
    while (pos < tal.size()) {
      std::size_t next = tal.find('\x14', pos + 1);
      if (next == std::string::npos) break;
      std::string text = tal.substr(pos + 1, next - pos - 1);
      if (!text.empty()) out->push_back({onset, duration, text});
      pos = next;
    }
  }
}

}  // namespace

EegRecording parse_edf(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw Error::data("EDF truncated: file shorter than the 256-byte header");
  }
  std::string version = field(bytes, 0, 8);
  if (version != "0") {
    throw Error::data("EDF header: unsupported version '" + version + "'");
  }
  std::string recording_id = field(bytes, 88, 80);
  long n_records = parse_long(field(bytes, 236, 8), "record count");
  double record_duration = parse_double(field(bytes, 244, 8), "record duration");
  long ns = parse_long(field(bytes, 252, 4), "signal count");
  if (ns <= 0) throw Error::data("EDF header: signal count must be positive");

  std::size_t sig_header_bytes = kHeaderBytes + static_cast<std::size_t>(ns) * kPerSignalBytes;
  if (bytes.size() < sig_header_bytes) {
    throw Error::data("EDF truncated: file shorter than the declared signal headers");
  }

  // Signal header fields are stored field-major: ns labels, then ns
  // transducers, and so on.
  auto sig_field = [&](std::size_t field_off, std::size_t field_len, long i) {
    return field(bytes, kHeaderBytes + field_off * static_cast<std::size_t>(ns) +
                            static_cast<std::size_t>(i) * field_len,
                 field_len);
  };
  std::vector<std::string> labels(ns), dims(ns);
  std::vector<double> pmin(ns), pmax(ns), dmin(ns), dmax(ns);
  std::vector<long> spr(ns);
  for (long i = 0; i < ns; ++i) {
    labels[i] = sig_field(0, 16, i);
    dims[i] = sig_field(96, 8, i);
    pmin[i] = parse_double(sig_field(104, 8, i), "physical minimum");
    pmax[i] = parse_double(sig_field(112, 8, i), "physical maximum");
    dmin[i] = parse_double(sig_field(120, 8, i), "digital minimum");
    dmax[i] = parse_double(sig_field(128, 8, i), "digital maximum");
    spr[i] = parse_long(sig_field(216, 8, i), "samples per record");
    if (spr[i] <= 0) throw Error::data("EDF header: samples per record must be positive");
  }

  std::size_t record_bytes = 0;
  for (long i = 0; i < ns; ++i) record_bytes += static_cast<std::size_t>(spr[i]) * 2;
  if (record_bytes == 0) throw Error::data("EDF header: empty data records");

  std::size_t payload = bytes.size() - sig_header_bytes;
  if (n_records < 0) {  // unknown length: derive from the payload
    if (payload % record_bytes != 0) {
      throw Error::data("EDF truncated: payload is not a whole number of records");
    }
    n_records = static_cast<long>(payload / record_bytes);
  } else if (payload < static_cast<std::size_t>(n_records) * record_bytes) {
    throw Error::data("EDF truncated: payload ends mid-record");
  }
  if (n_records == 0) throw Error::data("EDF contains no data records");

  std::vector<bool> is_annotation(ns, false);
  for (long i = 0; i < ns; ++i) {
    is_annotation[i] = (labels[i] == "EDF Annotations");
    if (!is_annotation[i] && dmax[i] == dmin[i]) {
      throw Error::data("EDF header: signal '" + labels[i] +
                        "' has equal digital min and max");
    }
  }

  // Data signals can disagree on samples per record (e.g. an EKG sampled at a
  // different rate). Keep the largest group with a common rate.
  std::map<long, int> spr_votes;
  for (long i = 0; i < ns; ++i) {
    if (!is_annotation[i]) ++spr_votes[spr[i]];
  }
  if (spr_votes.empty()) throw Error::data("EDF contains only annotation signals");
  long kept_spr = spr_votes.begin()->first;
  int best = 0;
  for (const auto& [value, votes] : spr_votes) {
    if (votes > best) {
      best = votes;
      kept_spr = value;
    }
  }
  if (record_duration <= 0.0) {
    throw Error::data("EDF header: record duration must be positive");
  }

  std::vector<long> kept;
  for (long i = 0; i < ns; ++i) {
    if (!is_annotation[i] && spr[i] == kept_spr) kept.push_back(i);
  }

  EegRecording rec;
  rec.session_id = recording_id;
  rec.sampling_rate_hz = static_cast<double>(kept_spr) / record_duration;
  rec.channel_names.reserve(kept.size());
  for (long i : kept) rec.channel_names.push_back(labels[i]);
  rec.samples.resize(static_cast<Eigen::Index>(kept.size()),
                     static_cast<Eigen::Index>(n_records) * kept_spr);

  std::vector<std::size_t> sig_offset(ns, 0);
  {
    std::size_t off = 0;
    for (long i = 0; i < ns; ++i) {
      sig_offset[i] = off;
      off += static_cast<std::size_t>(spr[i]) * 2;
    }
  }
  std::vector<TalEvent> tals;
  const std::uint8_t* base = bytes.data() + sig_header_bytes;
  for (long r = 0; r < n_records; ++r) {
    const std::uint8_t* rec_base = base + static_cast<std::size_t>(r) * record_bytes;
    for (std::size_t k = 0; k < kept.size(); ++k) {
      long i = kept[k];
      const std::uint8_t* p = rec_base + sig_offset[i];
      double scale = (pmax[i] - pmin[i]) / (dmax[i] - dmin[i]);
      double to_uv = unit_to_uv(dims[i]);
      for (long s = 0; s < kept_spr; ++s) {
        std::int16_t d;
        std::memcpy(&d, p + s * 2, 2);
        double phys = (static_cast<double>(d) - dmin[i]) * scale + pmin[i];
        rec.samples(static_cast<Eigen::Index>(k), r * kept_spr + s) = phys * to_uv;
      }
    }
    for (long i = 0; i < ns; ++i) {
      if (!is_annotation[i]) continue;
      parse_tals(reinterpret_cast<const char*>(rec_base + sig_offset[i]),
                 static_cast<std::size_t>(spr[i]) * 2, &tals);
    }
  }

  double duration = rec.duration_s();
  for (const TalEvent& e : tals) {
    AnnotationSpan span;
    span.label = e.text;
    span.onset_s = e.onset;
    span.duration_s = e.duration;
    // Clamp events that spill past the recording end rather than rejecting
    // the whole file.
    if (span.onset_s < 0.0 || span.onset_s > duration) continue;
    if (span.onset_s + span.duration_s > duration) {
      span.duration_s = duration - span.onset_s;
    }
    rec.annotations.push_back(std::move(span));
  }
  rec.validate();
  return rec;
}

EegRecording parse_edf_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error::data("cannot open EDF file '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_edf(bytes);
}

std::vector<AnnotationSpan> parse_annotation_table(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<AnnotationSpan> out;
  int line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim_copy(line).empty()) continue;
    if (!saw_header) {
      std::vector<std::string> head = split(line, ',');
      for (std::string& h : head) h = lower_copy(trim_copy(h));
      if (head != std::vector<std::string>{"channel", "onset_s", "stop_s", "label"}) {
        throw Error::data("annotation table line 1: expected header channel,onset_s,stop_s,label");
      }
      saw_header = true;
      continue;
    }
    std::vector<std::string> cols = split(line, ',');
    if (cols.size() != 4) {
      throw Error::data("annotation table line " + std::to_string(line_no) +
                        ": expected 4 columns, got " + std::to_string(cols.size()));
    }
    AnnotationSpan span;
    std::string channel = trim_copy(cols[0]);
    if (!channel.empty()) span.channel = channel;
    try {
      span.onset_s = std::stod(trim_copy(cols[1]));
      double stop = std::stod(trim_copy(cols[2]));
      span.duration_s = stop - span.onset_s;
    } catch (const std::exception&) {
      throw Error::data("annotation table line " + std::to_string(line_no) +
                        ": onset_s and stop_s must be numbers");
    }
    if (span.duration_s < 0.0) {
      throw Error::data("annotation table line " + std::to_string(line_no) +
                        ": stop_s precedes onset_s");
    }
    span.label = trim_copy(cols[3]);
    if (span.label.empty()) {
      throw Error::data("annotation table line " + std::to_string(line_no) + ": empty label");
    }
    out.push_back(std::move(span));
  }
  if (!saw_header) throw Error::data("annotation table: missing header row");
  return out;
}

ScreenResult screen_recording(const EegRecording& rec, const ScreeningCriteria& criteria) {
  ScreenResult result;
  if (rec.num_channels() < criteria.min_channels) result.reasons.push_back("channels");
  if (rec.duration_s() < criteria.min_duration_s) result.reasons.push_back("duration");
  if (rec.sampling_rate_hz < criteria.min_sampling_hz) result.reasons.push_back("sampling rate");
  if (rec.samples.size() > 0) {
    if (rec.samples.cwiseAbs().maxCoeff() > criteria.max_abs_amplitude_uv) {
      result.reasons.push_back("extreme values");
    }
    bool scale_ok = true;
    for (Eigen::Index c = 0; c < rec.samples.rows(); ++c) {
      double ptp = rec.samples.row(c).maxCoeff() - rec.samples.row(c).minCoeff();
      if (ptp < criteria.scale_bounds.first || ptp > criteria.scale_bounds.second) {
        scale_ok = false;
        break;
      }
    }
    if (!scale_ok) result.reasons.push_back("scale");
  }
  result.accepted = result.reasons.empty();
  return result;
}

const std::vector<std::string>& canonical_channels() {
  static const std::vector<std::string> names = {
      "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T7", "C3", "Cz",
      "C4",  "T8",  "T5", "P3", "Pz", "P4", "T6", "O1", "O2"};
  return names;
}

namespace {

// Strips montage decoration: "EEG FP1-REF" -> "FP1". Returns uppercase.
std::string normalize_channel(const std::string& raw) {
  std::string s = trim_copy(raw);
  std::string upper;
  upper.reserve(s.size());
  for (char c : s) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (upper.rfind("EEG ", 0) == 0) upper = upper.substr(4);
  std::size_t dash = upper.find('-');
  if (dash != std::string::npos) upper = upper.substr(0, dash);
  return trim_copy(upper);
}

}  // namespace

EegRecording map_channels(const EegRecording& rec) {
  const std::vector<std::string>& canon = canonical_channels();
  std::unordered_map<std::string, int> canon_index;
  for (std::size_t i = 0; i < canon.size(); ++i) {
    std::string upper = canon[i];
    for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    canon_index[upper] = static_cast<int>(i);
  }
  static const std::unordered_map<std::string, std::string> aliases = {
      {"T3", "T7"}, {"T4", "T8"}, {"P7", "T5"}, {"P8", "T6"}};

  std::vector<int> source(canon.size(), -1);
  // Direct canonical names take precedence; aliases only fill gaps.
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index c = 0; c < rec.samples.rows(); ++c) {
      std::string name = normalize_channel(rec.channel_names[static_cast<std::size_t>(c)]);
      if (pass == 1) {
        auto alias = aliases.find(name);
        if (alias == aliases.end()) continue;
        name = alias->second;
        for (char& ch : name) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      }
      auto it = canon_index.find(name);
      if (it == canon_index.end()) continue;
      if (source[static_cast<std::size_t>(it->second)] < 0) {
        source[static_cast<std::size_t>(it->second)] = static_cast<int>(c);
      }
    }
  }

  std::vector<std::string> missing;
  for (std::size_t i = 0; i < canon.size(); ++i) {
    if (source[i] < 0) missing.push_back(canon[i]);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size(); ++i) {
      if (i) list += ", ";
      list += missing[i];
    }
    throw Error::data("montage is missing required channels: " + list);
  }

  EegRecording out;
  out.session_id = rec.session_id;
  out.sampling_rate_hz = rec.sampling_rate_hz;
  out.channel_names = canon;
  out.annotations = rec.annotations;
  out.samples.resize(static_cast<Eigen::Index>(canon.size()), rec.samples.cols());
  for (std::size_t i = 0; i < canon.size(); ++i) {
    out.samples.row(static_cast<Eigen::Index>(i)) = rec.samples.row(source[i]);
  }
  out.validate();
  return out;
}

}  // namespace eegtcav::edf
