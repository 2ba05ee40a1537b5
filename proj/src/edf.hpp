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

#ifndef EEGTCAV_EDF_HPP_
#define EEGTCAV_EDF_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "recording.hpp"

namespace eegtcav::edf {

// Parses an EDF/EDF+ byte stream. Physical values are computed per signal as
// p = (d - dmin) * (pmax - pmin) / (dmax - dmin) + pmin and converted to
// microvolts; EDF+ "EDF Annotations" channels are parsed as TALs and excluded
// from the sample matrix.
EegRecording parse_edf(const std::vector<std::uint8_t>& bytes);
EegRecording parse_edf_file(const std::string& path);

// Parses the annotation CSV schema `channel,onset_s,stop_s,label` (header
// row, blank lines ignored). Row errors cite the 1-based line number.
std::vector<AnnotationSpan> parse_annotation_table(const std::string& text);

struct ScreeningCriteria {
  int min_channels = 19;
  double min_duration_s = 60.0;
  double min_sampling_hz = 100.0;
  double max_abs_amplitude_uv = 500.0;
  std::pair<double, double> scale_bounds = {0.1, 5000.0};  // per-channel peak-to-peak, uV
};

struct ScreenResult {
  bool accepted = false;
  std::vector<std::string> reasons;  // violated criteria; empty iff accepted
};

// Screening never throws; every violated criterion is listed.
ScreenResult screen_recording(const EegRecording& rec, const ScreeningCriteria& criteria);

// The 19 scalp channels used by the pipeline, in canonical order.
const std::vector<std::string>& canonical_channels();

// Reorders (and renames via the T3->T7, T4->T8, P7->T5, P8->T6 aliases) the
// recording into the canonical 19-channel montage. Channels outside the
// montage are dropped. Missing channels raise a data error naming them.
EegRecording map_channels(const EegRecording& rec);

}  // namespace eegtcav::edf

#endif  // EEGTCAV_EDF_HPP_
