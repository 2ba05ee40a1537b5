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

#ifndef EEGTCAV_RECORDING_HPP_
#define EEGTCAV_RECORDING_HPP_

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "common.hpp"

namespace eegtcav {

struct AnnotationSpan {
  std::string label;
  double onset_s = 0.0;
  double duration_s = 0.0;
  std::optional<std::string> channel;
};

// A multichannel EEG recording in physical units (microvolts).
struct EegRecording {
  std::string session_id;
  std::vector<std::string> channel_names;
  double sampling_rate_hz = 0.0;
  Eigen::MatrixXd samples;  // [channels x time]
  std::vector<AnnotationSpan> annotations;

  Eigen::Index num_channels() const { return samples.rows(); }
  Eigen::Index num_samples() const { return samples.cols(); }
  double duration_s() const {
    return sampling_rate_hz > 0 ? static_cast<double>(num_samples()) / sampling_rate_hz : 0.0;
  }

  void validate() const {
    if (sampling_rate_hz <= 0) throw Error::data("recording: sampling rate must be positive");
    if (static_cast<Eigen::Index>(channel_names.size()) != samples.rows())
      throw Error::data("recording: channel name count does not match sample rows");
    for (std::size_t i = 0; i < channel_names.size(); ++i)
      for (std::size_t j = i + 1; j < channel_names.size(); ++j)
        if (channel_names[i] == channel_names[j])
          throw Error::data("recording: duplicate channel name " + channel_names[i]);
    for (const auto& a : annotations)
      if (a.onset_s + a.duration_s > duration_s() + 1e-9)
        throw Error::data("recording: annotation '" + a.label + "' extends past end of data");
  }
};

}  // namespace eegtcav

#endif  // EEGTCAV_RECORDING_HPP_
