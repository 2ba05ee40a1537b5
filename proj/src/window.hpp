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

#ifndef EEGTCAV_WINDOW_HPP_
#define EEGTCAV_WINDOW_HPP_

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace eegtcav {

inline constexpr int kWindowChannels = 20;  // 19 EEG channels + 1 amplitude channel

// One model-ready segment: 19 EEG channels scaled into [-1, 1] plus a
// constant relative-amplitude channel as row 19.
struct Window {
  Eigen::MatrixXf data;  // [20 x samples], dimensionless
  double sampling_rate_hz = 256.0;
  double duration_s = 4.0;
  std::optional<std::string> label;
  std::string session_id;
  double scale_uv = 0.0;  // max abs microvolts of the source segment (0 when all-zero)

  Eigen::Index num_samples() const { return data.cols(); }
  void validate() const;
};

// A homogeneous collection of windows plus the container-level metadata that
// the EEGW file format persists.
struct WindowSet {
  std::vector<Window> windows;
  std::vector<std::string> channel_names;  // 20 entries
  double sampling_rate_hz = 256.0;
  double window_len_s = 4.0;
  nlohmann::json provenance = nlohmann::json::object();

  std::size_t size() const { return windows.size(); }
  void validate() const;
};

// Canonical channel naming for the container: 19 scalp channels + "AMP".
std::vector<std::string> window_channel_names();

// EEGW container: magic "EEGW", u32 version, u32 JSON length, JSON metadata,
// then row-major float32 little-endian payload [num_windows x 20 x samples].
void write_windows(const std::string& path, const WindowSet& set);
WindowSet read_windows(const std::string& path);

std::vector<std::uint8_t> serialize_windows(const WindowSet& set);
WindowSet deserialize_windows(const std::vector<std::uint8_t>& bytes);

}  // namespace eegtcav

#endif  // EEGTCAV_WINDOW_HPP_
