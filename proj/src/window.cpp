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

#include "window.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "common.hpp"

namespace eegtcav {

namespace {

constexpr char kMagic[4] = {'E', 'E', 'G', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw Error::data("EEGW: truncated header");
  std::uint32_t v = static_cast<std::uint32_t>(in[pos]) |
                    (static_cast<std::uint32_t>(in[pos + 1]) << 8) |
                    (static_cast<std::uint32_t>(in[pos + 2]) << 16) |
                    (static_cast<std::uint32_t>(in[pos + 3]) << 24);
  pos += 4;
  return v;
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

float get_f32(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  std::uint32_t bits = get_u32(in, pos);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

void Window::validate() const {
  if (data.rows() != kWindowChannels)
    throw Error::data("window: expected 20 channel rows, got " + std::to_string(data.rows()));
  if (sampling_rate_hz <= 0) throw Error::data("window: sampling rate must be positive");
  if (duration_s != 4.0 && duration_s != 60.0)
    throw Error::data("window: duration must be 4 or 60 seconds");
  const auto expected = static_cast<Eigen::Index>(std::llround(duration_s * sampling_rate_hz));
  if (data.cols() != expected)
    throw Error::data("window: sample count " + std::to_string(data.cols()) +
                      " does not equal duration x rate");
  if (!data.allFinite() || data.cwiseAbs().maxCoeff() > 1.0f + 1e-6f)
    throw Error::data("window: values must be finite and lie in [-1, 1]");
}

void WindowSet::validate() const {
  if (static_cast<int>(channel_names.size()) != kWindowChannels)
    throw Error::data("window set: expected 20 channel names");
  for (const auto& w : windows) {
    w.validate();
    if (w.duration_s != window_len_s)
      throw Error::data("window set: mixed window lengths");
    if (w.sampling_rate_hz != sampling_rate_hz)
      throw Error::data("window set: mixed sampling rates");
  }
}

std::vector<std::string> window_channel_names() {
  return {"Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T7", "C3", "Cz",
          "C4",  "T8",  "T5", "P3", "Pz", "P4", "T6", "O1", "O2", "AMP"};
}

std::vector<std::uint8_t> serialize_windows(const WindowSet& set) {
  set.validate();
  const std::size_t n = set.windows.size();
  const Eigen::Index samples = n > 0 ? set.windows[0].num_samples() : 0;

  nlohmann::json meta;
  meta["channel_names"] = set.channel_names;
  meta["sampling_rate_hz"] = set.sampling_rate_hz;
  meta["window_len_s"] = set.window_len_s;
  meta["num_windows"] = n;
  meta["samples_per_window"] = samples;
  std::vector<std::string> session_ids, labels;
  std::vector<double> scales;
  session_ids.reserve(n);
  for (const auto& w : set.windows) {
    session_ids.push_back(w.session_id);
    labels.push_back(w.label.value_or(""));
    scales.push_back(w.scale_uv);
  }
  meta["session_ids"] = session_ids;
  meta["labels"] = labels;
  meta["scale_uv"] = scales;
  meta["provenance"] = set.provenance;
  const std::string meta_str = meta.dump();

  std::vector<std::uint8_t> out;
  out.reserve(16 + meta_str.size() + n * kWindowChannels * samples * 4);
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(meta_str.size()));
  out.insert(out.end(), meta_str.begin(), meta_str.end());
  for (const auto& w : set.windows) {
    if (w.num_samples() != samples) throw Error::data("EEGW: inconsistent window sample counts");
    for (int c = 0; c < kWindowChannels; ++c)
      for (Eigen::Index t = 0; t < samples; ++t) put_f32(out, w.data(c, t));
  }
  return out;
}

WindowSet deserialize_windows(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw Error::data("EEGW: bad magic");
  pos = 4;
  const std::uint32_t version = get_u32(bytes, pos);
  if (version != kVersion)
    throw Error::data("EEGW: unsupported version " + std::to_string(version));
  const std::uint32_t meta_len = get_u32(bytes, pos);
  if (pos + meta_len > bytes.size()) throw Error::data("EEGW: truncated metadata");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(bytes.begin() + pos, bytes.begin() + pos + meta_len);
  } catch (const nlohmann::json::exception& e) {
    throw Error::data(std::string("EEGW: invalid metadata JSON: ") + e.what());
  }
  pos += meta_len;

  WindowSet set;
  try {
    set.channel_names = meta.at("channel_names").get<std::vector<std::string>>();
    set.sampling_rate_hz = meta.at("sampling_rate_hz").get<double>();
    set.window_len_s = meta.at("window_len_s").get<double>();
    set.provenance = meta.value("provenance", nlohmann::json::object());
    const std::size_t n = meta.at("num_windows").get<std::size_t>();
    const Eigen::Index samples = meta.at("samples_per_window").get<Eigen::Index>();
    const auto session_ids = meta.at("session_ids").get<std::vector<std::string>>();
    const auto labels = meta.at("labels").get<std::vector<std::string>>();
    const auto scales = meta.value("scale_uv", std::vector<double>(n, 0.0));
    if (session_ids.size() != n || labels.size() != n || scales.size() != n)
      throw Error::data("EEGW: per-window metadata lists do not match num_windows");

    const std::size_t expected = n * kWindowChannels * static_cast<std::size_t>(samples) * 4;
    if (bytes.size() - pos != expected)
      throw Error::data("EEGW: payload size mismatch (truncated or trailing bytes)");

    set.windows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      Window w;
      w.data.resize(kWindowChannels, samples);
      for (int c = 0; c < kWindowChannels; ++c)
        for (Eigen::Index t = 0; t < samples; ++t) w.data(c, t) = get_f32(bytes, pos);
      w.sampling_rate_hz = set.sampling_rate_hz;
      w.duration_s = set.window_len_s;
      w.session_id = session_ids[i];
      if (!labels[i].empty()) w.label = labels[i];
      w.scale_uv = scales[i];
      set.windows.push_back(std::move(w));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error::data(std::string("EEGW: metadata field error: ") + e.what());
  }
  set.validate();
  return set;
}

void write_windows(const std::string& path, const WindowSet& set) {
  const auto bytes = serialize_windows(set);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error::data("EEGW: cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error::data("EEGW: write failed: " + path);
}

WindowSet read_windows(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error::data("EEGW: cannot open: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_windows(bytes);
}

}  // namespace eegtcav
