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

#include "test_support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include "edf.hpp"

namespace fs = std::filesystem;

namespace ts {
namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

Eigen::MatrixXd randn(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

Eigen::MatrixXf randnf(int rows, int cols, std::uint64_t seed) {
  return randn(rows, cols, seed).cast<float>();
}

void fft_pow2(std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft size not a power of two");
  // Bit-reversal permutation, then iterative butterflies.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = x[i + k];
        const std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

Eigen::VectorXd fft_magnitude(const Eigen::VectorXd& signal) {
  std::size_t n = 1;
  while (n < static_cast<std::size_t>(signal.size())) n <<= 1;
  std::vector<std::complex<double>> x(n, {0.0, 0.0});
  for (Eigen::Index i = 0; i < signal.size(); ++i) x[static_cast<std::size_t>(i)] = signal[i];
  fft_pow2(x);
  Eigen::VectorXd mag(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) mag[static_cast<Eigen::Index>(i)] = std::abs(x[i]);
  return mag;
}

double dominant_frequency_hz(const Eigen::VectorXd& signal, double fs) {
  const Eigen::VectorXd mag = fft_magnitude(signal);
  const Eigen::Index half = mag.size() / 2;
  Eigen::Index best = 1;
  for (Eigen::Index i = 2; i <= half; ++i) {
    if (mag[i] > mag[best]) best = i;
  }
  return static_cast<double>(best) * fs / static_cast<double>(mag.size());
}

double fir_gain_at(const std::vector<double>& taps, double freq_hz, double fs) {
  std::complex<double> h(0.0, 0.0);
  const double w = 2.0 * kPi * freq_hz / fs;
  for (std::size_t n = 0; n < taps.size(); ++n) {
    h += taps[n] * std::complex<double>(std::cos(w * static_cast<double>(n)),
                                        -std::sin(w * static_cast<double>(n)));
  }
  return std::abs(h);
}

Eigen::VectorXd central_diff(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x, double eps) {
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    const double up = f(probe);
    probe[i] = x[i] - eps;
    const double down = f(probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

TempDir::TempDir() {
  static std::atomic<unsigned> counter{0};
  const auto base = fs::temp_directory_path();
  const unsigned id = counter.fetch_add(1);
  fs::path p;
  std::mt19937_64 rng(std::random_device{}());
  do {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "eegtcav-test-%u-%016llx", id,
                  static_cast<unsigned long long>(rng()));
    p = base / buf;
  } while (fs::exists(p));
  fs::create_directories(p);
  path_ = p.string();
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string TempDir::file(const std::string& name) const {
  return (fs::path(path_) / name).string();
}

namespace {

// Left-justified ASCII header field; throws if the value does not fit.
void put_field(std::string& out, const std::string& value, std::size_t len) {
  if (value.size() > len) throw std::invalid_argument("EDF field too long: " + value);
  out += value;
  out.append(len - value.size(), ' ');
}

std::string num_field(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string tal_text(const std::vector<eegtcav::AnnotationSpan>& spans, long record,
                     double record_duration_s) {
  std::string t;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "+%g", static_cast<double>(record) * record_duration_s);
  t += buf;
  t += '\x14';
  t += '\x14';
  t += '\0';
  if (record == 0) {
    for (const auto& s : spans) {
      std::snprintf(buf, sizeof(buf), "+%g", s.onset_s);
      t += buf;
      if (s.duration_s > 0.0) {
        std::snprintf(buf, sizeof(buf), "\x15%g", s.duration_s);
        t += buf;
      }
      t += '\x14';
      t += s.label;
      t += '\x14';
      t += '\0';
    }
  }
  return t;
}

}  // namespace

double quantization_step(double pmin, double pmax) { return (pmax - pmin) / 65535.0; }

std::vector<std::uint8_t> write_edf(const EdfSpec& spec) {
  const long n_data = static_cast<long>(spec.data.rows());
  if (n_data == 0) throw std::invalid_argument("EdfSpec has no data channels");
  if (static_cast<long>(spec.labels.size()) != n_data) {
    throw std::invalid_argument("EdfSpec labels do not match data rows");
  }
  const long spr = std::lround(spec.sampling_hz * spec.record_duration_s);
  if (spr <= 0 || spec.data.cols() % spr != 0) {
    throw std::invalid_argument("EdfSpec samples not a whole number of records");
  }
  const long n_records = spec.data.cols() / spr;
  const bool with_ann = !spec.annotations.empty();

  // Annotation signal capacity: longest record's TAL text, padded to even.
  long ann_spr = 0;
  if (with_ann) {
    std::size_t need = 0;
    for (long r = 0; r < n_records; ++r) {
      need = std::max(need, tal_text(spec.annotations, r, spec.record_duration_s).size());
    }
    ann_spr = static_cast<long>((need + 1) / 2);
  }
  const long ns = n_data + (with_ann ? 1 : 0);

  std::vector<double> pmin(static_cast<std::size_t>(n_data));
  std::vector<double> pmax(static_cast<std::size_t>(n_data));
  for (long c = 0; c < n_data; ++c) {
    if (c < static_cast<long>(spec.phys_range.size())) {
      pmin[static_cast<std::size_t>(c)] = spec.phys_range[static_cast<std::size_t>(c)].first;
      pmax[static_cast<std::size_t>(c)] = spec.phys_range[static_cast<std::size_t>(c)].second;
    } else {
      const double bound = std::max(1.0, std::ceil(spec.data.row(c).cwiseAbs().maxCoeff()));
      pmin[static_cast<std::size_t>(c)] = -bound;
      pmax[static_cast<std::size_t>(c)] = bound;
    }
  }

  std::string h;
  h.reserve(256 + static_cast<std::size_t>(ns) * 256);
  put_field(h, "0", 8);
  put_field(h, "X X X X", 80);
  put_field(h, spec.recording_id, 80);
  put_field(h, "01.01.26", 8);
  put_field(h, "00.00.00", 8);
  put_field(h, std::to_string(256 + ns * 256), 8);
  put_field(h, "", 44);
  put_field(h, spec.unknown_record_count ? "-1" : std::to_string(n_records), 8);
  put_field(h, num_field(spec.record_duration_s), 8);
  put_field(h, std::to_string(ns), 4);

  const auto each_signal = [&](const std::function<std::string(long)>& value, std::size_t len) {
    for (long i = 0; i < ns; ++i) put_field(h, value(i), len);
  };
  each_signal(
      [&](long i) { return i < n_data ? spec.labels[static_cast<std::size_t>(i)]
                                      : std::string("EDF Annotations"); },
      16);
  each_signal([](long) { return std::string(); }, 80);  // transducer
  each_signal(
      [&](long i) {
        if (i >= n_data) return std::string();
        return i < static_cast<long>(spec.units.size()) ? spec.units[static_cast<std::size_t>(i)]
                                                        : std::string("uV");
      },
      8);
  each_signal(
      [&](long i) { return num_field(i < n_data ? pmin[static_cast<std::size_t>(i)] : -1.0); },
      8);
  each_signal(
      [&](long i) { return num_field(i < n_data ? pmax[static_cast<std::size_t>(i)] : 1.0); },
      8);
  each_signal([&](long) { return std::string("-32768"); }, 8);
  each_signal([&](long) { return std::string("32767"); }, 8);
  each_signal([](long) { return std::string(); }, 80);  // prefiltering
  each_signal([&](long i) { return std::to_string(i < n_data ? spr : ann_spr); }, 8);
  each_signal([](long) { return std::string(); }, 32);  // reserved

  std::vector<std::uint8_t> out(h.begin(), h.end());
  const auto put_i16 = [&out](std::int16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  };
  for (long r = 0; r < n_records; ++r) {
    for (long c = 0; c < n_data; ++c) {
      const double lo = pmin[static_cast<std::size_t>(c)];
      const double hi = pmax[static_cast<std::size_t>(c)];
      const double scale = 65535.0 / (hi - lo);
      for (long s = 0; s < spr; ++s) {
        const double p = spec.data(c, r * spr + s);
        double d = std::round((p - lo) * scale - 32768.0);
        d = std::min(32767.0, std::max(-32768.0, d));
        put_i16(static_cast<std::int16_t>(d));
      }
    }
    if (with_ann) {
      std::string t = tal_text(spec.annotations, r, spec.record_duration_s);
      t.resize(static_cast<std::size_t>(ann_spr) * 2, '\0');
      for (char ch : t) out.push_back(static_cast<std::uint8_t>(ch));
    }
  }
  return out;
}

void write_edf_file(const std::string& path, const EdfSpec& spec) {
  const auto bytes = write_edf(spec);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("failed to write " + path);
}

eegtcav::EegRecording synth_recording(double fs, double duration_s, std::uint64_t seed,
                                      double noise_uv) {
  const auto& names = eegtcav::edf::canonical_channels();
  const auto samples = static_cast<Eigen::Index>(std::llround(fs * duration_s));
  eegtcav::EegRecording rec;
  rec.session_id = "synth-" + std::to_string(seed);
  rec.sampling_rate_hz = fs;
  rec.channel_names = names;
  rec.samples.resize(static_cast<Eigen::Index>(names.size()), samples);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  // Two-sample moving average tames the white-noise spectrum a little so the
  // data looks vaguely EEG-like; the exact shape is irrelevant to the tests.
  for (Eigen::Index c = 0; c < rec.samples.rows(); ++c) {
    double prev = dist(rng);
    for (Eigen::Index t = 0; t < samples; ++t) {
      const double cur = dist(rng);
      rec.samples(c, t) = noise_uv * 0.5 * (prev + cur);
      prev = cur;
    }
  }
  return rec;
}

void add_sine(eegtcav::EegRecording& rec, const std::vector<int>& channels, double freq_hz,
              double amplitude_uv, double phase) {
  for (int c : channels) {
    for (Eigen::Index t = 0; t < rec.samples.cols(); ++t) {
      rec.samples(c, t) += amplitude_uv *
          std::sin(2.0 * kPi * freq_hz * static_cast<double>(t) / rec.sampling_rate_hz + phase);
    }
  }
}

EdfSpec spec_from_recording(const eegtcav::EegRecording& rec) {
  EdfSpec spec;
  spec.recording_id = rec.session_id;
  spec.sampling_hz = rec.sampling_rate_hz;
  spec.data = rec.samples;
  for (const auto& name : rec.channel_names) spec.labels.push_back("EEG " + name + "-REF");
  for (Eigen::Index c = 0; c < rec.samples.rows(); ++c) {
    const double bound = std::max(1.0, std::ceil(rec.samples.row(c).cwiseAbs().maxCoeff()));
    spec.phys_range.emplace_back(-bound, bound);
  }
  spec.annotations = rec.annotations;
  return spec;
}

eegtcav::inverse::LeadField random_lead_field(int sensors, int sources, std::uint64_t seed) {
  eegtcav::inverse::LeadField lf;
  lf.gain = randn(sensors, sources, seed);
  // A Gaussian column is never exactly zero, but keep the guarantee explicit.
  for (int j = 0; j < sources; ++j) {
    if (lf.gain.col(j).norm() < 1e-9) lf.gain(0, j) = 1.0;
  }
  for (int i = 0; i < sensors; ++i) lf.sensor_names.push_back("S" + std::to_string(i));
  for (int j = 0; j < sources; ++j) {
    eegtcav::inverse::SourceParcel p;
    p.parcel_id = j % eegtcav::inverse::kNumParcels;
    p.hemisphere = (j / eegtcav::inverse::kNumParcels) % 2 == 0
                       ? eegtcav::inverse::Hemisphere::kLeft
                       : eegtcav::inverse::Hemisphere::kRight;
    lf.parcel_of.push_back(p);
  }
  lf.validate();
  return lf;
}

eegtcav::inverse::LeadField eeg_lead_field(int sources, std::uint64_t seed) {
  eegtcav::inverse::LeadField lf = random_lead_field(19, sources, seed);
  lf.sensor_names = eegtcav::edf::canonical_channels();
  return lf;
}

eegtcav::Window make_window(const Eigen::MatrixXf& data, double fs,
                            std::optional<std::string> label, double scale_uv) {
  eegtcav::Window w;
  w.data = data;
  w.sampling_rate_hz = fs;
  w.duration_s = static_cast<double>(data.cols()) / fs;
  w.label = std::move(label);
  w.session_id = "test";
  w.scale_uv = scale_uv;
  return w;
}

eegtcav::WindowSet make_window_set(std::vector<eegtcav::Window> windows, double fs,
                                   double window_len_s) {
  eegtcav::WindowSet set;
  set.windows = std::move(windows);
  set.channel_names = eegtcav::window_channel_names();
  set.sampling_rate_hz = fs;
  set.window_len_s = window_len_s;
  return set;
}

const std::vector<int>& left_channels() {
  static const std::vector<int> idx = {0, 2, 3, 7, 8, 12, 13, 17};
  return idx;
}

const std::vector<int>& right_channels() {
  static const std::vector<int> idx = {1, 5, 6, 10, 11, 15, 16, 18};
  return idx;
}

TwoClassData lateralized_alpha_windows(int per_class, int samples, double fs,
                                       std::uint64_t seed, double strong, double weak,
                                       double noise) {
  TwoClassData out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uphase(0.0, 2.0 * kPi);
  for (int cls = 0; cls < 2; ++cls) {
    const auto& strong_side = cls == 1 ? right_channels() : left_channels();
    const auto& weak_side = cls == 1 ? left_channels() : right_channels();
    for (int i = 0; i < per_class; ++i) {
      Eigen::MatrixXf data =
          Eigen::MatrixXf::Zero(eegtcav::kWindowChannels, samples);
      for (int c = 0; c < eegtcav::kWindowChannels - 1; ++c) {
        for (int t = 0; t < samples; ++t) {
          data(c, t) = static_cast<float>(noise * gauss(rng));
        }
      }
      const double phase = uphase(rng);
      for (int pass = 0; pass < 2; ++pass) {
        const auto& side = pass == 0 ? strong_side : weak_side;
        const double amp = pass == 0 ? strong : weak;
        for (int c : side) {
          for (int t = 0; t < samples; ++t) {
            data(c, t) += static_cast<float>(
                amp * std::sin(2.0 * kPi * 10.0 * static_cast<double>(t) / fs + phase));
          }
        }
      }
      data = data.cwiseMax(-1.0f).cwiseMin(1.0f);
      out.windows.push_back(make_window(data, fs, cls == 1 ? std::optional<std::string>("right")
                                                           : std::optional<std::string>("left")));
      out.labels.push_back(cls);
    }
  }
  return out;
}

std::vector<eegtcav::Window> noise_windows(int count, int samples, double fs,
                                           std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-amplitude, amplitude);
  std::vector<eegtcav::Window> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Eigen::MatrixXf data(eegtcav::kWindowChannels, samples);
    for (int c = 0; c < eegtcav::kWindowChannels; ++c) {
      for (int t = 0; t < samples; ++t) data(c, t) = static_cast<float>(dist(rng));
    }
    data.row(eegtcav::kWindowChannels - 1).setZero();
    out.push_back(make_window(data, fs));
  }
  return out;
}

}  // namespace ts
