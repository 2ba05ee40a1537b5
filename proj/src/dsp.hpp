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

#ifndef EEGTCAV_DSP_HPP_
#define EEGTCAV_DSP_HPP_

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "recording.hpp"
#include "window.hpp"

namespace eegtcav::dsp {

enum class FilterKind { Lowpass, Highpass, Bandpass, Bandstop };

struct FirDesign {
  std::vector<double> cutoffs_hz;
  double sampling_hz = 0.0;
  int num_taps = 0;
  std::string window_function = "hamming";
};

// Linear-phase FIR filter. Taps are exactly symmetric by construction.
struct FirFilter {
  std::vector<double> taps;
  FilterKind kind = FilterKind::Lowpass;
  FirDesign design;
  int group_delay() const { return (static_cast<int>(taps.size()) - 1) / 2; }
};

// Windowed-sinc (Hamming) design. Gain is pinned exactly at the reference
// frequency: DC for lowpass/bandstop, band center for bandpass; highpass has
// an exact DC null (spectral inversion of a unit-DC lowpass).
// num_taps == 0 selects an automatic length from the 3.3 / transition-width
// heuristic, rounded up to odd.
FirFilter design_firwin(FilterKind kind, const std::vector<double>& cutoffs_hz,
                        double sampling_hz, int num_taps = 0);

// Automatic tap count for the given design (what num_taps == 0 resolves to).
int auto_num_taps(FilterKind kind, const std::vector<double>& cutoffs_hz, double sampling_hz);

// Same-length filtering with group-delay compensation and reflect padding.
// Requires signal length > tap count.
Eigen::VectorXd apply_filter(const Eigen::VectorXd& signal, const FirFilter& filter);
Eigen::MatrixXd apply_filter(const Eigen::MatrixXd& signal, const FirFilter& filter);

// Polyphase rational-ratio resampling with an anti-alias lowpass at the
// smaller of the two Nyquist frequencies. Output length is
// round(len * target / source).
Eigen::VectorXd resample_signal(const Eigen::VectorXd& signal, double source_hz, double target_hz);
EegRecording resample(const EegRecording& rec, double target_hz);

struct PreprocessParams {
  double highpass_hz = 0.1;
  double lowpass_hz = 100.0;
  double notch_low_hz = 58.0;
  double notch_high_hz = 62.0;
  double target_rate_hz = 256.0;
};

// Result of the preprocessing chain. A recording that cannot be processed
// (too short for the filters, rate below the lowpass band, ...) is reported
// as a skip, not an exception.
struct PreprocessOutcome {
  std::optional<EegRecording> recording;
  std::string skip_reason;
  bool skipped() const { return !recording.has_value(); }
};

// Highpass 0.1 Hz -> lowpass 100 Hz -> notch 58-62 Hz -> resample to 256 Hz.
PreprocessOutcome preprocess(const EegRecording& rec, const PreprocessParams& params = {});

inline constexpr double kDefaultReferenceUv = 100.0;

// Cuts a scaled window starting at sample `start`. Each window is divided by
// its own max absolute value; the 20th row is the constant relative-amplitude
// channel clamp(max_abs / reference, 0, 1) * 2 - 1.
Window cut_window(const EegRecording& rec, Eigen::Index start, double window_len_s,
                  double reference_uv = kDefaultReferenceUv);

// Tiles the recording with the given stride (seconds).
std::vector<Window> epoch_and_scale(const EegRecording& rec, double window_len_s,
                                    double stride_s, double reference_uv = kDefaultReferenceUv);

// Tiles each annotation span into non-overlapping windows; spans shorter than
// the window length contribute nothing. Windows inherit the span label.
std::vector<Window> epoch_spans_and_scale(const EegRecording& rec,
                                          const std::vector<AnnotationSpan>& spans,
                                          double window_len_s,
                                          double reference_uv = kDefaultReferenceUv);

}  // namespace eegtcav::dsp

#endif  // EEGTCAV_DSP_HPP_
