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

#include "dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace eegtcav::dsp {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  return std::sin(kPi * x) / (kPi * x);
}

// Symmetric Hamming window, built by mirroring so w[i] == w[n-1-i] bitwise.
std::vector<double> hamming(int n) {
  std::vector<double> w(n);
  for (int i = 0; i <= (n - 1) / 2; ++i) {
    const double v = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (n - 1));
    w[i] = v;
    w[n - 1 - i] = v;
  }
  return w;
}

// Windowed-sinc lowpass with exactly unit DC gain (taps sum to 1).
std::vector<double> lowpass_taps(double cutoff_norm, int n) {
  std::vector<double> taps(n);
  const std::vector<double> w = hamming(n);
  const double center = 0.5 * (n - 1);
  for (int i = 0; i <= (n - 1) / 2; ++i) {
    const double m = i - center;
    const double v = w[i] * cutoff_norm * sinc(cutoff_norm * m);
    taps[i] = v;
    taps[n - 1 - i] = v;
  }
  const double sum = std::accumulate(taps.begin(), taps.end(), 0.0);
  for (int i = 0; i <= (n - 1) / 2; ++i) {
    taps[i] /= sum;
    taps[n - 1 - i] = taps[i];
  }
  return taps;
}

// Windowed sinc difference, gain pinned to exactly 1 at the band center.
std::vector<double> bandpass_taps(double lo_norm, double hi_norm, int n) {
  std::vector<double> taps(n);
  const std::vector<double> w = hamming(n);
  const double center = 0.5 * (n - 1);
  for (int i = 0; i <= (n - 1) / 2; ++i) {
    const double m = i - center;
    const double v = w[i] * (hi_norm * sinc(hi_norm * m) - lo_norm * sinc(lo_norm * m));
    taps[i] = v;
    taps[n - 1 - i] = v;
  }
  const double mid = 0.5 * (lo_norm + hi_norm);
  double gain = 0.0;
  for (int i = 0; i < n; ++i) gain += taps[i] * std::cos(kPi * mid * (i - center));
  for (int i = 0; i <= (n - 1) / 2; ++i) {
    taps[i] /= gain;
    taps[n - 1 - i] = taps[i];
  }
  return taps;
}

double transition_width(double f, double nyq) {
  return std::min({std::max(0.25 * f, 2.0), f, nyq - f});
}

Eigen::Index reflect_index(Eigen::Index i, Eigen::Index len) {
  // Mirror without edge duplication: x[-1] -> x[1], x[len] -> x[len-2].
  while (i < 0 || i >= len) {
    if (i < 0) i = -i;
    if (i >= len) i = 2 * (len - 1) - i;
  }
  return i;
}

struct Rational {
  long long up = 1;
  long long down = 1;
};

Rational rationalize(double source_hz, double target_hz) {
  const long long a = std::llround(target_hz * 1000.0);
  const long long b = std::llround(source_hz * 1000.0);
  if (a <= 0 || b <= 0) throw Error::config("resample: rates must be positive");
  const long long g = std::gcd(a, b);
  Rational r;
  r.up = a / g;
  r.down = b / g;
  if (r.up > 16384 || r.down > 16384)
    throw Error::config("resample: rate ratio is not a small rational");
  return r;
}

}  // namespace

int auto_num_taps(FilterKind kind, const std::vector<double>& cutoffs_hz, double sampling_hz) {
  const double nyq = 0.5 * sampling_hz;
  double tw = nyq;
  for (double f : cutoffs_hz) tw = std::min(tw, transition_width(f, nyq));
  if (kind == FilterKind::Bandpass || kind == FilterKind::Bandstop)
    tw = std::min(tw, 0.5 * (cutoffs_hz[1] - cutoffs_hz[0]));
  int n = static_cast<int>(std::ceil(3.3 * sampling_hz / tw));
  if (n % 2 == 0) ++n;
  return std::max(n, 3);
}

FirFilter design_firwin(FilterKind kind, const std::vector<double>& cutoffs_hz,
                        double sampling_hz, int num_taps) {
  if (sampling_hz <= 0) throw Error::config("firwin: sampling rate must be positive");
  const double nyq = 0.5 * sampling_hz;
  const std::size_t want = (kind == FilterKind::Lowpass || kind == FilterKind::Highpass) ? 1 : 2;
  if (cutoffs_hz.size() != want)
    throw Error::config("firwin: wrong number of cutoff frequencies");
  for (double f : cutoffs_hz)
    if (f <= 0.0 || f >= nyq)
      throw Error::config("firwin: cutoff must lie strictly between 0 and Nyquist");
  if (want == 2 && cutoffs_hz[0] >= cutoffs_hz[1])
    throw Error::config("firwin: band cutoffs must be increasing");

  int n = num_taps > 0 ? num_taps : auto_num_taps(kind, cutoffs_hz, sampling_hz);
  if (n < 3) throw Error::config("firwin: need at least 3 taps");
  if ((kind == FilterKind::Highpass || kind == FilterKind::Bandstop) && n % 2 == 0)
    throw Error::config("firwin: highpass/bandstop require an odd tap count");

  FirFilter filt;
  filt.kind = kind;
  filt.design = {cutoffs_hz, sampling_hz, n, "hamming"};

  switch (kind) {
    case FilterKind::Lowpass:
      filt.taps = lowpass_taps(cutoffs_hz[0] / nyq, n);
      break;
    case FilterKind::Highpass: {
      filt.taps = lowpass_taps(cutoffs_hz[0] / nyq, n);
      for (double& t : filt.taps) t = -t;
      filt.taps[(n - 1) / 2] += 1.0;  // delta minus lowpass: exact DC null
      break;
    }
    case FilterKind::Bandpass:
      filt.taps = bandpass_taps(cutoffs_hz[0] / nyq, cutoffs_hz[1] / nyq, n);
      break;
    case FilterKind::Bandstop: {
      // Unit-DC lowpass below the band plus spectral-inverted lowpass above
      // it; the DC gain is exactly 1 + 1 - 1 = 1.
      filt.taps = lowpass_taps(cutoffs_hz[0] / nyq, n);
      const std::vector<double> upper = lowpass_taps(cutoffs_hz[1] / nyq, n);
      for (int i = 0; i < n; ++i) filt.taps[i] -= upper[i];
      filt.taps[(n - 1) / 2] += 1.0;
      break;
    }
  }
  for (double t : filt.taps)
    if (!std::isfinite(t)) throw Error::numeric("firwin: non-finite tap");
  return filt;
}

Eigen::VectorXd apply_filter(const Eigen::VectorXd& signal, const FirFilter& filter) {
  const Eigen::Index len = signal.size();
  const Eigen::Index n = static_cast<Eigen::Index>(filter.taps.size());
  if (len <= n) throw Error::data("apply_filter: signal must be longer than the filter");
  const Eigen::Index delay = filter.group_delay();

  // Extended copy with reflect padding so the compensated output stays the
  // input length.
  Eigen::VectorXd ext(len + 2 * delay);
  for (Eigen::Index i = 0; i < ext.size(); ++i)
    ext[i] = signal[reflect_index(i - delay, len)];

  Eigen::VectorXd out(len);
  const double* taps = filter.taps.data();
  for (Eigen::Index t = 0; t < len; ++t) {
    double acc = 0.0;
    const double* x = ext.data() + t + 2 * delay;  // ext[t + delay + delay - k]
    for (Eigen::Index k = 0; k < n; ++k) acc += taps[k] * x[-k];
    out[t] = acc;
  }
  return out;
}

Eigen::MatrixXd apply_filter(const Eigen::MatrixXd& signal, const FirFilter& filter) {
  Eigen::MatrixXd out(signal.rows(), signal.cols());
  for (Eigen::Index r = 0; r < signal.rows(); ++r)
    out.row(r) = apply_filter(Eigen::VectorXd(signal.row(r)), filter).transpose();
  return out;
}

Eigen::VectorXd resample_signal(const Eigen::VectorXd& signal, double source_hz, double target_hz) {
  if (target_hz <= 0) throw Error::config("resample: target rate must be positive");
  if (source_hz <= 0) throw Error::config("resample: source rate must be positive");
  const Rational r = rationalize(source_hz, target_hz);
  if (r.up == 1 && r.down == 1) return signal;
  const Eigen::Index len = signal.size();
  const Eigen::Index out_len =
      static_cast<Eigen::Index>(std::llround(static_cast<double>(len) * target_hz / source_hz));

  // Anti-alias lowpass on the virtual upsampled grid, cutoff at the smaller
  // Nyquist. Each polyphase branch is normalized to unit DC gain so constant
  // signals pass exactly.
  const long long maxlm = std::max(r.up, r.down);
  const int half = static_cast<int>(10 * maxlm);
  const int ntaps = 2 * half + 1;
  std::vector<double> taps = lowpass_taps(1.0 / static_cast<double>(maxlm), ntaps);
  for (long long phase = 0; phase < r.up; ++phase) {
    double s = 0.0;
    for (int k = static_cast<int>(phase); k < ntaps; k += static_cast<int>(r.up)) s += taps[k];
    if (s != 0.0)
      for (int k = static_cast<int>(phase); k < ntaps; k += static_cast<int>(r.up)) taps[k] /= s;
  }

  Eigen::VectorXd out(out_len);
  for (Eigen::Index i = 0; i < out_len; ++i) {
    // Upsampled-grid center for output i; only every up-th tap hits a sample.
    const long long center = static_cast<long long>(i) * r.down + half;
    long long k0 = center % r.up;
    double acc = 0.0;
    for (long long k = k0; k < ntaps; k += r.up) {
      const long long j = (center - k) / r.up;
      acc += taps[static_cast<std::size_t>(k)] * signal[reflect_index(j, len)];
    }
    out[i] = acc;
  }
  return out;
}

EegRecording resample(const EegRecording& rec, double target_hz) {
  if (target_hz <= 0) throw Error::config("resample: target rate must be positive");
  EegRecording out = rec;
  if (rec.sampling_rate_hz == target_hz) return out;
  const Eigen::Index out_len = static_cast<Eigen::Index>(
      std::llround(static_cast<double>(rec.num_samples()) * target_hz / rec.sampling_rate_hz));
  out.samples.resize(rec.num_channels(), out_len);
  for (Eigen::Index c = 0; c < rec.num_channels(); ++c)
    out.samples.row(c) =
        resample_signal(Eigen::VectorXd(rec.samples.row(c)), rec.sampling_rate_hz, target_hz)
            .transpose();
  out.sampling_rate_hz = target_hz;
  return out;
}

PreprocessOutcome preprocess(const EegRecording& rec, const PreprocessParams& params) {
  PreprocessOutcome outcome;
  try {
    const double fs = rec.sampling_rate_hz;
    const auto hp = design_firwin(FilterKind::Highpass, {params.highpass_hz}, fs);
    const auto lp = design_firwin(FilterKind::Lowpass, {params.lowpass_hz}, fs);
    const auto notch =
        design_firwin(FilterKind::Bandstop, {params.notch_low_hz, params.notch_high_hz}, fs);
    EegRecording work = rec;
    work.samples = apply_filter(work.samples, hp);
    work.samples = apply_filter(work.samples, lp);
    work.samples = apply_filter(work.samples, notch);
    if (fs != params.target_rate_hz) work = resample(work, params.target_rate_hz);
    outcome.recording = std::move(work);
  } catch (const Error& e) {
    outcome.skip_reason = e.what();
  }
  return outcome;
}

Window cut_window(const EegRecording& rec, Eigen::Index start, double window_len_s,
                  double reference_uv) {
  const auto samples = static_cast<Eigen::Index>(std::llround(window_len_s * rec.sampling_rate_hz));
  if (start < 0 || start + samples > rec.num_samples())
    throw Error::data("cut_window: segment out of range");
  if (rec.num_channels() != kWindowChannels - 1)
    throw Error::data("cut_window: recording must have 19 channels (channel-mapped)");

  const Eigen::MatrixXd seg = rec.samples.middleCols(start, samples);
  const double max_abs = seg.cwiseAbs().maxCoeff();

  Window w;
  w.data.resize(kWindowChannels, samples);
  w.sampling_rate_hz = rec.sampling_rate_hz;
  w.duration_s = window_len_s;
  w.session_id = rec.session_id;
  w.scale_uv = max_abs;

  double amp;
  if (max_abs == 0.0) {
    w.data.topRows(kWindowChannels - 1).setZero();
    amp = -1.0;
  } else {
    w.data.topRows(kWindowChannels - 1) = (seg / max_abs).cast<float>();
    amp = std::clamp(max_abs / reference_uv, 0.0, 1.0) * 2.0 - 1.0;
  }
  w.data.row(kWindowChannels - 1).setConstant(static_cast<float>(amp));
  return w;
}

std::vector<Window> epoch_and_scale(const EegRecording& rec, double window_len_s, double stride_s,
                                    double reference_uv) {
  if (window_len_s <= 0 || stride_s <= 0)
    throw Error::config("epoch_and_scale: window length and stride must be positive");
  const auto samples = static_cast<Eigen::Index>(std::llround(window_len_s * rec.sampling_rate_hz));
  const auto stride = static_cast<Eigen::Index>(std::llround(stride_s * rec.sampling_rate_hz));
  std::vector<Window> out;
  for (Eigen::Index start = 0; start + samples <= rec.num_samples(); start += stride)
    out.push_back(cut_window(rec, start, window_len_s, reference_uv));
  return out;
}

std::vector<Window> epoch_spans_and_scale(const EegRecording& rec,
                                          const std::vector<AnnotationSpan>& spans,
                                          double window_len_s, double reference_uv) {
  std::vector<Window> out;
  const auto samples = static_cast<Eigen::Index>(std::llround(window_len_s * rec.sampling_rate_hz));
  for (const auto& span : spans) {
    const auto begin = static_cast<Eigen::Index>(std::llround(span.onset_s * rec.sampling_rate_hz));
    const auto end = static_cast<Eigen::Index>(
        std::llround((span.onset_s + span.duration_s) * rec.sampling_rate_hz));
    for (Eigen::Index start = begin; start + samples <= std::min(end, rec.num_samples());
         start += samples) {
      Window w = cut_window(rec, start, window_len_s, reference_uv);
      w.label = span.label;
      out.push_back(std::move(w));
    }
  }
  return out;
}

}  // namespace eegtcav::dsp
