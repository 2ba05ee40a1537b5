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

#include <cstdint>
#include <cstring>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "common.hpp"
#include "doctest.h"
#include "edf.hpp"
#include "recording.hpp"
#include "test_support.hpp"

using eegtcav::AnnotationSpan;
using eegtcav::EegRecording;
using eegtcav::Error;
using eegtcav::ErrorKind;
namespace edf = eegtcav::edf;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::Numeric;
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  FAIL("expected an Error");
  return "";
}

void put_field(std::vector<std::uint8_t>* out, const std::string& value, std::size_t width) {
  std::string s = value;
  s.resize(width, ' ');
  out->insert(out->end(), s.begin(), s.end());
}

// Minimal writer for signals with differing samples-per-record counts, which
// the shared fixture writer does not produce. The physical range mirrors the
// digital range, so parsed values equal the stored int16 values.
std::vector<std::uint8_t> mixed_rate_edf(const std::vector<std::string>& labels,
                                         const std::vector<int>& spr, int n_records,
                                         const std::vector<std::vector<std::int16_t>>& values) {
  const std::size_t ns = labels.size();
  std::vector<std::uint8_t> out;
  put_field(&out, "0", 8);
  put_field(&out, "X X X X", 80);
  put_field(&out, "mixed-rate", 80);
  put_field(&out, "01.01.26", 8);
  put_field(&out, "00.00.00", 8);
  put_field(&out, std::to_string(256 + 256 * ns), 8);
  put_field(&out, "", 44);
  put_field(&out, std::to_string(n_records), 8);
  put_field(&out, "1", 8);
  put_field(&out, std::to_string(ns), 4);

  for (const auto& l : labels) put_field(&out, l, 16);
  for (std::size_t i = 0; i < ns; ++i) put_field(&out, "", 80);
  for (std::size_t i = 0; i < ns; ++i) put_field(&out, "uV", 8);
  for (std::size_t i = 0; i < ns; ++i) put_field(&out, "-32768", 8);
  for (std::size_t i = 0; i < ns; ++i) put_field(&out, "32767", 8);
  for (std::size_t i = 0; i < ns; ++i) put_field(&out, "-32768", 8);
  for (std::size_t i = 0; i < ns; ++i) put_field(&out, "32767", 8);
  for (std::size_t i = 0; i < ns; ++i) put_field(&out, "", 80);
  for (std::size_t i = 0; i < ns; ++i) put_field(&out, std::to_string(spr[i]), 8);
  for (std::size_t i = 0; i < ns; ++i) put_field(&out, "", 32);

  for (int r = 0; r < n_records; ++r) {
    for (std::size_t i = 0; i < ns; ++i) {
      for (int s = 0; s < spr[i]; ++s) {
        const std::int16_t v = values[i][static_cast<std::size_t>(r * spr[i] + s)];
        out.push_back(static_cast<std::uint8_t>(v & 0xFF));
        out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("EDF round-trip stays within one quantization step") {
  const EegRecording rec = ts::synth_recording(256.0, 61.0, 1);
  const ts::EdfSpec spec = ts::spec_from_recording(rec);
  const EegRecording back = edf::parse_edf(ts::write_edf(spec));

  CHECK(back.session_id == rec.session_id);
  CHECK(back.sampling_rate_hz == 256.0);
  REQUIRE(back.num_channels() == 19);
  REQUIRE(back.num_samples() == rec.num_samples());
  for (Eigen::Index c = 0; c < 19; ++c) {
    const auto [lo, hi] = spec.phys_range[static_cast<std::size_t>(c)];
    const double step = ts::quantization_step(lo, hi);
    const double err = (back.samples.row(c) - rec.samples.row(c)).cwiseAbs().maxCoeff();
    CHECK(err <= 0.5 * step + 1e-12);
  }
}

TEST_CASE("unknown record count is derived from the payload size") {
  const EegRecording rec = ts::synth_recording(200.0, 61.0, 2);
  ts::EdfSpec spec = ts::spec_from_recording(rec);
  spec.unknown_record_count = true;
  const EegRecording back = edf::parse_edf(ts::write_edf(spec));
  CHECK(back.num_samples() == rec.num_samples());
  CHECK(back.sampling_rate_hz == 200.0);
}

TEST_CASE("voltage units convert to microvolts") {
  ts::EdfSpec spec;
  spec.recording_id = "units";
  spec.sampling_hz = 256.0;
  spec.labels = {"A", "B", "C"};
  spec.units = {"uV", "mV", "V"};
  spec.phys_range = {{-200.0, 200.0}, {-1.0, 1.0}, {-0.01, 0.01}};
  spec.data.resize(3, 256);
  spec.data.row(0).setConstant(123.4);   // already microvolts
  spec.data.row(1).setConstant(0.5);     // 0.5 mV
  spec.data.row(2).setConstant(0.002);   // 2 mV expressed in volts

  const EegRecording back = edf::parse_edf(ts::write_edf(spec));
  REQUIRE(back.num_channels() == 3);
  CHECK(back.samples(0, 0) == doctest::Approx(123.4).epsilon(1e-4));
  CHECK(back.samples(1, 0) == doctest::Approx(500.0).epsilon(1e-4));
  CHECK(back.samples(2, 0) == doctest::Approx(2000.0).epsilon(1e-4));
}

TEST_CASE("majority samples-per-record group wins") {
  std::vector<std::vector<std::int16_t>> values = {
      {10, 11, 12, 13, 14, 15, 16, 17},  // 4 per record, 2 records
      {20, 21, 22, 23, 24, 25, 26, 27},
      {30, 31, 32, 33},                  // 2 per record: minority, dropped
  };
  const auto bytes = mixed_rate_edf({"A", "B", "C"}, {4, 4, 2}, 2, values);
  const EegRecording rec = edf::parse_edf(bytes);
  REQUIRE(rec.num_channels() == 2);
  CHECK(rec.channel_names[0] == "A");
  CHECK(rec.channel_names[1] == "B");
  CHECK(rec.sampling_rate_hz == 4.0);
  REQUIRE(rec.num_samples() == 8);
  for (int s = 0; s < 8; ++s) {
    CHECK(rec.samples(0, s) == static_cast<double>(10 + s));
    CHECK(rec.samples(1, s) == static_cast<double>(20 + s));
  }
}

TEST_CASE("annotation-only files are rejected") {
  std::vector<std::vector<std::int16_t>> values = {{0, 0, 0, 0}};
  const auto bytes = mixed_rate_edf({"EDF Annotations"}, {2}, 2, values);
  const std::string msg = message_of([&] { edf::parse_edf(bytes); });
  CHECK(msg.find("annotation") != std::string::npos);
}

TEST_CASE("embedded TAL annotations are parsed and clamped") {
  EegRecording rec = ts::synth_recording(256.0, 61.0, 3);
  ts::EdfSpec spec = ts::spec_from_recording(rec);
  spec.annotations = {
      {"seizure", 5.0, 10.0, std::nullopt},
      {"blink", 30.0, 2.0, std::nullopt},
      {"late", 58.0, 10.0, std::nullopt},  // spills past the end: clamped
  };
  const EegRecording back = edf::parse_edf(ts::write_edf(spec));
  REQUIRE(back.annotations.size() == 3);
  CHECK(back.annotations[0].label == "seizure");
  CHECK(back.annotations[0].onset_s == 5.0);
  CHECK(back.annotations[0].duration_s == 10.0);
  CHECK(back.annotations[1].label == "blink");
  CHECK(back.annotations[1].duration_s == 2.0);
  CHECK(back.annotations[2].label == "late");
  CHECK(back.annotations[2].onset_s == 58.0);
  CHECK(back.annotations[2].duration_s == doctest::Approx(3.0));
}

TEST_CASE("annotation tables parse channels, spans and labels") {
  const std::string text =
      "channel,onset_s,stop_s,label\n"
      "0,1.5,3.5,spike\n"
      ",10,12,seizure\r\n"
      "\n"
      "Fp1,20,20,flat\n";
  const auto spans = edf::parse_annotation_table(text);
  REQUIRE(spans.size() == 3);
  CHECK(spans[0].channel == std::optional<std::string>("0"));
  CHECK(spans[0].onset_s == 1.5);
  CHECK(spans[0].duration_s == 2.0);
  CHECK(spans[0].label == "spike");
  CHECK_FALSE(spans[1].channel.has_value());
  CHECK(spans[1].label == "seizure");
  CHECK(spans[2].channel == std::optional<std::string>("Fp1"));
  CHECK(spans[2].duration_s == 0.0);
}

TEST_CASE("annotation table errors carry line numbers") {
  CHECK(kind_of([] { edf::parse_annotation_table(""); }) == ErrorKind::Data);
  CHECK(message_of([] { edf::parse_annotation_table("a,b,c\n"); }).find("line 1") !=
        std::string::npos);

  const std::string bad_cols = "channel,onset_s,stop_s,label\n0,1,2\n";
  CHECK(message_of([&] { edf::parse_annotation_table(bad_cols); }).find("line 2") !=
        std::string::npos);

  const std::string bad_num = "channel,onset_s,stop_s,label\n0,abc,2,x\n";
  CHECK(message_of([&] { edf::parse_annotation_table(bad_num); }).find("numbers") !=
        std::string::npos);

  const std::string reversed = "channel,onset_s,stop_s,label\n0,5,2,x\n";
  CHECK(message_of([&] { edf::parse_annotation_table(reversed); }).find("precedes") !=
        std::string::npos);

  const std::string no_label = "channel,onset_s,stop_s,label\n0,1,2, \n";
  CHECK(message_of([&] { edf::parse_annotation_table(no_label); }).find("empty label") !=
        std::string::npos);
}

TEST_CASE("screening reports each violated criterion") {
  const edf::ScreeningCriteria crit;
  const EegRecording good = ts::synth_recording(256.0, 61.0, 4);
  const auto ok = edf::screen_recording(good, crit);
  CHECK(ok.accepted);
  CHECK(ok.reasons.empty());

  auto reasons_of = [&](const EegRecording& r) { return edf::screen_recording(r, crit).reasons; };

  EegRecording narrow = good;
  narrow.channel_names.resize(10);
  narrow.samples = good.samples.topRows(10);
  CHECK(reasons_of(narrow) == std::vector<std::string>{"channels"});

  EegRecording brief = good;
  brief.samples = good.samples.leftCols(30 * 256);
  CHECK(reasons_of(brief) == std::vector<std::string>{"duration"});

  EegRecording slow = ts::synth_recording(80.0, 61.0, 5);
  CHECK(reasons_of(slow) == std::vector<std::string>{"sampling rate"});

  EegRecording spiky = good;
  spiky.samples(3, 100) = 600.0;
  CHECK(reasons_of(spiky) == std::vector<std::string>{"extreme values"});

  EegRecording flat = good;
  flat.samples.row(7).setConstant(0.01);  // peak-to-peak below the scale floor
  CHECK(reasons_of(flat) == std::vector<std::string>{"scale"});

  EegRecording wreck = ts::synth_recording(80.0, 10.0, 6);
  const auto many = reasons_of(wreck);
  CHECK(many.size() >= 2);
}

TEST_CASE("canonical montage mapping handles aliases and label decoration") {
  // Old-convention names in decorated labels; distinct constant per channel.
  std::vector<std::string> names = edf::canonical_channels();
  names[7] = "T3";    // T7
  names[11] = "T4";   // T8
  names[12] = "P7";   // T5
  names[16] = "P8";   // T6
  EegRecording rec;
  rec.session_id = "mapme";
  rec.sampling_rate_hz = 256.0;
  rec.samples.resize(19, 64);
  rec.channel_names.clear();
  for (int c = 0; c < 19; ++c) {
    rec.channel_names.push_back("EEG " + names[static_cast<std::size_t>(c)] + "-REF");
    rec.samples.row(c).setConstant(static_cast<double>(c));
  }
  // Shuffle two rows to prove mapping is by name, not position.
  std::swap(rec.channel_names[0], rec.channel_names[5]);
  rec.samples.row(0).swap(rec.samples.row(5));

  const EegRecording mapped = edf::map_channels(rec);
  REQUIRE(mapped.num_channels() == 19);
  CHECK(mapped.channel_names == edf::canonical_channels());
  for (int c = 0; c < 19; ++c) CHECK(mapped.samples(c, 0) == static_cast<double>(c));
}

TEST_CASE("direct canonical names take precedence over aliases") {
  EegRecording rec;
  rec.session_id = "dup";
  rec.sampling_rate_hz = 256.0;
  std::vector<std::string> names = edf::canonical_channels();
  names.push_back("T3");  // alias for T7, already present directly
  rec.channel_names = names;
  rec.samples.resize(20, 16);
  for (int c = 0; c < 20; ++c) rec.samples.row(c).setConstant(static_cast<double>(c));

  const EegRecording mapped = edf::map_channels(rec);
  CHECK(mapped.samples(7, 0) == 7.0);  // the direct T7 row, not the alias row
}

TEST_CASE("missing montage channels are named in the error") {
  EegRecording rec;
  rec.session_id = "gap";
  rec.sampling_rate_hz = 256.0;
  std::vector<std::string> names = edf::canonical_channels();
  names.pop_back();  // drop O2
  rec.channel_names = names;
  rec.samples = Eigen::MatrixXd::Zero(18, 16);
  const std::string msg = message_of([&] { edf::map_channels(rec); });
  CHECK(msg.find("O2") != std::string::npos);
  CHECK(kind_of([&] { edf::map_channels(rec); }) == ErrorKind::Data);
}

TEST_CASE("malformed EDF files raise typed data errors") {
  const EegRecording rec = ts::synth_recording(128.0, 61.0, 8);
  const std::vector<std::uint8_t> good = ts::write_edf(ts::spec_from_recording(rec));
  CHECK_NOTHROW(edf::parse_edf(good));

  {
    std::vector<std::uint8_t> bad(good.begin(), good.begin() + 100);
    CHECK(message_of([&] { edf::parse_edf(bad); }).find("header") != std::string::npos);
    CHECK(kind_of([&] { edf::parse_edf(bad); }) == ErrorKind::Data);
  }
  {
    std::vector<std::uint8_t> bad = good;
    bad[0] = '9';
    CHECK(message_of([&] { edf::parse_edf(bad); }).find("version") != std::string::npos);
  }
  {
    std::vector<std::uint8_t> bad = good;
    bad.resize(bad.size() - 3);  // mid-record cut with a known record count
    CHECK(kind_of([&] { edf::parse_edf(bad); }) == ErrorKind::Data);
  }
  {
    // Degenerate digital range on signal 0: dmin block starts at 256 + 120*ns.
    std::vector<std::uint8_t> bad = good;
    const std::size_t dmin_off = 256 + 120 * 19;
    const char* patched = "32767   ";
    std::memcpy(bad.data() + dmin_off, patched, 8);
    const std::string msg = message_of([&] { edf::parse_edf(bad); });
    CHECK(kind_of([&] { edf::parse_edf(bad); }) == ErrorKind::Data);
    CHECK(msg.find("signal") != std::string::npos);
  }
}
