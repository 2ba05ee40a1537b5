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

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "common.hpp"
#include "doctest.h"
#include "inverse.hpp"
#include "test_support.hpp"
#include "window.hpp"

using eegtcav::Error;
using eegtcav::ErrorKind;
using eegtcav::Window;
namespace inverse = eegtcav::inverse;
using inverse::Band;
using inverse::Hemisphere;

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

int localized_source(const inverse::InverseOperator& op, const inverse::LeadField& lf, int j) {
  const Eigen::VectorXd estimate = op.resolvent * lf.gain.col(j);
  int best = 0;
  estimate.cwiseAbs().maxCoeff(&best);
  return best;
}

}  // namespace

TEST_CASE("eLORETA exactly localizes every point source") {
  struct Shape {
    int sensors;
    int sources;
    std::uint64_t seed;
  };
  for (const Shape s : {Shape{8, 20, 11}, Shape{16, 50, 12}, Shape{8, 30, 13}}) {
    const inverse::LeadField lf = ts::random_lead_field(s.sensors, s.sources, s.seed);
    const inverse::InverseOperator op = inverse::eloreta(lf, 1e-4);
    CHECK(op.converged);
    for (int j = 0; j < s.sources; ++j) {
      INFO("sensors " << s.sensors << " sources " << s.sources << " source " << j);
      CHECK(localized_source(op, lf, j) == j);
    }
  }
}

TEST_CASE("the inverse operator has the documented shape and state") {
  const inverse::LeadField lf = ts::random_lead_field(8, 20, 14);
  const inverse::InverseOperator op = inverse::eloreta(lf);
  CHECK(op.resolvent.rows() == 20);
  CHECK(op.resolvent.cols() == 8);
  CHECK(op.resolvent.allFinite());
  CHECK(op.alpha == 1e-4);
  CHECK(op.iterations_used >= 1);
  CHECK(op.converged);
}

TEST_CASE("eloreta validates its arguments") {
  const inverse::LeadField lf = ts::random_lead_field(6, 10, 15);
  CHECK(kind_of([&] { inverse::eloreta(lf, 0.0); }) == ErrorKind::Config);
  CHECK(kind_of([&] { inverse::eloreta(lf, 1e-4, 0.0); }) == ErrorKind::Config);
  CHECK(kind_of([&] { inverse::eloreta(lf, 1e-4, 1e-6, 0); }) == ErrorKind::Config);
}

TEST_CASE("band definitions cover the conventional ranges") {
  CHECK(inverse::band_range(Band::kDelta).low_hz == 0.5);
  CHECK(inverse::band_range(Band::kDelta).high_hz == 4.0);
  CHECK(inverse::band_range(Band::kTheta).low_hz == 4.0);
  CHECK(inverse::band_range(Band::kTheta).high_hz == 8.0);
  CHECK(inverse::band_range(Band::kAlpha).low_hz == 8.0);
  CHECK(inverse::band_range(Band::kAlpha).high_hz == 12.0);
  CHECK(inverse::band_range(Band::kBeta).low_hz == 12.0);
  CHECK(inverse::band_range(Band::kBeta).high_hz == 30.0);
  CHECK(inverse::band_range(Band::kGamma).low_hz == 30.0);
  CHECK(inverse::band_range(Band::kGamma).high_hz == 70.0);

  for (Band b : inverse::kAllBands) CHECK(inverse::band_from_name(inverse::band_name(b)) == b);
  CHECK(inverse::band_name(Band::kAlpha) == "alpha");
  CHECK(kind_of([] { inverse::band_from_name("mu"); }) == ErrorKind::Config);
}

TEST_CASE("slot indexing covers left then right hemispheres") {
  CHECK(inverse::slot_index(0, Hemisphere::kLeft) == 0);
  CHECK(inverse::slot_index(22, Hemisphere::kLeft) == 22);
  CHECK(inverse::slot_index(0, Hemisphere::kRight) == 23);
  CHECK(inverse::slot_index(22, Hemisphere::kRight) == 45);
  CHECK(inverse::slot_name(3) == "parcel3L");
  CHECK(inverse::slot_name(26) == "parcel3R");
}

TEST_CASE("band power concentrates on the planted oscillating source") {
  const inverse::LeadField lf = ts::eeg_lead_field(10, 21);
  const inverse::InverseOperator op = inverse::eloreta(lf, 1e-4);
  const int planted = 3;  // parcel 3, left hemisphere

  // Rank-one sensor data: one source oscillating at 10 Hz.
  const int samples = 1024;
  Eigen::VectorXd tone(samples);
  for (int t = 0; t < samples; ++t) tone[t] = std::sin(2.0 * M_PI * 10.0 * t / 256.0);
  Eigen::MatrixXd sensors = lf.gain.col(planted) * tone.transpose();
  sensors /= sensors.cwiseAbs().maxCoeff();

  Eigen::MatrixXf data(20, samples);
  data.topRows(19) = sensors.cast<float>();
  data.row(19).setConstant(0.0f);
  const Window w = ts::make_window(data, 256.0);

  const auto profile =
      inverse::band_parcel_power(w, op, lf, {Band::kDelta, Band::kAlpha, Band::kBeta});
  const auto& alpha = profile.power.at(Band::kAlpha);
  REQUIRE_FALSE(alpha.empty());

  int best_slot = -1;
  double best_power = -1.0;
  for (const auto& [slot, p] : alpha) {
    if (p > best_power) {
      best_power = p;
      best_slot = slot;
    }
  }
  CHECK(best_slot == inverse::slot_index(planted, Hemisphere::kLeft));

  // The oscillation lives in the alpha band, not its neighbors.
  CHECK(profile.power.at(Band::kBeta).at(best_slot) < 0.05 * best_power);
  CHECK(profile.power.at(Band::kDelta).at(best_slot) < 0.05 * best_power);
}

TEST_CASE("session baselines hold per-slot population moments") {
  inverse::ParcelPowerProfile a;
  a.session_id = "s1";
  a.power[Band::kAlpha] = {{0, 1.0}, {5, 4.0}};
  inverse::ParcelPowerProfile b = a;
  b.power[Band::kAlpha] = {{0, 3.0}, {5, 4.0}};
  inverse::ParcelPowerProfile c = a;
  c.power[Band::kAlpha] = {{0, 5.0}, {5, 4.0}};

  const inverse::SessionBaseline base = inverse::session_baseline({a, b, c});
  CHECK(base.session_id == "s1");
  const auto& slot0 = base.stats.at(Band::kAlpha).at(0);
  CHECK(slot0.mean == doctest::Approx(3.0));
  CHECK(slot0.std == doctest::Approx(std::sqrt(8.0 / 3.0)));  // population variance
  const auto& slot5 = base.stats.at(Band::kAlpha).at(5);
  CHECK(slot5.mean == doctest::Approx(4.0));
  CHECK(slot5.std == doctest::Approx(1e-12));  // floored for constant power
}

TEST_CASE("anatomy labels pick the largest magnitude score, lowest slot on ties") {
  inverse::SessionBaseline base;
  base.session_id = "s1";
  base.stats[Band::kAlpha] = {{2, {1.0, 1.0}}, {4, {1.0, 1.0}}, {30, {1.0, 1.0}}};

  inverse::ParcelPowerProfile prof;
  prof.session_id = "s1";

  // Tie in |z|: slots 2 and 4 both score 2.0; the lower slot wins.
  prof.power[Band::kAlpha] = {{2, 3.0}, {4, 3.0}, {30, 1.5}};
  const auto tie = inverse::label_window_anatomy(prof, base, Band::kAlpha);
  CHECK(tie.parcel_id == 2);
  CHECK(tie.hemisphere == Hemisphere::kLeft);
  CHECK(tie.z == doctest::Approx(2.0));

  // A large negative score outranks smaller positive ones.
  prof.power[Band::kAlpha] = {{2, 2.0}, {4, -4.0}, {30, 1.5}};
  const auto neg = inverse::label_window_anatomy(prof, base, Band::kAlpha);
  CHECK(neg.parcel_id == 4);
  CHECK(neg.z == doctest::Approx(-5.0));

  // Right-hemisphere slots map back to parcel and side.
  prof.power[Band::kAlpha] = {{2, 1.1}, {4, 1.2}, {30, 9.0}};
  const auto right = inverse::label_window_anatomy(prof, base, Band::kAlpha);
  CHECK(right.parcel_id == 7);
  CHECK(right.hemisphere == Hemisphere::kRight);

  // Alternative normalization modes change the score definition.
  prof.power[Band::kAlpha] = {{2, 3.0}, {4, 1.0}, {30, 1.0}};
  const auto sub = inverse::label_window_anatomy(prof, base, Band::kAlpha,
                                                 inverse::NormalizationMode::kSubtractMean);
  CHECK(sub.parcel_id == 2);
  CHECK(sub.z == doctest::Approx(2.0));
  const auto div = inverse::label_window_anatomy(prof, base, Band::kAlpha,
                                                 inverse::NormalizationMode::kDivideMean);
  CHECK(div.parcel_id == 2);
  CHECK(div.z == doctest::Approx(3.0));
}

TEST_CASE("anatomy labeling validates band and slot coverage") {
  inverse::SessionBaseline base;
  base.stats[Band::kAlpha] = {{0, {1.0, 1.0}}};
  inverse::ParcelPowerProfile prof;
  prof.power[Band::kAlpha] = {{0, 1.0}, {1, 2.0}};

  CHECK(kind_of([&] { inverse::label_window_anatomy(prof, base, Band::kBeta); }) ==
        ErrorKind::Config);
  CHECK(kind_of([&] { inverse::label_window_anatomy(prof, base, Band::kAlpha); }) ==
        ErrorKind::Config);  // slot 1 missing from the baseline
}
