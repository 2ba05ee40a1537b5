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

#ifndef EEGTCAV_INVERSE_HPP_
#define EEGTCAV_INVERSE_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "window.hpp"

namespace eegtcav::inverse {

inline constexpr int kNumParcels = 23;  // per hemisphere

enum class Hemisphere { kLeft = 0, kRight = 1 };

struct SourceParcel {
  int parcel_id = 0;  // 0..22
  Hemisphere hemisphere = Hemisphere::kLeft;
};

// Slot ordering for (parcel, hemisphere) pairs: all left-hemisphere parcels
// first, then right, each by ascending parcel id. Ties in labeling resolve
// toward the lower slot.
inline int slot_index(int parcel_id, Hemisphere h) {
  return (h == Hemisphere::kLeft ? 0 : kNumParcels) + parcel_id;
}
std::string slot_name(int slot);

struct LeadField {
  Eigen::MatrixXd gain;                    // [M sensors x N sources], fixed orientation
  std::vector<std::string> sensor_names;   // M entries
  std::vector<SourceParcel> parcel_of;     // N entries

  Eigen::Index num_sensors() const { return gain.rows(); }
  Eigen::Index num_sources() const { return gain.cols(); }
  void validate() const;
};

// Lead-field file: u32 little-endian JSON header length, JSON header (sensor
// names, parcel map, hemisphere map), then the gain matrix as 32-bit
// little-endian floats, row-major [M x N].
std::vector<std::uint8_t> serialize_lead_field(const LeadField& lf);
LeadField deserialize_lead_field(const std::vector<std::uint8_t>& bytes);
void save_lead_field(const LeadField& lf, const std::string& path);
LeadField load_lead_field(const std::string& path);

struct InverseOperator {
  Eigen::MatrixXd resolvent;  // [N x M]
  double alpha = 1.0e-4;
  int iterations_used = 0;
  bool converged = false;
};

// Iterative eLORETA weights for fixed-orientation sources: w_i = 1 initially,
// then w_i <- sqrt(k_i' Mc k_i) with Mc the pseudo-inverse of
// K W^-1 K' + alpha * H, H the average-reference centering matrix. Stops when
// the largest relative weight change drops below tol.
InverseOperator eloreta(const LeadField& lf, double alpha = 1.0e-4, double tol = 1.0e-6,
                        int max_iter = 100);

enum class Band { kDelta = 0, kTheta = 1, kAlpha = 2, kBeta = 3, kGamma = 4 };

inline constexpr std::array<Band, 5> kAllBands = {Band::kDelta, Band::kTheta, Band::kAlpha,
                                                  Band::kBeta, Band::kGamma};

struct BandRange {
  double low_hz = 0.0;
  double high_hz = 0.0;
};

BandRange band_range(Band band);  // delta 0.5-4, theta 4-8, alpha 8-12, beta 12-30, gamma 30-70
const std::string& band_name(Band band);
Band band_from_name(const std::string& name);

struct ParcelPowerProfile {
  std::string session_id;
  int window_index = 0;
  // power[band][slot] = mean-square source power averaged over the parcel.
  std::map<Band, std::map<int, double>> power;
};

// Band-limited parcel power for one window: the amplitude channel is dropped,
// the 19 EEG rows are restored to microvolts, bandpass-filtered per band,
// projected through the resolvent, and squared source power is averaged per
// parcel.
ParcelPowerProfile band_parcel_power(const Window& window, const InverseOperator& inv,
                                     const LeadField& lf, const std::vector<Band>& bands);

struct SessionBaseline {
  std::string session_id;
  struct Moments {
    double mean = 0.0;
    double std = 0.0;  // population, floored at 1e-12
  };
  std::map<Band, std::map<int, Moments>> stats;
};

SessionBaseline session_baseline(const std::vector<ParcelPowerProfile>& profiles);

enum class NormalizationMode {
  kZScore = 0,       // (p - mean) / std, the default
  kSubtractMean = 1,
  kDivideMean = 2,
};

struct AnatomyLabel {
  int parcel_id = 0;
  Hemisphere hemisphere = Hemisphere::kLeft;
  double z = 0.0;  // signed score at the winning slot
};

// Winner over all (parcel, hemisphere) slots of the band by absolute
// normalized deviation from baseline; ties resolve to the lower slot index.
AnatomyLabel label_window_anatomy(const ParcelPowerProfile& profile,
                                  const SessionBaseline& baseline, Band band,
                                  NormalizationMode mode = NormalizationMode::kZScore);

}  // namespace eegtcav::inverse

#endif  // EEGTCAV_INVERSE_HPP_
