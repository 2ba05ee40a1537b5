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

#include "inverse.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

#include "common.hpp"
#include "dsp.hpp"

namespace eegtcav::inverse {
namespace {

constexpr double kStdFloor = 1.0e-12;

// Pseudo-inverse of a symmetric matrix via eigendecomposition; eigenvalues
// below a relative cutoff are treated as zero.
Eigen::MatrixXd sym_pinv(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  if (eig.info() != Eigen::Success) {
    throw Error::numeric("eloreta: eigendecomposition failed");
  }
  const Eigen::VectorXd& vals = eig.eigenvalues();
  const double vmax = vals.cwiseAbs().maxCoeff();
  if (!(vmax > 0.0) || !std::isfinite(vmax)) {
    throw Error::numeric("eloreta: singular sensor covariance");
  }
  const double cutoff = vmax * 1.0e-12;
  Eigen::VectorXd inv = vals;
  for (Eigen::Index i = 0; i < inv.size(); ++i) {
    inv[i] = std::abs(vals[i]) > cutoff ? 1.0 / vals[i] : 0.0;
  }
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

std::string slot_name(int slot) {
  const bool left = slot < kNumParcels;
  const int parcel = left ? slot : slot - kNumParcels;
  return "parcel" + std::to_string(parcel) + (left ? "L" : "R");
}

void LeadField::validate() const {
  if (gain.rows() < 2) throw Error::data("lead field: need at least 2 sensors");
  if (gain.cols() < 1) throw Error::data("lead field: need at least 1 source");
  if (!gain.allFinite()) throw Error::data("lead field: gain contains non-finite values");
  if (static_cast<Eigen::Index>(sensor_names.size()) != gain.rows()) {
    throw Error::data("lead field: sensor name count does not match gain rows");
  }
  if (static_cast<Eigen::Index>(parcel_of.size()) != gain.cols()) {
    throw Error::data("lead field: parcel map does not cover every source");
  }
  for (const SourceParcel& p : parcel_of) {
    if (p.parcel_id < 0 || p.parcel_id >= kNumParcels) {
      throw Error::data("lead field: parcel id out of range 0..22");
    }
  }
  for (Eigen::Index j = 0; j < gain.cols(); ++j) {
    if (gain.col(j).norm() == 0.0) {
      throw Error::data("lead field: source column " + std::to_string(j) + " is all zero");
    }
  }
}

std::vector<std::uint8_t> serialize_lead_field(const LeadField& lf) {
  lf.validate();
  nlohmann::json header;
  header["sensor_names"] = lf.sensor_names;
  header["num_sources"] = lf.gain.cols();
  std::vector<int> parcels;
  std::vector<std::string> hemis;
  parcels.reserve(lf.parcel_of.size());
  hemis.reserve(lf.parcel_of.size());
  for (const SourceParcel& p : lf.parcel_of) {
    parcels.push_back(p.parcel_id);
    hemis.emplace_back(p.hemisphere == Hemisphere::kLeft ? "L" : "R");
  }
  header["parcel_id"] = parcels;
  header["hemisphere"] = hemis;
  const std::string js = header.dump();

  std::vector<std::uint8_t> out;
  const std::uint32_t len = static_cast<std::uint32_t>(js.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((len >> (8 * i)) & 0xff));
  out.insert(out.end(), js.begin(), js.end());
  for (Eigen::Index r = 0; r < lf.gain.rows(); ++r) {
    for (Eigen::Index c = 0; c < lf.gain.cols(); ++c) {
      const float v = static_cast<float>(lf.gain(r, c));
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff));
      }
    }
  }
  return out;
}

LeadField deserialize_lead_field(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4) throw Error::data("lead field file truncated (missing header length)");
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  if (bytes.size() < 4 + static_cast<std::size_t>(len)) {
    throw Error::data("lead field file truncated (header shorter than declared)");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 4, bytes.begin() + 4 + len);
  } catch (const nlohmann::json::exception& e) {
    throw Error::data(std::string("lead field header is not valid JSON: ") + e.what());
  }

  LeadField lf;
  try {
    lf.sensor_names = header.at("sensor_names").get<std::vector<std::string>>();
    const Eigen::Index n = header.at("num_sources").get<Eigen::Index>();
    std::vector<int> parcels = header.at("parcel_id").get<std::vector<int>>();
    std::vector<std::string> hemis = header.at("hemisphere").get<std::vector<std::string>>();
    if (static_cast<Eigen::Index>(parcels.size()) != n ||
        static_cast<Eigen::Index>(hemis.size()) != n) {
      throw Error::data("lead field header: parcel/hemisphere arrays do not match num_sources");
    }
    lf.parcel_of.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      lf.parcel_of[static_cast<std::size_t>(i)].parcel_id = parcels[static_cast<std::size_t>(i)];
      const std::string& h = hemis[static_cast<std::size_t>(i)];
      if (h == "L") {
        lf.parcel_of[static_cast<std::size_t>(i)].hemisphere = Hemisphere::kLeft;
      } else if (h == "R") {
        lf.parcel_of[static_cast<std::size_t>(i)].hemisphere = Hemisphere::kRight;
      } else {
        throw Error::data("lead field header: hemisphere must be 'L' or 'R'");
      }
    }
    const Eigen::Index m = static_cast<Eigen::Index>(lf.sensor_names.size());
    const std::size_t need = static_cast<std::size_t>(m) * static_cast<std::size_t>(n) * 4;
    if (bytes.size() - 4 - len < need) {
      throw Error::data("lead field file truncated (gain payload incomplete)");
    }
    lf.gain.resize(m, n);
    std::size_t pos = 4 + len;
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = 0; c < n; ++c) {
        std::uint32_t bits = 0;
        for (int i = 0; i < 4; ++i) {
          bits |= static_cast<std::uint32_t>(bytes[pos + static_cast<std::size_t>(i)]) << (8 * i);
        }
        float v;
        std::memcpy(&v, &bits, 4);
        lf.gain(r, c) = static_cast<double>(v);
        pos += 4;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error::data(std::string("lead field header missing fields: ") + e.what());
  }
  lf.validate();
  return lf;
}

void save_lead_field(const LeadField& lf, const std::string& path) {
  std::vector<std::uint8_t> bytes = serialize_lead_field(lf);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error::config("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error::config("failed to write lead field to '" + path + "'");
}

LeadField load_lead_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error::data("cannot open lead field file '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_lead_field(bytes);
}

InverseOperator eloreta(const LeadField& lf, double alpha, double tol, int max_iter) {
  lf.validate();
  if (alpha <= 0.0) throw Error::config("eloreta: alpha must be positive");
  if (tol <= 0.0) throw Error::config("eloreta: tol must be positive");
  if (max_iter < 1) throw Error::config("eloreta: max_iter must be positive");

  const Eigen::Index m = lf.num_sensors();
  const Eigen::Index n = lf.num_sources();
  const Eigen::MatrixXd& k = lf.gain;
  const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(m, m) -
                            Eigen::MatrixXd::Constant(m, m, 1.0 / static_cast<double>(m));

  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  InverseOperator op;
  op.alpha = alpha;
  for (int iter = 1; iter <= max_iter; ++iter) {
    Eigen::MatrixXd kw = k * w.cwiseInverse().asDiagonal();  // K W^-1
    Eigen::MatrixXd mc = sym_pinv(kw * k.transpose() + alpha * h);
    Eigen::VectorXd w_new(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double q = k.col(j).dot(mc * k.col(j));
      if (!(q >= 0.0) || !std::isfinite(q)) {
        throw Error::numeric("eloreta: weight update left the positive domain");
      }
      w_new[j] = std::sqrt(q);
      if (w_new[j] <= 0.0) {
        throw Error::numeric("eloreta: source " + std::to_string(j) + " received zero weight");
      }
    }
    const double rel = ((w_new - w).cwiseAbs().array() / w.array()).maxCoeff();
    w = w_new;
    op.iterations_used = iter;
    if (rel < tol) {
      op.converged = true;
      break;
    }
  }

  Eigen::MatrixXd kw = k * w.cwiseInverse().asDiagonal();
  Eigen::MatrixXd mc = sym_pinv(kw * k.transpose() + alpha * h);
  op.resolvent = w.cwiseInverse().asDiagonal() * k.transpose() * mc;
  if (!op.resolvent.allFinite()) throw Error::numeric("eloreta: resolvent is not finite");
  return op;
}

BandRange band_range(Band band) {
  switch (band) {
    case Band::kDelta:
      return {0.5, 4.0};
    case Band::kTheta:
      return {4.0, 8.0};
    case Band::kAlpha:
      return {8.0, 12.0};
    case Band::kBeta:
      return {12.0, 30.0};
    case Band::kGamma:
      return {30.0, 70.0};
  }
  throw Error::config("invalid frequency band");
}

const std::string& band_name(Band band) {
  static const std::array<std::string, 5> names = {"delta", "theta", "alpha", "beta", "gamma"};
  return names[static_cast<std::size_t>(band)];
}

Band band_from_name(const std::string& name) {
  for (Band b : kAllBands) {
    if (band_name(b) == name) return b;
  }
  throw Error::config("unknown frequency band '" + name +
                      "' (expected delta, theta, alpha, beta or gamma)");
}

ParcelPowerProfile band_parcel_power(const Window& window, const InverseOperator& inv,
                                     const LeadField& lf, const std::vector<Band>& bands) {
  window.validate();
  const Eigen::Index eeg_rows = window.data.rows() - 1;  // amplitude channel excluded
  if (lf.num_sensors() != eeg_rows) {
    throw Error::config("band_parcel_power: lead field has " +
                        std::to_string(lf.num_sensors()) + " sensors, window has " +
                        std::to_string(eeg_rows) + " EEG channels");
  }
  if (inv.resolvent.cols() != lf.num_sensors() || inv.resolvent.rows() != lf.num_sources()) {
    throw Error::config("band_parcel_power: inverse operator does not match the lead field");
  }
  if (bands.empty()) throw Error::config("band_parcel_power: no bands requested");

  // Restore microvolts; per-window scaling would distort cross-window
  // comparisons against the session baseline.
  Eigen::MatrixXd x = window.data.topRows(eeg_rows).cast<double>() * window.scale_uv;

  // Sources per slot, for the parcel mean.
  std::map<int, std::vector<Eigen::Index>> slot_sources;
  for (Eigen::Index j = 0; j < lf.num_sources(); ++j) {
    const SourceParcel& p = lf.parcel_of[static_cast<std::size_t>(j)];
    slot_sources[slot_index(p.parcel_id, p.hemisphere)].push_back(j);
  }

  ParcelPowerProfile profile;
  profile.session_id = window.session_id;
  const double nyq = window.sampling_rate_hz / 2.0;
  for (Band band : bands) {
    BandRange range = band_range(band);
    if (range.high_hz >= nyq) {
      throw Error::config("band_parcel_power: band " + band_name(band) +
                          " exceeds the Nyquist frequency");
    }
    int taps = dsp::auto_num_taps(dsp::FilterKind::Bandpass, {range.low_hz, range.high_hz},
                                  window.sampling_rate_hz);
    // Filters longer than the window cannot be applied; cap below the window
    // length (keeping the tap count odd).
    const int cap = static_cast<int>(window.num_samples()) - 1;
    if (taps > cap) taps = (cap % 2 == 1) ? cap : cap - 1;
    if (taps < 3) throw Error::numeric("band_parcel_power: window too short to filter");
    dsp::FirFilter filt = dsp::design_firwin(dsp::FilterKind::Bandpass,
                                             {range.low_hz, range.high_hz},
                                             window.sampling_rate_hz, taps);
    Eigen::MatrixXd xb = dsp::apply_filter(x, filt);
    Eigen::MatrixXd s = inv.resolvent * xb;
    Eigen::VectorXd source_power = s.array().square().rowwise().mean().matrix();
    std::map<int, double>& out = profile.power[band];
    for (const auto& [slot, sources] : slot_sources) {
      double acc = 0.0;
      for (Eigen::Index j : sources) acc += source_power[j];
      out[slot] = acc / static_cast<double>(sources.size());
    }
  }
  return profile;
}

SessionBaseline session_baseline(const std::vector<ParcelPowerProfile>& profiles) {
  if (profiles.size() < 2) {
    throw Error::data("session_baseline: need at least 2 windows");
  }
  const std::string& session = profiles.front().session_id;
  for (const ParcelPowerProfile& p : profiles) {
    if (p.session_id != session) {
      throw Error::config("session_baseline: profiles come from different sessions");
    }
  }

  SessionBaseline base;
  base.session_id = session;
  const double n = static_cast<double>(profiles.size());
  for (const auto& [band, slots] : profiles.front().power) {
    for (const auto& [slot, first_power] : slots) {
      (void)first_power;
      double sum = 0.0;
      double sum2 = 0.0;
      for (const ParcelPowerProfile& p : profiles) {
        auto band_it = p.power.find(band);
        if (band_it == p.power.end() || band_it->second.find(slot) == band_it->second.end()) {
          throw Error::config("session_baseline: profiles disagree on covered slots");
        }
        const double v = band_it->second.at(slot);
        sum += v;
        sum2 += v * v;
      }
      const double mean = sum / n;
      const double var = std::max(0.0, sum2 / n - mean * mean);
      SessionBaseline::Moments m;
      m.mean = mean;
      m.std = std::max(std::sqrt(var), kStdFloor);
      base.stats[band][slot] = m;
    }
  }
  return base;
}

AnatomyLabel label_window_anatomy(const ParcelPowerProfile& profile,
                                  const SessionBaseline& baseline, Band band,
                                  NormalizationMode mode) {
  auto prof_it = profile.power.find(band);
  if (prof_it == profile.power.end()) {
    throw Error::config("label_window_anatomy: requested band missing from the profile");
  }
  auto base_it = baseline.stats.find(band);
  if (base_it == baseline.stats.end()) {
    throw Error::config("label_window_anatomy: requested band missing from the baseline");
  }

  bool found = false;
  int best_slot = 0;
  double best_abs = -1.0;
  double best_z = 0.0;
  for (const auto& [slot, p] : prof_it->second) {  // map iterates in slot order
    auto m_it = base_it->second.find(slot);
    if (m_it == base_it->second.end()) {
      throw Error::config("label_window_anatomy: baseline does not cover slot " +
                          slot_name(slot));
    }
    const SessionBaseline::Moments& m = m_it->second;
    double z = 0.0;
    switch (mode) {
      case NormalizationMode::kZScore:
        z = (p - m.mean) / m.std;
        break;
      case NormalizationMode::kSubtractMean:
        z = p - m.mean;
        break;
      case NormalizationMode::kDivideMean:
        z = p / std::max(m.mean, kStdFloor);
        break;
    }
    // Strict > keeps the first (lowest) slot on exact ties.
    if (std::abs(z) > best_abs) {
      best_abs = std::abs(z);
      best_slot = slot;
      best_z = z;
      found = true;
    }
  }
  if (!found) throw Error::config("label_window_anatomy: profile has no slots for the band");

  AnatomyLabel label;
  label.parcel_id = best_slot % kNumParcels;
  label.hemisphere = best_slot < kNumParcels ? Hemisphere::kLeft : Hemisphere::kRight;
  label.z = best_z;
  return label;
}

}  // namespace eegtcav::inverse
