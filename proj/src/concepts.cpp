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

#include "concepts.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "common.hpp"

namespace eegtcav::concepts {

void ConceptDataset::validate() const {
  if (name.empty()) throw Error::config("concept dataset has no name");
  if (set.windows.empty()) throw Error::data("concept '" + name + "' is empty");
  set.validate();
  if (!set.provenance.is_object() || set.provenance.empty()) {
    throw Error::config("concept '" + name + "' has no provenance");
  }
}

ConceptDataset build_labeled_concepts(const std::vector<EegRecording>& recordings,
                                      const std::string& label, double window_len_s,
                                      double reference_uv) {
  if (label.empty()) throw Error::config("build_labeled_concepts: empty label");
  ConceptDataset out;
  out.name = label;
  double rate = 0.0;
  for (const EegRecording& rec : recordings) {
    std::vector<AnnotationSpan> matching;
    for (const AnnotationSpan& span : rec.annotations) {
      if (span.label == label) matching.push_back(span);
    }
    if (matching.empty()) continue;
    std::vector<Window> windows =
        dsp::epoch_spans_and_scale(rec, matching, window_len_s, reference_uv);
    if (rate == 0.0) rate = rec.sampling_rate_hz;
    for (Window& w : windows) out.set.windows.push_back(std::move(w));
  }
  if (out.set.windows.empty()) {
    throw Error::data("concept '" + label + "' matched no complete windows");
  }
  out.set.channel_names = window_channel_names();
  out.set.sampling_rate_hz = rate;
  out.set.window_len_s = window_len_s;
  out.set.provenance = {{"kind", "labeled"}, {"label", label}};
  out.validate();
  return out;
}

std::vector<ConceptDataset> sample_random_concept_sets(const WindowSet& pool, int n_sets,
                                                       int max_examples, std::uint64_t seed) {
  pool.validate();
  if (n_sets < 1) throw Error::config("sample_random_concept_sets: n_sets must be positive");
  if (max_examples < 1) {
    throw Error::config("sample_random_concept_sets: max_examples must be positive");
  }
  const std::size_t pool_size = pool.windows.size();
  if (pool_size < static_cast<std::size_t>(max_examples)) {
    throw Error::data("sample_random_concept_sets: pool of " + std::to_string(pool_size) +
                      " windows is smaller than max_examples " + std::to_string(max_examples));
  }

  std::vector<std::vector<std::size_t>> picks(static_cast<std::size_t>(n_sets));
  const bool disjoint =
      pool_size >= static_cast<std::size_t>(n_sets) * static_cast<std::size_t>(max_examples);
  if (disjoint) {
    std::vector<std::size_t> perm(pool_size);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int s = 0; s < n_sets; ++s) {
      auto begin = perm.begin() + static_cast<std::ptrdiff_t>(s) * max_examples;
      picks[static_cast<std::size_t>(s)].assign(begin, begin + max_examples);
    }
  } else {
    // Sets may overlap, but draws within one set stay distinct.
    for (int s = 0; s < n_sets; ++s) {
      std::vector<std::size_t> perm(pool_size);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(s)));
      std::shuffle(perm.begin(), perm.end(), rng);
      picks[static_cast<std::size_t>(s)].assign(perm.begin(), perm.begin() + max_examples);
    }
  }

  std::vector<ConceptDataset> out;
  out.reserve(static_cast<std::size_t>(n_sets));
  for (int s = 0; s < n_sets; ++s) {
    ConceptDataset ds;
    ds.name = "random-" + std::to_string(s);
    ds.set.channel_names = pool.channel_names;
    ds.set.sampling_rate_hz = pool.sampling_rate_hz;
    ds.set.window_len_s = pool.window_len_s;
    ds.set.provenance = {{"kind", "random"},
                         {"seed", seed},
                         {"set_index", s},
                         {"disjoint", disjoint}};
    for (std::size_t idx : picks[static_cast<std::size_t>(s)]) {
      ds.set.windows.push_back(pool.windows[idx]);
    }
    ds.validate();
    out.push_back(std::move(ds));
  }
  return out;
}

AnatomicalConcepts build_anatomical_concepts(const std::vector<EegRecording>& recordings,
                                             const inverse::LeadField& lf,
                                             const AnatomicalOptions& options) {
  if (options.window_len_s <= 0.0 || options.trim_s < 0.0) {
    throw Error::config("build_anatomical_concepts: bad window or trim length");
  }
  inverse::InverseOperator inv = inverse::eloreta(lf, options.eloreta_alpha);
  const std::vector<inverse::Band> bands = {options.band};

  AnatomicalConcepts result;
  double rate = 0.0;
  for (const EegRecording& rec : recordings) {
    const double usable = rec.duration_s() - 2.0 * options.trim_s;
    const int n_windows = usable > 0.0 ? static_cast<int>(usable / options.window_len_s) : 0;
    if (n_windows < 2) continue;  // no baseline without at least two windows

    const Eigen::Index step =
        static_cast<Eigen::Index>(std::llround(options.window_len_s * rec.sampling_rate_hz));
    const Eigen::Index first =
        static_cast<Eigen::Index>(std::llround(options.trim_s * rec.sampling_rate_hz));
    std::vector<Window> windows;
    std::vector<inverse::ParcelPowerProfile> profiles;
    windows.reserve(static_cast<std::size_t>(n_windows));
    for (int i = 0; i < n_windows; ++i) {
      Window w = dsp::cut_window(rec, first + static_cast<Eigen::Index>(i) * step,
                                 options.window_len_s, options.reference_uv);
      inverse::ParcelPowerProfile p = inverse::band_parcel_power(w, inv, lf, bands);
      p.window_index = i;
      windows.push_back(std::move(w));
      profiles.push_back(std::move(p));
    }
    inverse::SessionBaseline baseline = inverse::session_baseline(profiles);
    if (rate == 0.0) rate = rec.sampling_rate_hz;

    for (int i = 0; i < n_windows; ++i) {
      inverse::AnatomyLabel label = inverse::label_window_anatomy(
          profiles[static_cast<std::size_t>(i)], baseline, options.band, options.normalization);
      const int slot = inverse::slot_index(label.parcel_id, label.hemisphere);
      ConceptDataset& ds = result.by_slot[slot];
      if (ds.name.empty()) {
        ds.name = "anat-" + inverse::band_name(options.band) + "-" + inverse::slot_name(slot);
        ds.set.channel_names = window_channel_names();
        ds.set.window_len_s = options.window_len_s;
        ds.set.provenance = {
            {"kind", "anatomical"},
            {"band", inverse::band_name(options.band)},
            {"parcel_id", label.parcel_id},
            {"hemisphere", label.hemisphere == inverse::Hemisphere::kLeft ? "L" : "R"}};
      }
      ds.set.windows.push_back(std::move(windows[static_cast<std::size_t>(i)]));
    }
  }

  for (auto& [slot, ds] : result.by_slot) {
    ds.set.sampling_rate_hz = rate;
    const bool sparse = ds.set.windows.size() < static_cast<std::size_t>(options.min_examples);
    ds.set.provenance["sparse"] = sparse;
    result.sparse[slot] = sparse;
    ds.validate();
  }
  return result;
}

std::map<std::string, stats::TestResult> lateralization_check(
    const std::vector<LateralizedWindow>& rows) {
  if (rows.empty()) throw Error::data("lateralization_check: no windows");
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_class;
  for (const LateralizedWindow& row : rows) {
    if (row.event_label.empty()) {
      throw Error::config("lateralization_check: window without an event label");
    }
    by_class[row.event_label].first.push_back(row.z_left);
    by_class[row.event_label].second.push_back(row.z_right);
  }
  std::map<std::string, stats::TestResult> out;
  for (const auto& [label, pair] : by_class) {
    out[label] = stats::paired_t(pair.first, pair.second);
  }
  return out;
}

}  // namespace eegtcav::concepts
