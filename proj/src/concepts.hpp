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

#ifndef EEGTCAV_CONCEPTS_HPP_
#define EEGTCAV_CONCEPTS_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dsp.hpp"
#include "inverse.hpp"
#include "recording.hpp"
#include "stats.hpp"
#include "window.hpp"

namespace eegtcav::concepts {

struct ConceptDataset {
  std::string name;
  WindowSet set;  // provenance recorded in set.provenance

  std::size_t size() const { return set.size(); }
  void validate() const;
};

// Tiles every annotation span carrying `label` into non-overlapping windows.
// Spans shorter than the window length contribute nothing; zero windows
// overall is an error.
ConceptDataset build_labeled_concepts(const std::vector<EegRecording>& recordings,
                                      const std::string& label, double window_len_s,
                                      double reference_uv = dsp::kDefaultReferenceUv);

// Draws n_sets random concepts of max_examples windows each from the pool.
// Sets are pairwise disjoint when the pool is large enough, otherwise drawn
// with replacement across sets (windows within one set stay distinct).
std::vector<ConceptDataset> sample_random_concept_sets(const WindowSet& pool, int n_sets,
                                                       int max_examples, std::uint64_t seed);

struct AnatomicalOptions {
  inverse::Band band = inverse::Band::kAlpha;
  double window_len_s = 4.0;
  double trim_s = 5.0;  // dropped from both ends of each recording
  int min_examples = 40;
  double reference_uv = dsp::kDefaultReferenceUv;
  double eloreta_alpha = 1.0e-4;
  inverse::NormalizationMode normalization = inverse::NormalizationMode::kZScore;
};

struct AnatomicalConcepts {
  std::map<int, ConceptDataset> by_slot;  // keyed by inverse::slot_index
  std::map<int, bool> sparse;             // fewer than min_examples windows
};

// Per session: trim, tile, compute band power profiles and a session
// baseline, then assign each window to its winning (parcel, hemisphere).
// Sessions with fewer than two windows are skipped (no baseline).
AnatomicalConcepts build_anatomical_concepts(const std::vector<EegRecording>& recordings,
                                             const inverse::LeadField& lf,
                                             const AnatomicalOptions& options);

struct LateralizedWindow {
  std::string event_label;
  double z_left = 0.0;
  double z_right = 0.0;
};

// Paired t-test on z_left - z_right per event class.
std::map<std::string, stats::TestResult> lateralization_check(
    const std::vector<LateralizedWindow>& rows);

}  // namespace eegtcav::concepts

#endif  // EEGTCAV_CONCEPTS_HPP_
