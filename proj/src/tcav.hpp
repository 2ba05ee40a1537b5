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

#ifndef EEGTCAV_TCAV_HPP_
#define EEGTCAV_TCAV_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cav.hpp"
#include "concepts.hpp"
#include "model.hpp"
#include "window.hpp"

namespace eegtcav::tcav {

// Directional derivative of the class logit along the concept direction.
// The bias of the linear probe plays no role here; only the direction does.
double sensitivity(const Eigen::VectorXd& gradient, const cav::Cav& cav);

// Fraction of strictly positive sensitivities. Zeros count as non-positive.
double tcav_score(const std::vector<double>& sensitivities);

struct TcavOptions {
  int target_class = 1;
  std::vector<model::Bottleneck> bottlenecks{model::kAllBottlenecks.begin(),
                                             model::kAllBottlenecks.end()};
  // Cap on examples drawn from each concept or random set per CAV fit.
  int max_examples = 40;
  std::uint64_t seed = 0;
  cav::CavHyper cav_hyper;
  // CAVs with held-in accuracy below this are counted but still used; the
  // count is surfaced so callers can judge probe quality.
  double weak_cav_threshold = 0.6;
  double significance_level = 0.05;
  int threads = 0;  // 0 picks the hardware concurrency.
};

struct TcavResult {
  std::string concept_id;
  int target_class = 0;
  model::Bottleneck bottleneck = model::Bottleneck::kEncoder;
  std::vector<double> concept_scores;   // one per random set
  std::vector<double> baseline_scores;  // one per random-set pair
  double mean_score = 0.0;
  double p_raw = 1.0;
  double p_corrected = 1.0;
  bool significant = false;
  bool positive = false;  // mean_score > 0.5
  int n_weak_cavs = 0;
};

// Runs the full testing procedure: for every concept and bottleneck, trains
// one CAV per random set, scores the target windows, and compares the score
// distribution against a baseline built from random-vs-random CAVs. P-values
// are two-sided Mann-Whitney U, Bonferroni-corrected across all
// concept x bottleneck hypotheses.
std::vector<TcavResult> run_tcav(const model::LhbModel& model,
                                 const WindowSet& targets,
                                 const std::vector<concepts::ConceptDataset>& concept_sets,
                                 const std::vector<concepts::ConceptDataset>& random_sets,
                                 const TcavOptions& options);

}  // namespace eegtcav::tcav

#endif  // EEGTCAV_TCAV_HPP_
