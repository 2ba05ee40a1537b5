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

#include "tcav.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <utility>

#include "common.hpp"
#include "stats.hpp"

namespace eegtcav::tcav {
namespace {

// Uniformly picks `want` of `n` indices without replacement. Returned indices
// are sorted so downstream row gathers keep the original example order.
std::vector<std::size_t> pick_indices(std::size_t n, std::size_t want, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (want >= n) return idx;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < want; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(want);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(idx[r]));
  }
  return out;
}

// Activations of every window in `set`, one matrix per bottleneck with one
// row per window. A single forward pass per window feeds all bottlenecks.
std::map<model::Bottleneck, Eigen::MatrixXd> collect_activations(
    const model::LhbModel& m, const WindowSet& set,
    const std::vector<model::Bottleneck>& bottlenecks, int threads) {
  std::map<model::Bottleneck, Eigen::MatrixXd> acts;
  const auto n = static_cast<Eigen::Index>(set.size());
  for (model::Bottleneck b : bottlenecks) {
    const int dim = m.activation_dim(b, static_cast<int>(set.windows.front().num_samples()));
    acts[b] = Eigen::MatrixXd(n, dim);
  }
  parallel_for(set.size(), threads, [&](std::size_t w) {
    const auto out = m.forward(set.windows[w].data);
    for (model::Bottleneck b : bottlenecks) {
      acts.at(b).row(static_cast<Eigen::Index>(w)) = out.at(b).template cast<double>();
    }
  });
  return acts;
}

// Trains a CAV on an equal-sized positive/negative split and scores the
// target gradients. Returns the TCAV score plus the probe accuracy.
struct CavRun {
  double score = 0.0;
  double accuracy = 0.0;
};

CavRun fit_and_score(const Eigen::MatrixXd& pos, const Eigen::MatrixXd& neg,
                     const Eigen::MatrixXd& gradients, const cav::CavHyper& base_hyper,
                     std::uint64_t pair_salt, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(std::min(pos.rows(), neg.rows()));
  const Eigen::MatrixXd p =
      pos.rows() > static_cast<Eigen::Index>(n)
          ? take_rows(pos, pick_indices(static_cast<std::size_t>(pos.rows()), n,
                                        mix_seed(seed, pair_salt * 2 + 1)))
          : pos;
  const Eigen::MatrixXd q =
      neg.rows() > static_cast<Eigen::Index>(n)
          ? take_rows(neg, pick_indices(static_cast<std::size_t>(neg.rows()), n,
                                        mix_seed(seed, pair_salt * 2)))
          : neg;
  cav::CavHyper hyper = base_hyper;
  hyper.seed = mix_seed(seed, pair_salt);
  const cav::Cav probe = cav::train_cav(p, q, hyper);
  Eigen::VectorXd s = gradients * probe.vector;
  std::vector<double> sens(s.data(), s.data() + s.size());
  return {tcav_score(sens), probe.accuracy};
}

}  // namespace

double sensitivity(const Eigen::VectorXd& gradient, const cav::Cav& cav) {
  if (gradient.size() != cav.vector.size()) {
    throw Error::config("sensitivity: gradient dimension " + std::to_string(gradient.size()) +
                        " does not match CAV dimension " + std::to_string(cav.vector.size()));
  }
  return gradient.dot(cav.vector);
}

double tcav_score(const std::vector<double>& sensitivities) {
  if (sensitivities.empty()) throw Error::data("tcav score of an empty sensitivity set");
  std::size_t positive = 0;
  for (double s : sensitivities) {
    if (s > 0.0) ++positive;
  }
  return static_cast<double>(positive) / static_cast<double>(sensitivities.size());
}

std::vector<TcavResult> run_tcav(const model::LhbModel& model, const WindowSet& targets,
                                 const std::vector<concepts::ConceptDataset>& concept_sets,
                                 const std::vector<concepts::ConceptDataset>& random_sets,
                                 const TcavOptions& options) {
  if (targets.size() == 0) throw Error::data("tcav requires at least one target window");
  if (concept_sets.empty()) throw Error::config("tcav requires at least one concept set");
  if (random_sets.size() < 2) {
    throw Error::config("tcav requires at least two random sets, got " +
                        std::to_string(random_sets.size()));
  }
  if (options.bottlenecks.empty()) throw Error::config("tcav requires at least one bottleneck");
  if (options.target_class < 0 || options.target_class >= model.config().num_classes) {
    throw Error::config("target class " + std::to_string(options.target_class) +
                        " out of range for a " + std::to_string(model.config().num_classes) +
                        "-class model");
  }
  if (options.max_examples < 2) {
    throw Error::config("max_examples must be at least 2 per side of a CAV fit");
  }
  for (const auto& ds : concept_sets) {
    if (ds.size() < 2) throw Error::data("concept set '" + ds.name + "' has fewer than 2 windows");
  }
  for (const auto& ds : random_sets) {
    if (ds.size() < 2) throw Error::data("random set '" + ds.name + "' has fewer than 2 windows");
  }

  const auto& bns = options.bottlenecks;
  const std::size_t n_concepts = concept_sets.size();
  const std::size_t n_random = random_sets.size();
  const int m_hypotheses = static_cast<int>(n_concepts * bns.size());
  const auto cap = static_cast<std::size_t>(options.max_examples);

  // Gradients of the target-class logit at every bottleneck, one row per
  // target window.
  std::map<model::Bottleneck, Eigen::MatrixXd> grads;
  const int target_len = static_cast<int>(targets.windows.front().num_samples());
  for (model::Bottleneck b : bns) {
    grads[b] = Eigen::MatrixXd(static_cast<Eigen::Index>(targets.size()),
                               model.activation_dim(b, target_len));
  }
  parallel_for(targets.size(), options.threads, [&](std::size_t w) {
    for (model::Bottleneck b : bns) {
      grads.at(b).row(static_cast<Eigen::Index>(w)) =
          model.grad_wrt_bottleneck(targets.windows[w].data, b, options.target_class)
              .cast<double>();
    }
  });

  // Activations of every concept and random set, subsampled to the cap once
  // up front so each CAV fit sees a stable pool.
  std::vector<std::map<model::Bottleneck, Eigen::MatrixXd>> concept_acts(n_concepts);
  std::vector<std::map<model::Bottleneck, Eigen::MatrixXd>> random_acts(n_random);
  for (std::size_t c = 0; c < n_concepts; ++c) {
    WindowSet sub = concept_sets[c].set;
    const auto keep =
        pick_indices(sub.windows.size(), cap, mix_seed(options.seed, 0x100 + c));
    if (keep.size() < sub.windows.size()) {
      std::vector<Window> kept;
      kept.reserve(keep.size());
      for (std::size_t i : keep) kept.push_back(sub.windows[i]);
      sub.windows = std::move(kept);
    }
    concept_acts[c] = collect_activations(model, sub, bns, options.threads);
  }
  for (std::size_t i = 0; i < n_random; ++i) {
    WindowSet sub = random_sets[i].set;
    const auto keep =
        pick_indices(sub.windows.size(), cap, mix_seed(options.seed, 0x10000 + i));
    if (keep.size() < sub.windows.size()) {
      std::vector<Window> kept;
      kept.reserve(keep.size());
      for (std::size_t i2 : keep) kept.push_back(sub.windows[i2]);
      sub.windows = std::move(kept);
    }
    random_acts[i] = collect_activations(model, sub, bns, options.threads);
  }

  // Baseline score distribution per bottleneck: CAVs trained on neighbouring
  // random-set pairs, shared by every concept.
  std::map<model::Bottleneck, std::vector<double>> baseline;
  for (std::size_t li = 0; li < bns.size(); ++li) {
    const model::Bottleneck b = bns[li];
    std::vector<double> scores(n_random, 0.0);
    parallel_for(n_random, options.threads, [&](std::size_t i) {
      const std::size_t j = (i + 1) % n_random;
      const std::uint64_t salt = 0x200000ULL + li * 4096ULL + i;
      try {
        scores[i] = fit_and_score(random_acts[i].at(b), random_acts[j].at(b), grads.at(b),
                                  options.cav_hyper, salt, options.seed)
                        .score;
      } catch (const Error& e) {
        throw Error(e.kind(), "baseline '" + random_sets[i].name + "' vs '" +
                                  random_sets[j].name + "' at " + model::bottleneck_name(b) +
                                  ": " + e.what());
      }
    });
    baseline[b] = std::move(scores);
  }

  std::vector<TcavResult> results;
  results.reserve(n_concepts * bns.size());
  for (std::size_t c = 0; c < n_concepts; ++c) {
    for (std::size_t li = 0; li < bns.size(); ++li) {
      const model::Bottleneck b = bns[li];
      std::vector<double> scores(n_random, 0.0);
      std::vector<double> accs(n_random, 0.0);
      parallel_for(n_random, options.threads, [&](std::size_t i) {
        const std::uint64_t salt = ((c + 1) * 41ULL + li) * 9173ULL + i;
        try {
          const CavRun run = fit_and_score(concept_acts[c].at(b), random_acts[i].at(b),
                                           grads.at(b), options.cav_hyper, salt, options.seed);
          scores[i] = run.score;
          accs[i] = run.accuracy;
        } catch (const Error& e) {
          throw Error(e.kind(), "concept '" + concept_sets[c].name + "' at " +
                                    model::bottleneck_name(b) + " vs '" + random_sets[i].name +
                                    "': " + e.what());
        }
      });

      TcavResult r;
      r.concept_id = concept_sets[c].name;
      r.target_class = options.target_class;
      r.bottleneck = b;
      r.concept_scores = scores;
      r.baseline_scores = baseline.at(b);
      r.mean_score =
          std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(n_random);
      const stats::TestResult test = stats::mann_whitney_u(r.concept_scores, r.baseline_scores);
      r.p_raw = test.p_two_sided;
      r.p_corrected = stats::bonferroni(test.p_two_sided, m_hypotheses);
      r.significant = r.p_corrected < options.significance_level;
      r.positive = r.mean_score > 0.5;
      r.n_weak_cavs = static_cast<int>(
          std::count_if(accs.begin(), accs.end(),
                        [&](double a) { return a < options.weak_cav_threshold; }));
      results.push_back(std::move(r));
    }
  }
  return results;
}

}  // namespace eegtcav::tcav
