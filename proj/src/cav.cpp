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

#include "cav.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "common.hpp"

namespace eegtcav::cav {

Cav train_cav(const Eigen::MatrixXd& concept_acts, const Eigen::MatrixXd& random_acts,
              const CavHyper& hyper) {
  if (concept_acts.rows() < 2 || random_acts.rows() < 2) {
    throw Error::data("train_cav: need at least 2 rows per side");
  }
  if (concept_acts.cols() != random_acts.cols()) {
    throw Error::config("train_cav: concept and random activations differ in dimension");
  }
  if (hyper.regularization_alpha < 0.0) throw Error::config("train_cav: alpha must be >= 0");
  if (hyper.epochs < 1) throw Error::config("train_cav: epochs must be >= 1");

  const Eigen::Index nc = concept_acts.rows();
  const Eigen::Index nr = random_acts.rows();
  const Eigen::Index n = nc + nr;
  const Eigen::Index d = concept_acts.cols();

  Eigen::MatrixXd x(n, d);
  x.topRows(nc) = concept_acts;
  x.bottomRows(nr) = random_acts;
  Eigen::VectorXd y(n);
  y.head(nc).setOnes();
  y.tail(nr).setConstant(-1.0);

  // Standardize over the pooled training rows.
  Eigen::VectorXd mean = x.colwise().mean().transpose();
  Eigen::MatrixXd z = x.rowwise() - mean.transpose();
  Eigen::VectorXd stddev = z.array().square().colwise().mean().sqrt().matrix().transpose();
  stddev = stddev.cwiseMax(1.0e-12);
  z = (z.array().rowwise() / stddev.transpose().array()).matrix();

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  std::mt19937_64 rng(hyper.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  long step = 1;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index i : order) {
      const double eta = hyper.base_learning_rate / std::sqrt(static_cast<double>(step));
      w *= (1.0 - eta * hyper.regularization_alpha);
      const double margin = y[i] * (w.dot(z.row(i)) + b);
      if (margin < 1.0) {
        w += eta * y[i] * z.row(i).transpose();
        b += eta * y[i];
      }
      ++step;
    }
  }

  // Orient so concept rows score higher on average.
  Eigen::VectorXd scores = z * w;
  scores.array() += b;
  const double mean_c = scores.head(nc).mean();
  const double mean_r = scores.tail(nr).mean();
  if (mean_c <= mean_r) {
    w = -w;
    b = -b;
    scores = -scores;
  }

  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pred = scores[i] > 0.0 ? 1.0 : -1.0;
    if (pred == y[i]) ++correct;
  }

  // Map back to raw activation coordinates before normalizing.
  Eigen::VectorXd w_raw = (w.array() / stddev.array()).matrix();
  const double b_raw = b - (w.array() * mean.array() / stddev.array()).sum();
  const double norm = w_raw.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error::numeric("train_cav: training produced a degenerate direction");
  }

  Cav out;
  out.vector = w_raw / norm;
  out.bias = b_raw / norm;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return out;
}

}  // namespace eegtcav::cav
