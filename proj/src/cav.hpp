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

#ifndef EEGTCAV_CAV_HPP_
#define EEGTCAV_CAV_HPP_

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "model.hpp"

namespace eegtcav::cav {

struct CavHyper {
  double regularization_alpha = 0.1;  // L2
  int epochs = 50;
  double base_learning_rate = 0.01;  // inverse-scaling schedule: base / sqrt(step)
  std::uint64_t seed = 0;
};

// Unit normal of the hyperplane separating concept activations from random
// activations at one bottleneck, expressed in raw activation coordinates.
struct Cav {
  model::Bottleneck bottleneck = model::Bottleneck::kEncoder;
  Eigen::VectorXd vector;
  double bias = 0.0;
  double accuracy = 0.0;  // held-in training accuracy
  std::string concept_id;
  std::string random_set_id;

  double score(const Eigen::Ref<const Eigen::VectorXd>& activation) const {
    return vector.dot(activation) + bias;
  }
};

// Hinge-loss + L2 SGD on standardized features (mean/std over the pooled
// rows). The hyperplane is oriented so concept rows score positive, mapped
// back to raw coordinates and normalized to unit length. Rows are examples.
Cav train_cav(const Eigen::MatrixXd& concept_acts, const Eigen::MatrixXd& random_acts,
              const CavHyper& hyper);

}  // namespace eegtcav::cav

#endif  // EEGTCAV_CAV_HPP_
