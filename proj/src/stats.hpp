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

#ifndef EEGTCAV_STATS_HPP_
#define EEGTCAV_STATS_HPP_

#include <string>
#include <vector>

namespace eegtcav::stats {

enum class TestMethod { ExactEnumeration, NormalApproximation, TDistribution };

struct TestResult {
  double statistic = 0.0;
  double p_two_sided = 1.0;
  TestMethod method = TestMethod::NormalApproximation;
  int n_a = 0;
  int n_b = 0;
};

std::string method_name(TestMethod m);

// Two-sided Mann-Whitney U rank test. U is computed from midranks for side a.
// Exact enumeration over all C(n_a+n_b, n_a) rank assignments when
// n_a + n_b <= kExactLimit and the pooled sample is tie free; otherwise a
// normal approximation with tie and continuity correction.
inline constexpr int kMannWhitneyExactLimit = 12;
TestResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b);

// min(1, p * m). m must be >= 1.
double bonferroni(double p, int m);

// Two-sided paired t test on the differences a - b.
TestResult paired_t(const std::vector<double>& a, const std::vector<double>& b);

// Standard normal CDF.
double normal_cdf(double x);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

// Two-sided p-value of a Student-t statistic with df degrees of freedom.
double student_t_two_sided(double t, double df);

}  // namespace eegtcav::stats

#endif  // EEGTCAV_STATS_HPP_
