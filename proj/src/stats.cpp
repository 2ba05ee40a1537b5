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

#include "stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "common.hpp"

namespace eegtcav::stats {

namespace {

// Midranks of the pooled sample; tied values share the average rank.
std::vector<double> midranks(const std::vector<double>& pooled) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double u_from_rank_sum(double rank_sum_a, int n_a) {
  return rank_sum_a - 0.5 * n_a * (n_a + 1);
}

bool has_ties(std::vector<double> pooled) {
  std::sort(pooled.begin(), pooled.end());
  return std::adjacent_find(pooled.begin(), pooled.end()) != pooled.end();
}

// Exact two-sided p: the probability, over all equally likely rank
// assignments, of a U at least as far from n_a*n_b/2 as the observed one.
double exact_two_sided_p(int n_a, int n_b, double u_obs) {
  const int n = n_a + n_b;
  const double mu = 0.5 * n_a * n_b;
  const double dev = std::abs(u_obs - mu);
  // Iterate over all C(n, n_a) subsets of rank positions assigned to side a.
  std::vector<int> idx(n_a);
  std::iota(idx.begin(), idx.end(), 0);
  long long total = 0, extreme = 0;
  while (true) {
    long long rank_sum = 0;
    for (int v : idx) rank_sum += v + 1;
    const double u = u_from_rank_sum(static_cast<double>(rank_sum), n_a);
    if (std::abs(u - mu) >= dev - 1e-12) ++extreme;
    ++total;
    int k = n_a - 1;
    while (k >= 0 && idx[k] == n - n_a + k) --k;
    if (k < 0) break;
    ++idx[k];
    for (int j = k + 1; j < n_a; ++j) idx[j] = idx[j - 1] + 1;
  }
  return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace

std::string method_name(TestMethod m) {
  switch (m) {
    case TestMethod::ExactEnumeration: return "exact-enumeration";
    case TestMethod::NormalApproximation: return "normal-approximation";
    case TestMethod::TDistribution: return "t-distribution";
  }
  return "unknown";
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

TestResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw Error::data("mann_whitney_u: both samples must be nonempty");
  const int n_a = static_cast<int>(a.size());
  const int n_b = static_cast<int>(b.size());
  const int n = n_a + n_b;

  std::vector<double> pooled;
  pooled.reserve(n);
  pooled.insert(pooled.end(), a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::vector<double> ranks = midranks(pooled);
  double rank_sum_a = 0.0;
  for (int i = 0; i < n_a; ++i) rank_sum_a += ranks[i];
  const double u_a = u_from_rank_sum(rank_sum_a, n_a);

  TestResult res;
  res.statistic = u_a;
  res.n_a = n_a;
  res.n_b = n_b;

  const bool ties = has_ties(pooled);
  if (!ties && n <= kMannWhitneyExactLimit) {
    res.method = TestMethod::ExactEnumeration;
    res.p_two_sided = exact_two_sided_p(n_a, n_b, u_a);
    return res;
  }

  // Normal approximation with tie correction and continuity correction.
  res.method = TestMethod::NormalApproximation;
  const double mu = 0.5 * n_a * n_b;
  double tie_term = 0.0;
  {
    std::map<double, int> counts;
    for (double v : pooled) counts[v] += 1;
    for (const auto& [value, t] : counts) {
      (void)value;
      tie_term += static_cast<double>(t) * t * t - t;
    }
  }
  const double var = (static_cast<double>(n_a) * n_b / 12.0) *
                     ((n + 1) - tie_term / (static_cast<double>(n) * (n - 1)));
  if (var <= 0.0) {
    res.p_two_sided = 1.0;  // all pooled values identical
    return res;
  }
  double dev = std::abs(u_a - mu);
  dev = std::max(0.0, dev - 0.5);  // continuity correction toward the mean
  const double z = dev / std::sqrt(var);
  res.p_two_sided = std::min(1.0, 2.0 * (1.0 - normal_cdf(z)));
  return res;
}

double bonferroni(double p, int m) {
  if (m < 1) throw Error::config("bonferroni: multiplicity m must be >= 1");
  if (p < 0.0 || p > 1.0) throw Error::config("bonferroni: p must lie in [0, 1]");
  return std::min(1.0, p * static_cast<double>(m));
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // Continued fraction (modified Lentz), converges to ~1e-15 well inside the
  // domain; the symmetric form is used when x is past the distribution bulk.
  auto betacf = [](double aa, double bb, double xx) {
    const double tiny = 1e-300;
    const double eps = 1e-15;
    const double qab = aa + bb, qap = aa + 1.0, qam = aa - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * xx / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
      const int m2 = 2 * m;
      double num = m * (bb - m) * xx / ((qam + m2) * (aa + m2));
      d = 1.0 + num * d;
      if (std::abs(d) < tiny) d = tiny;
      c = 1.0 + num / c;
      if (std::abs(c) < tiny) c = tiny;
      d = 1.0 / d;
      h *= d * c;
      num = -(aa + m) * (qab + m) * xx / ((aa + m2) * (qap + m2));
      d = 1.0 + num * d;
      if (std::abs(d) < tiny) d = tiny;
      c = 1.0 + num / c;
      if (std::abs(c) < tiny) c = tiny;
      d = 1.0 / d;
      const double del = d * c;
      h *= del;
      if (std::abs(del - 1.0) < eps) break;
    }
    return h;
  };
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df) {
  if (df <= 0.0) throw Error::numeric("student_t_two_sided: df must be positive");
  const double x = df / (df + t * t);
  return incomplete_beta(0.5 * df, 0.5, x);
}

TestResult paired_t(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error::data("paired_t: samples must have equal length");
  const int n = static_cast<int>(a.size());
  if (n < 2) throw Error::data("paired_t: need at least 2 pairs");
  std::vector<double> d(n);
  for (int i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1));

  TestResult res;
  res.method = TestMethod::TDistribution;
  res.n_a = n;
  res.n_b = n;
  if (sd == 0.0) {
    if (mean != 0.0) throw Error::numeric("paired_t: zero variance with nonzero mean difference");
    res.statistic = 0.0;
    res.p_two_sided = 1.0;
    return res;
  }
  res.statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
  res.p_two_sided = student_t_two_sided(res.statistic, static_cast<double>(n - 1));
  return res;
}

}  // namespace eegtcav::stats
