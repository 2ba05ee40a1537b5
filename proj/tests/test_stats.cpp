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

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "common.hpp"
#include "doctest.h"
#include "stats.hpp"

using eegtcav::Error;
using eegtcav::ErrorKind;
namespace stats = eegtcav::stats;

namespace {

// Reference two-sided exact p for tie-free samples: enumerate every way of
// choosing which pooled ranks belong to side a and count U values at least
// as extreme as the observed one.
double brute_force_exact_p(const std::vector<double>& a, const std::vector<double>& b) {
  const int na = static_cast<int>(a.size());
  const int nb = static_cast<int>(b.size());
  const int n = na + nb;
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());

  // Observed U for side a: pairs (x in a, y in b) with x > y.
  double u_obs = 0.0;
  for (double x : a)
    for (double y : b) u_obs += x > y ? 1.0 : 0.0;

  long total = 0, at_most = 0, at_least = 0;
  std::vector<int> pick(static_cast<std::size_t>(n), 0);
  std::fill(pick.begin(), pick.begin() + na, 1);
  std::sort(pick.begin(), pick.end());
  do {
    // With ranks 1..n assigned by sorted order, U = R_a - na(na+1)/2.
    long rank_sum = 0;
    for (int i = 0; i < n; ++i) {
      if (pick[static_cast<std::size_t>(i)]) rank_sum += i + 1;
    }
    const double u = static_cast<double>(rank_sum) - na * (na + 1) / 2.0;
    ++total;
    if (u <= u_obs) ++at_most;
    if (u >= u_obs) ++at_least;
  } while (std::next_permutation(pick.begin(), pick.end()));

  const double lo = static_cast<double>(at_most) / static_cast<double>(total);
  const double hi = static_cast<double>(at_least) / static_cast<double>(total);
  return std::min(1.0, 2.0 * std::min(lo, hi));
}

}  // namespace

TEST_CASE("mann-whitney exact examples") {
  auto r = stats::mann_whitney_u({1, 2, 3}, {4, 5, 6});
  CHECK(r.statistic == doctest::Approx(0.0));
  CHECK(r.p_two_sided == doctest::Approx(0.1));
  CHECK(r.method == stats::TestMethod::ExactEnumeration);
  CHECK(r.n_a == 3);
  CHECK(r.n_b == 3);

  r = stats::mann_whitney_u({5}, {1, 2, 3});
  CHECK(r.statistic == doctest::Approx(3.0));
  CHECK(r.p_two_sided == doctest::Approx(0.5));
  CHECK(r.method == stats::TestMethod::ExactEnumeration);
}

TEST_CASE("mann-whitney full ties fall back to midranks") {
  const auto r = stats::mann_whitney_u({1, 2}, {1, 2});
  CHECK(r.statistic == doctest::Approx(2.0));  // n_a * n_b / 2
  CHECK(r.p_two_sided == doctest::Approx(1.0));
  CHECK(r.method == stats::TestMethod::NormalApproximation);
}

TEST_CASE("mann-whitney empty side is a data error") {
  CHECK_THROWS_AS(stats::mann_whitney_u({}, {1.0}), Error);
  try {
    stats::mann_whitney_u({1.0}, {});
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Data);
  }
}

TEST_CASE("mann-whitney exact p matches brute-force enumeration") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int na = 1 + static_cast<int>(rng() % 5);
    const int nb = 1 + static_cast<int>(rng() % 5);
    std::vector<double> a, b;
    for (int i = 0; i < na; ++i) a.push_back(dist(rng));
    for (int i = 0; i < nb; ++i) b.push_back(dist(rng));
    const auto r = stats::mann_whitney_u(a, b);
    REQUIRE(r.method == stats::TestMethod::ExactEnumeration);
    CHECK(r.p_two_sided == doctest::Approx(brute_force_exact_p(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("mann-whitney symmetry: swapping sides mirrors U and keeps p") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a, b;
    for (int i = 0; i < 6; ++i) a.push_back(dist(rng));
    for (int i = 0; i < 9; ++i) b.push_back(dist(rng));
    const auto r1 = stats::mann_whitney_u(a, b);
    const auto r2 = stats::mann_whitney_u(b, a);
    CHECK(r1.statistic + r2.statistic ==
          doctest::Approx(static_cast<double>(a.size() * b.size())));
    CHECK(r1.p_two_sided == doctest::Approx(r2.p_two_sided).epsilon(1e-12));
  }
}

TEST_CASE("mann-whitney shift invariance") {
  const std::vector<double> a = {0.3, 1.7, 2.2, 5.0};
  const std::vector<double> b = {0.9, 1.1, 4.2};
  const auto r1 = stats::mann_whitney_u(a, b);
  std::vector<double> a2 = a, b2 = b;
  for (double& v : a2) v += 123.5;
  for (double& v : b2) v += 123.5;
  const auto r2 = stats::mann_whitney_u(a2, b2);
  CHECK(r1.p_two_sided == doctest::Approx(r2.p_two_sided).epsilon(1e-12));
  CHECK(r1.statistic == doctest::Approx(r2.statistic));
}

TEST_CASE("mann-whitney exact agrees with normal approximation for 6 vs 6") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> a, b;
    for (int i = 0; i < 6; ++i) a.push_back(dist(rng));
    for (int i = 0; i < 6; ++i) b.push_back(dist(rng) + 0.4);
    const auto exact = stats::mann_whitney_u(a, b);
    REQUIRE(exact.method == stats::TestMethod::ExactEnumeration);
    // Force the approximation path by adding a far-away pair to both sides,
    // which preserves the rank ordering structure only loosely; instead
    // compare against the documented bound using a 13-sample variant is not
    // possible, so recompute the approximation directly from the statistic.
    const double n1 = 6, n2 = 6;
    const double mu = n1 * n2 / 2.0;
    const double sigma = std::sqrt(n1 * n2 * (n1 + n2 + 1) / 12.0);
    const double z = (std::abs(exact.statistic - mu) - 0.5) / sigma;
    const double approx_p = std::min(1.0, 2.0 * (1.0 - stats::normal_cdf(std::max(z, 0.0))));
    CHECK(std::abs(exact.p_two_sided - approx_p) < 0.05);
  }
}

TEST_CASE("mann-whitney large samples use the normal approximation") {
  std::vector<double> a, b;
  for (int i = 0; i < 15; ++i) {
    a.push_back(i);
    b.push_back(i + 0.5);
  }
  const auto r = stats::mann_whitney_u(a, b);
  CHECK(r.method == stats::TestMethod::NormalApproximation);
  // scipy.stats.mannwhitneyu(a, b, method="asymptotic"): U=105, p=0.7715512.
  CHECK(r.statistic == doctest::Approx(105.0));
  CHECK(r.p_two_sided == doctest::Approx(0.7715511878155722).epsilon(1e-9));
}

TEST_CASE("bonferroni identities") {
  CHECK(stats::bonferroni(0.01, 5) == doctest::Approx(0.05));
  CHECK(stats::bonferroni(0.3, 5) == doctest::Approx(1.0));
  CHECK(stats::bonferroni(0.05, 1) == doctest::Approx(0.05));
  CHECK(stats::bonferroni(0.0, 1000) == doctest::Approx(0.0));
  CHECK_THROWS_AS(stats::bonferroni(0.05, 0), Error);
}

TEST_CASE("paired t examples") {
  // d = [1, -1]: zero mean difference.
  auto r = stats::paired_t({2, 1}, {1, 2});
  CHECK(r.statistic == doctest::Approx(0.0));
  CHECK(r.p_two_sided == doctest::Approx(1.0));
  CHECK(r.method == stats::TestMethod::TDistribution);

  // d = [1, 2, 3]: scipy.stats.ttest_rel gives t=3.4641016, p=0.0741799.
  r = stats::paired_t({2, 4, 6}, {1, 2, 3});
  CHECK(r.statistic == doctest::Approx(3.4641016151377544).epsilon(1e-9));
  CHECK(r.p_two_sided == doctest::Approx(0.0741799002274485).epsilon(1e-6));

  // d = [0.5, 1.5, 2.0, 3.0]: scipy gives t=3.3626912, p=0.0436462.
  r = stats::paired_t({0.5, 1.5, 2.0, 3.0}, {0, 0, 0, 0});
  CHECK(r.statistic == doctest::Approx(3.36269122990683).epsilon(1e-9));
  CHECK(r.p_two_sided == doctest::Approx(0.0436462350407736).epsilon(1e-6));
}

TEST_CASE("paired t degenerate differences") {
  // Constant nonzero difference: no spread to test against.
  CHECK_THROWS_AS(stats::paired_t({2, 3, 4}, {1, 2, 3}), Error);
  try {
    stats::paired_t({2, 3, 4}, {1, 2, 3});
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numeric);
  }
  // All-zero differences: t = 0, p = 1.
  const auto r = stats::paired_t({1, 2, 3}, {1, 2, 3});
  CHECK(r.statistic == doctest::Approx(0.0));
  CHECK(r.p_two_sided == doctest::Approx(1.0));
}

TEST_CASE("paired t validates lengths") {
  CHECK_THROWS_AS(stats::paired_t({1, 2}, {1}), Error);
  CHECK_THROWS_AS(stats::paired_t({1}, {1}), Error);
}

TEST_CASE("paired t shift invariance") {
  const std::vector<double> a = {1.2, 3.4, 2.2, 5.1};
  const std::vector<double> b = {0.7, 2.9, 2.5, 3.3};
  std::vector<double> a2 = a, b2 = b;
  for (double& v : a2) v += 55.0;
  for (double& v : b2) v += 55.0;
  const auto r1 = stats::paired_t(a, b);
  const auto r2 = stats::paired_t(a2, b2);
  CHECK(r1.p_two_sided == doctest::Approx(r2.p_two_sided).epsilon(1e-12));
}

TEST_CASE("student t p-values against reference points") {
  // 2 * scipy.stats.t.sf(3.4641016, 2) = 0.0741799.
  CHECK(stats::student_t_two_sided(3.4641016, 2.0) ==
        doctest::Approx(0.0741799).epsilon(1e-6));
  CHECK(stats::student_t_two_sided(0.0, 5.0) == doctest::Approx(1.0));
  CHECK(stats::student_t_two_sided(-3.4641016, 2.0) ==
        doctest::Approx(0.0741799).epsilon(1e-6));
}

TEST_CASE("normal cdf reference points") {
  CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(stats::normal_cdf(1.959963985) == doctest::Approx(0.975).epsilon(1e-9));
  CHECK(stats::normal_cdf(-1.959963985) == doctest::Approx(0.025).epsilon(1e-7));
}

TEST_CASE("p-values always land in [0, 1]") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> a, b;
    const int na = 2 + static_cast<int>(rng() % 20);
    const int nb = 2 + static_cast<int>(rng() % 20);
    for (int i = 0; i < na; ++i) a.push_back(dist(rng));
    for (int i = 0; i < nb; ++i) b.push_back(dist(rng));
    const auto r = stats::mann_whitney_u(a, b);
    CHECK(r.p_two_sided >= 0.0);
    CHECK(r.p_two_sided <= 1.0);
  }
}
