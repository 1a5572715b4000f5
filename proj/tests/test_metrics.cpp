// SPDX-License-Identifier: Apache-2.0
//
// uavmimo: system-level simulator for cellular-connected UAVs with massive MIMO
// Copyright (C) 2026 The uavmimo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <algorithm>

#include "catch_amalgamated.hpp"
#include "uavmimo/metrics.hpp"
#include "uavmimo/random.hpp"

using namespace uavmimo;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> random_values(int n, std::uint64_t seed) {
  Rng rng = make_stream(seed, StreamTag::kDrop, {0});
  std::lognormal_distribution<double> d(10.0, 2.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("per-user rate examples", "[metrics]") {
  const std::vector<double> one{1.0};
  CHECK_THAT(per_user_rate(one, 0.0, 8.0), WithinAbs(180000.0, 1e-9));
  const std::vector<double> huge{1e30};
  CHECK_THAT(per_user_rate(huge, 8.0 / 14.0, 8.0), WithinRel(180e3 * (6.0 / 14.0) * 8.0, 1e-12));
  const std::vector<double> three{1.0, 1.0, 1.0};
  CHECK_THAT(per_user_rate(three, 8.0 / 14.0), WithinAbs(231428.5714285714, 1e-6));
  CHECK(per_user_rate({}, 0.1) == 0.0);
  const std::vector<double> bad{-1.0};
  CHECK_THROWS_AS(per_user_rate(bad, 0.0), ArgumentError);
  CHECK_THROWS_AS(per_user_rate(one, 1.0), ArgumentError);
}

TEST_CASE("per-user rate is monotone in every SINR", "[metrics]") {
  Rng rng = make_stream(1, StreamTag::kDrop, {0});
  std::uniform_real_distribution<double> db(-20.0, 40.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> s(5);
    for (double& x : s) x = db_to_lin(db(rng));
    const double base = per_user_rate(s, 8.0 / 14.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      auto up = s;
      up[i] *= 1.0 + std::uniform_real_distribution<double>(0.0, 3.0)(rng);
      CHECK(per_user_rate(up, 8.0 / 14.0) >= base);
    }
  }
}

TEST_CASE("C&C success percentage", "[metrics]") {
  const std::vector<double> all{200e3, 200e3, 200e3};
  CHECK(ccc_success_percentage(all) == 100.0);
  const std::vector<double> mixed{50e3, 150e3, 250e3};
  CHECK_THAT(ccc_success_percentage(mixed), WithinAbs(200.0 / 3.0, 1e-12));
  // Strictly larger than the threshold.
  const std::vector<double> edge{100e3, 100e3 + 1e-6};
  CHECK(ccc_success_percentage(edge) == 50.0);
  CHECK_THROWS_AS(ccc_success_percentage({}), AggregationError);
}

TEST_CASE("C&C success is invariant under a monotone transform", "[metrics]") {
  const auto v = random_values(1000, 2);
  const double thr = 3e4;
  std::vector<double> t(v.size());
  const auto f = [](double x) { return std::log(x) * 7.0 + 3.0; };
  std::transform(v.begin(), v.end(), t.begin(), f);
  CHECK(ccc_success_percentage(v, thr) == ccc_success_percentage(t, f(thr)));
}

TEST_CASE("empirical CDF", "[metrics]") {
  const std::vector<double> five{5.0};
  CHECK(empirical_cdf(five) == std::vector<CdfPoint>{{5.0, 1.0}});
  const std::vector<double> four{3.0, 1.0, 4.0, 2.0};
  const auto c = empirical_cdf(four);
  CHECK(c[1].value == 2.0);
  CHECK(c[1].probability == 0.5);

  const auto v = random_values(777, 3);
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  const auto cdf = empirical_cdf(v);
  REQUIRE(cdf.size() == sorted.size());
  for (std::size_t i = 0; i < cdf.size(); ++i) {
    CHECK(cdf[i].value == sorted[i]);
    CHECK(cdf[i].probability == static_cast<double>(i + 1) / 777.0);
  }
}

TEST_CASE("nearest-rank percentile", "[metrics]") {
  const std::vector<double> flat(37, 4.25);
  for (double p : {0.1, 5.0, 50.0, 99.9}) CHECK(percentile(flat, p) == 4.25);
  std::vector<double> hundred(100);
  for (int i = 0; i < 100; ++i) hundred[i] = 100.0 - i;
  CHECK(percentile(hundred, 5.0) == 5.0);
  CHECK(percentile(hundred, 50.0) == 50.0);
  CHECK(percentile(hundred, 99.0) == 99.0);

  for (int n : {1, 2, 7, 20, 101, 999}) {
    const auto v = random_values(n, 10 + n);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (double p : {1.0, 5.0, 10.0, 25.0, 50.0, 90.0, 95.0, 99.0}) {
      // Brute-force rank scan: smallest value with at least p% of samples at or below it.
      double oracle = sorted.back();
      for (double x : sorted) {
        const auto at_or_below = std::count_if(v.begin(), v.end(), [x](double y) { return y <= x; });
        if (100.0 * static_cast<double>(at_or_below) >= p * n - 1e-9) {
          oracle = x;
          break;
        }
      }
      CHECK(percentile(v, p) == oracle);
    }
  }
  CHECK_THROWS_AS(percentile({}, 5.0), AggregationError);
  CHECK_THROWS_AS(percentile(flat, 0.0), ArgumentError);
  CHECK_THROWS_AS(percentile(flat, 100.0), ArgumentError);
}

TEST_CASE("compensated mean", "[metrics]") {
  std::vector<double> v{1e16, 1.0, -1e16, 1.0};
  CHECK(mean(v) == 0.5);
  CHECK_THROWS_AS(mean({}), AggregationError);
}
