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

#ifndef UAVMIMO_METRICS_HPP
#define UAVMIMO_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "uavmimo/core.hpp"

namespace uavmimo {

inline constexpr double kDefaultSeCap = 8.0;
inline constexpr double kCccThresholdBps = 100e3;

/// Σ over allocated PRBs of B·(1 − overhead)·min(log2(1 + SINR), cap).
inline double per_user_rate(std::span<const double> sinrs_linear, double overhead_fraction,
                            double se_cap = kDefaultSeCap, double prb_bandwidth_hz = kPrbBandwidthHz) {
  if (overhead_fraction < 0.0 || overhead_fraction >= 1.0)
    throw ArgumentError("per_user_rate: overhead fraction must lie in [0, 1)");
  double rate = 0.0;
  for (double s : sinrs_linear) {
    if (s < 0.0 || std::isnan(s)) throw ArgumentError("per_user_rate: negative SINR");
    rate += prb_bandwidth_hz * (1.0 - overhead_fraction) * std::min(std::log2(1.0 + s), se_cap);
  }
  return rate;
}

/// Percentage of rates strictly above the threshold.
inline double ccc_success_percentage(std::span<const double> rates, double threshold = kCccThresholdBps) {
  if (rates.empty()) throw AggregationError("ccc_success_percentage: no samples");
  const auto n = std::count_if(rates.begin(), rates.end(), [threshold](double r) { return r > threshold; });
  return 100.0 * static_cast<double>(n) / static_cast<double>(rates.size());
}

struct CdfPoint {
  double value;
  double probability;
  bool operator==(const CdfPoint&) const = default;
};

/// Step CDF: the i-th smallest sample (1-based) carries probability i/n.
inline std::vector<CdfPoint> empirical_cdf(std::span<const double> values) {
  if (values.empty()) throw AggregationError("empirical_cdf: no samples");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  std::vector<CdfPoint> out(v.size());
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = {v[i], static_cast<double>(i + 1) / n};
  return out;
}

/// Nearest-rank percentile: the ceil(p/100·n)-th smallest sample. The
/// 95%-likely rate is percentile(rates, 5).
inline double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw AggregationError("percentile: no samples");
  if (!(p > 0.0 && p < 100.0)) throw ArgumentError("percentile: p must lie in (0, 100)");
  std::vector<double> v(values.begin(), values.end());
  const auto n = v.size();
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(rank - 1), v.end());
  return v[rank - 1];
}

/// Neumaier-compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double mean(std::span<const double> values) {
  if (values.empty()) throw AggregationError("mean: no samples");
  CompensatedSum s;
  for (double v : values) s.add(v);
  return s.value() / static_cast<double>(values.size());
}

}  // namespace uavmimo

#endif  // UAVMIMO_METRICS_HPP
