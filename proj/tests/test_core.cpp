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

#include <set>

#include "catch_amalgamated.hpp"
#include "uavmimo/core.hpp"
#include "uavmimo/random.hpp"

using namespace uavmimo;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("unit conversions", "[core]") {
  CHECK_THAT(db_to_lin(10.0), WithinRel(10.0, 1e-15));
  CHECK_THAT(lin_to_db(100.0), WithinAbs(20.0, 1e-12));
  CHECK_THAT(dbm_to_watt(30.0), WithinRel(1.0, 1e-15));
  CHECK_THAT(watt_to_dbm(0.001), WithinAbs(0.0, 1e-12));
  CHECK_THAT(rad_to_deg(deg_to_rad(37.5)), WithinAbs(37.5, 1e-12));
  // -174 dBm/Hz + 10log10(180e3) + 9 dB
  CHECK_THAT(watt_to_dbm(noise_power_watt(180e3, 9.0)), WithinAbs(-174.0 + 52.5527250510 + 9.0, 1e-8));
}

TEST_CASE("direction and angles round-trip", "[core]") {
  for (double az : {-170.0, -45.0, 0.0, 30.0, 150.0}) {
    for (double el : {-80.0, -10.0, 0.0, 45.0, 89.0}) {
      const Vec3 d = direction_from_angles(az, el);
      CHECK_THAT(d.norm(), WithinAbs(1.0, 1e-14));
      const AzEl back = angles_from_direction(d);
      CHECK_THAT(back.azimuth_deg, WithinAbs(az, 1e-9));
      CHECK_THAT(back.elevation_deg, WithinAbs(el, 1e-9));
    }
  }
}

TEST_CASE("config error carries the field name", "[core]") {
  try {
    throw ConfigError("phy.alpha", "must lie in [0, 1]");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "phy.alpha");
    CHECK(std::string(e.what()).find("phy.alpha") != std::string::npos);
  }
}

TEST_CASE("stream seeds are order sensitive and tag separated", "[random]") {
  const auto a = stream_seed(42, StreamTag::kDrop, {1, 2});
  CHECK(a == stream_seed(42, StreamTag::kDrop, {1, 2}));
  CHECK(a != stream_seed(42, StreamTag::kDrop, {2, 1}));
  CHECK(a != stream_seed(42, StreamTag::kSchedule, {1, 2}));
  CHECK(a != stream_seed(43, StreamTag::kDrop, {1, 2}));

  std::set<std::uint64_t> seen;
  for (std::uint64_t d = 0; d < 200; ++d)
    for (std::uint64_t c = 0; c < 57; ++c) seen.insert(stream_seed(7, StreamTag::kFullChannel, {d, c}));
  CHECK(seen.size() == 200u * 57u);
}

TEST_CASE("complex gaussian has unit power and independent parts", "[random]") {
  Rng rng = make_stream(1, StreamTag::kProjection, {0});
  ComplexGaussian g;
  const int n = 200000;
  double p = 0.0, re2 = 0.0, cross = 0.0;
  cplx m{0.0, 0.0};
  for (int i = 0; i < n; ++i) {
    const cplx z = g(rng);
    p += std::norm(z);
    re2 += z.real() * z.real();
    cross += z.real() * z.imag();
    m += z;
  }
  CHECK_THAT(p / n, WithinAbs(1.0, 0.01));
  CHECK_THAT(re2 / n, WithinAbs(0.5, 0.01));
  CHECK_THAT(cross / n, WithinAbs(0.0, 0.01));
  CHECK(std::abs(m / static_cast<double>(n)) < 0.01);
}

TEST_CASE("same stream reproduces the same draws", "[random]") {
  Rng a = make_stream(9, StreamTag::kSilentPhase, {3, 4});
  Rng b = make_stream(9, StreamTag::kSilentPhase, {3, 4});
  ComplexGaussian ga, gb;
  for (int i = 0; i < 100; ++i) CHECK(ga(a) == gb(b));
}
