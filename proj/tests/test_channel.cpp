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

#include <sstream>

#include "catch_amalgamated.hpp"
#include "uavmimo/arrays.hpp"
#include "uavmimo/channel.hpp"

using namespace uavmimo;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

LinkState make_link(double gain_db, double k_db) {
  LinkState l;
  l.element_gain_dbi = 0.0;
  l.path_loss_db = -gain_db;
  l.shadowing_db = 0.0;
  l.rician_k_db = k_db;
  return l;
}

}  // namespace

TEST_CASE("los probability examples", "[channel]") {
  CHECK(los_probability(300, 2000, UserKind::kUav) == 1.0);
  for (double h : {1.5, 10.0, 22.5, 50.0, 300.0}) {
    CHECK(los_probability(h, 0.0, UserKind::kUav) == 1.0);
    if (h <= 22.5) CHECK(los_probability(h, 0.0, UserKind::kGue) == 1.0);
  }
  const double p = los_probability(1.5, 5000, UserKind::kGue);
  CHECK(p < 0.05);
  CHECK_THAT(p, WithinAbs(18.0 / 5000.0, 1e-12));
}

TEST_CASE("los probability is non-increasing in distance", "[channel]") {
  for (UserKind kind : {UserKind::kGue, UserKind::kUav}) {
    for (double h : {1.5, 15.0, 22.5, 30.0, 60.0, 100.0, 150.0, 300.0}) {
      if (kind == UserKind::kGue && h > 22.5) continue;
      double prev = 1.0;
      for (double d = 0.0; d <= 5000.0; d += 5.0) {
        const double p = los_probability(h, d, kind);
        CHECK(p >= 0.0);
        CHECK(p <= prev + 1e-12);
        prev = p;
      }
    }
  }
}

TEST_CASE("los probability rejects invalid inputs", "[channel]") {
  CHECK_THROWS_AS(los_probability(150, -1.0, UserKind::kUav), ArgumentError);
  CHECK_THROWS_AS(los_probability(400, 10.0, UserKind::kUav), ArgumentError);
}

TEST_CASE("path loss slope and golden value", "[channel]") {
  const LinkGeometry a{300.0, 500.0, 150.0, 25.0};
  CHECK_THAT(path_loss(a, true, 2.0, UserKind::kUav), WithinAbs(93.39794000867204, 1e-9));

  LinkGeometry b = a;
  b.d3d = 1000.0;
  CHECK_THAT(path_loss(b, true, 2.0, UserKind::kUav) - path_loss(a, true, 2.0, UserKind::kUav),
             WithinAbs(22.0 * std::log10(2.0), 1e-9));

  // Terrestrial LoS below the breakpoint is single slope as well.
  const LinkGeometry g1{50.0, std::hypot(50.0, 23.5), 1.5, 25.0};
  const LinkGeometry g2{100.0, 2.0 * g1.d3d, 1.5, 25.0};
  CHECK_THAT(path_loss(g2, true, 2.0, UserKind::kGue) - path_loss(g1, true, 2.0, UserKind::kGue),
             WithinAbs(6.62, 0.01));
}

TEST_CASE("nlos path loss is never below los", "[channel]") {
  const LinkGeometry g{std::sqrt(500.0 * 500.0 - 23.5 * 23.5), 500.0, 1.5, 25.0};
  CHECK(path_loss(g, false, 2.0, UserKind::kGue) >= path_loss(g, true, 2.0, UserKind::kGue));
  for (double d = 20.0; d < 3000.0; d += 37.0) {
    for (double h : {1.5, 10.0, 40.0, 120.0, 300.0}) {
      const LinkGeometry x{d, std::hypot(d, h - 25.0), h, 25.0};
      const UserKind kind = h > 22.5 ? UserKind::kUav : UserKind::kGue;
      CHECK(path_loss(x, true, 2.0, kind) > 0.0);
      CHECK(path_loss(x, false, 2.0, kind) >= path_loss(x, true, 2.0, kind) - 1e-9);
    }
  }
}

TEST_CASE("shadowing statistics", "[channel]") {
  Rng rng = make_stream(1, StreamTag::kLargeScale, {0});
  for (int i = 0; i < 100; ++i) CHECK(shadowing_sample(0.0, rng) == 0.0);
  const int n = 100000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = shadowing_sample(4.0, rng);
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double sd = std::sqrt(s2 / n - mean * mean);
  CHECK(sd >= 3.9);
  CHECK(sd <= 4.1);
  CHECK(shadowing_sigma_db(true, UserKind::kUav, 300.0) < shadowing_sigma_db(true, UserKind::kGue, 1.5));
  CHECK_THAT(shadowing_sigma_db(true, UserKind::kUav, 300.0), WithinAbs(0.6406412611225426, 1e-12));
}

TEST_CASE("rician K grows linearly with UAV height", "[channel]") {
  const ChannelParams p;
  CHECK(rician_k_db(true, UserKind::kGue, 1.5, p) == 9.0);
  CHECK(rician_k_db(true, UserKind::kUav, 1.5, p) == 9.0);
  CHECK_THAT(rician_k_db(true, UserKind::kUav, 300.0, p), WithinAbs(20.0, 1e-12));
  CHECK_THAT(rician_k_db(true, UserKind::kUav, 150.75, p), WithinAbs(14.5, 1e-12));
  CHECK(std::isinf(rician_k_db(false, UserKind::kUav, 300.0, p)));
}

TEST_CASE("element pattern", "[channel]") {
  const ElementPattern p;
  CHECK_THAT(element_gain(0, 0, p), WithinAbs(8.0, 1e-12));
  CHECK_THAT(element_gain(32.5, 0, p), WithinAbs(5.0, 1e-12));
  CHECK_THAT(element_gain(-32.5, 0, p), WithinAbs(5.0, 1e-12));
  CHECK_THAT(element_gain(0, 32.5, p), WithinAbs(5.0, 1e-12));
  CHECK_THAT(element_gain(65, 0, p), WithinAbs(8.0 - 12.0, 1e-12));
  CHECK_THAT(element_gain(180, 0, p), WithinAbs(8.0 - 30.0, 1e-12));
  CHECK_THAT(element_gain(120, 60, p), WithinAbs(8.0 - 30.0, 1e-12));
}

TEST_CASE("steering vector", "[channel]") {
  const std::vector<Vec3> planar = detail::planar_grid(4, 4, 0.5, false);
  const CVec a = steering_vector(planar, 0.0, 0.0);
  for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - cplx(1.0, 0.0)) < 1e-12);

  const std::vector<Vec3> pair{{0, 0, 0}, {0, 0, 0.5}};
  const CVec b = steering_vector(pair, 0.0, 90.0);
  CHECK(std::abs(b[0] - cplx(1.0, 0.0)) < 1e-12);
  CHECK(std::abs(b[1] - cplx(-1.0, 0.0)) < 1e-12);

  Rng rng = make_stream(2, StreamTag::kDrop, {0});
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec3> pos(7);
    for (Vec3& p : pos) p = {u(rng), u(rng), u(rng)};
    const double az = 60.0 * u(rng), el = 25.0 * u(rng);
    const CVec s = steering_vector(pos, az, el);
    const double ca = std::cos(deg_to_rad(el));
    for (std::size_t n = 0; n < pos.size(); ++n) {
      const double phase = 2.0 * kPi *
                           (pos[n].x * ca * std::cos(deg_to_rad(az)) + pos[n].y * ca * std::sin(deg_to_rad(az)) +
                            pos[n].z * std::sin(deg_to_rad(el)));
      CHECK(std::abs(s[n] - std::exp(cplx(0.0, phase))) < 1e-9);
    }
  }
}

TEST_CASE("channel in the pure LoS limit is rank one", "[channel]") {
  const auto bs = detail::planar_grid(4, 2, 0.5, false);
  const auto ue = detail::planar_grid(2, 2, 0.5, false);
  const CVec a_bs = steering_vector(bs, 20.0, -5.0);
  const CVec a_ue = steering_vector(ue, -160.0, 5.0);
  const LinkState l = make_link(-80.0, 400.0);
  Rng rng = make_stream(3, StreamTag::kFullChannel, {0});
  const CMat h = draw_channel(l, a_bs, a_ue, rng);
  const CMat outer = a_bs * a_ue.transpose();
  const cplx ratio = h(0, 0) / outer(0, 0);
  CHECK_THAT(std::abs(ratio), WithinRel(std::sqrt(l.gain_lin()), 1e-9));
  CHECK((h - ratio * outer).norm() < 1e-9 * h.norm());
}

TEST_CASE("rayleigh channel covariance is g times identity", "[channel]") {
  const CVec a_bs = CVec::Ones(4);
  const CVec a_ue = CVec::Ones(2);
  const LinkState l = make_link(-70.0, -std::numeric_limits<double>::infinity());
  const double g = l.gain_lin();
  Rng rng = make_stream(4, StreamTag::kFullChannel, {0});
  CMat r = CMat::Zero(8, 8);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const CMat h = draw_channel(l, a_bs, a_ue, rng);
    const Eigen::Map<const CVec> v(h.data(), h.size());
    r.noalias() += v * v.adjoint();
  }
  r /= static_cast<double>(n) * g;
  for (int i = 0; i < 8; ++i) {
    CHECK_THAT(r(i, i).real(), WithinAbs(1.0, 0.05));
    for (int j = 0; j < 8; ++j)
      if (i != j) CHECK(std::abs(r(i, j)) < 0.05);
  }
}

TEST_CASE("per-entry mean power equals the large-scale gain for any K", "[channel]") {
  const auto bs = detail::planar_grid(2, 2, 0.5, false);
  const CVec a_bs = steering_vector(bs, 10.0, 3.0);
  const CVec a_ue = CVec::Ones(1);
  for (double k_db : {-std::numeric_limits<double>::infinity(), 0.0, 9.0, 20.0}) {
    const LinkState l = make_link(-90.0, k_db);
    Rng rng = make_stream(5, StreamTag::kFullChannel, {static_cast<std::uint64_t>(k_db + 100)});
    Eigen::VectorXd p = Eigen::VectorXd::Zero(4);
    const int n = 10000;
    for (int i = 0; i < n; ++i) p += draw_channel(l, a_bs, a_ue, rng).col(0).cwiseAbs2();
    p /= n * l.gain_lin();
    for (int i = 0; i < 4; ++i) CHECK_THAT(p[i], WithinAbs(1.0, 0.05));
    CHECK_THAT(p.sum(), WithinAbs(4.0, 0.2));  // Frobenius norm² = n_bs · n_ue · g
  }
}

TEST_CASE("same stream draws identical channel bytes", "[channel]") {
  const CVec a_bs = CVec::Ones(8);
  const CVec a_ue = CVec::Ones(1);
  const LinkState l = make_link(-100.0, 9.0);
  Rng r1 = make_stream(6, StreamTag::kFullChannel, {1, 2, 3});
  Rng r2 = make_stream(6, StreamTag::kFullChannel, {1, 2, 3});
  const CMat h1 = draw_channel(l, a_bs, a_ue, r1);
  const CMat h2 = draw_channel(l, a_bs, a_ue, r2);
  CHECK(std::memcmp(h1.data(), h2.data(), sizeof(cplx) * h1.size()) == 0);
}

TEST_CASE("channel dump has one row per link", "[channel]") {
  std::vector<LinkState> links(2);
  links[1].sector_id = 4;
  links[1].user_id = 9;
  links[1].d2d = 12.5;
  links[1].los = true;
  links[1].path_loss_db = 88.25;
  links[1].shadowing_db = -1.5;
  std::ostringstream os;
  write_channel_dump(os, links);
  std::string line;
  std::istringstream is(os.str());
  std::getline(is, line);
  CHECK(line == "sector_id,user_id,d2d_m,los,path_loss_db,shadowing_db");
  std::getline(is, line);
  std::getline(is, line);
  CHECK(line == "4,9,12.500000,1,88.250000,-1.500000");
}
