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
#include "uavmimo/links.hpp"

using namespace uavmimo;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double kTxDbm = 46.0;

UserPopulation single_user(UserKind kind, Vec3 pos, bool indoor = false) {
  UserPopulation pop;
  User u;
  u.kind = kind;
  u.position = pos;
  u.indoor = indoor;
  pop.users.push_back(u);
  return pop;
}

// Reference RSRP recomputed from scratch for one link, given the table's
// random LoS state and shadowing.
double rsrp_oracle(const NetworkLayout& l, int sector, const User& u, const LinkState& drawn) {
  const Vec2 p{u.position.x, u.position.y};
  Vec2 bs = l.site_positions[sector / 3];
  for (const Vec2& img : l.wraparound_images[sector / 3])
    if (norm(p - img) < norm(p - bs)) bs = img;
  const Vec3 d{p.x - bs.x, p.y - bs.y, u.position.z - l.bs_height};
  const LinkGeometry geo{norm(p - bs), d.norm(), u.position.z, l.bs_height};
  double pl = path_loss(geo, drawn.los, 2.0, u.kind) + (u.indoor ? 20.0 : 0.0);

  const double az = deg_to_rad(l.sector_azimuth(sector));
  const double tilt = deg_to_rad(12.0);
  const Vec3 g = d.normalized();
  const double x1 = g.x * std::cos(az) + g.y * std::sin(az);
  const double y1 = -g.x * std::sin(az) + g.y * std::cos(az);
  const Vec3 loc{x1 * std::cos(tilt) - g.z * std::sin(tilt), y1, x1 * std::sin(tilt) + g.z * std::cos(tilt)};
  const double eaz = rad_to_deg(std::atan2(loc.y, loc.x));
  const double eel = rad_to_deg(std::asin(loc.z));
  const double a_v = std::min(12.0 * (eel / 65.0) * (eel / 65.0), 30.0);
  const double a_h = std::min(12.0 * (eaz / 65.0) * (eaz / 65.0), 30.0);
  const double elem = 8.0 - std::min(a_v + a_h, 30.0);

  // 16 co-phased elements, 2 co-located columns of 8 at half-wavelength.
  cplx af{0.0, 0.0};
  for (int pol = 0; pol < 2; ++pol)
    for (int r = 0; r < 8; ++r) af += std::exp(cplx(0.0, 2.0 * kPi * (r - 3.5) * 0.5 * loc.z)) / 4.0;
  const double k = drawn.los ? db_to_lin(rician_k_db(true, u.kind, u.position.z, ChannelParams{})) : 0.0;
  const double beam = k / (k + 1.0) * std::norm(af) + 1.0 / (k + 1.0);
  return kTxDbm + elem - pl - drawn.shadowing_db + lin_to_db(beam);
}

}  // namespace

TEST_CASE("link table matches an independent RSRP evaluation", "[links]") {
  const NetworkLayout l = build_layout(1, 500, 25);
  Rng rng = make_stream(1, StreamTag::kDrop, {0});
  const UserPopulation pop = drop_users(l, 4, 2, HeightSpec::uniform(1.5, 300), rng);
  const LinkTable t = build_link_table(l, pop, ChannelParams{}, su_panel(), kTxDbm, 1, 0);
  for (int s = 0; s < t.n_sectors; ++s) {
    for (const User& u : pop.users) {
      const LinkState& link = t.at(s, u.id);
      CHECK(link.d3d >= link.d2d);
      CHECK(link.path_loss_db > 0.0);
      if (u.kind == UserKind::kUav && u.position.z > 100.0) CHECK(link.los);
      CHECK_THAT(t.rsrp(s, u.id), WithinAbs(rsrp_oracle(l, s, u, link), 1e-9));
    }
  }
}

TEST_CASE("co-located sectors share LoS state and shadowing", "[links]") {
  const NetworkLayout l = build_layout(1, 500, 25);
  Rng rng = make_stream(2, StreamTag::kDrop, {0});
  const UserPopulation pop = drop_users(l, 5, 0, HeightSpec::fixed(150), rng);
  const LinkTable t = build_link_table(l, pop, ChannelParams{}, su_panel(), kTxDbm, 2, 0);
  for (int site = 0; site < 7; ++site) {
    for (const User& u : pop.users) {
      for (int k = 1; k < 3; ++k) {
        CHECK(t.at(3 * site + k, u.id).los == t.at(3 * site, u.id).los);
        CHECK(t.at(3 * site + k, u.id).shadowing_db == t.at(3 * site, u.id).shadowing_db);
      }
    }
  }
}

TEST_CASE("association of a boresight ground user", "[links]") {
  // 100 m from site 0 on the boresight of sector 0; the next sector pointing
  // at it sits 400 m further along the same line, beyond the ring.
  const NetworkLayout l = build_layout(1, 500, 25);
  const Vec2 dir{std::cos(deg_to_rad(30.0)), std::sin(deg_to_rad(30.0))};
  const UserPopulation pop = single_user(UserKind::kGue, {100.0 * dir.x, 100.0 * dir.y, 1.5});
  ChannelParams flat;
  flat.shadowing = false;
  const LinkTable t = build_link_table(l, pop, flat, su_panel(), kTxDbm, 3, 0);
  const AssociationMap m = associate(pop, l, t);
  CHECK(m.serving_sector[0] == 0);
  CHECK(m.users_of(0) == std::vector<int>{0});
  for (int s = 1; s < t.n_sectors; ++s) CHECK(t.rsrp(0, 0) > t.rsrp(s, 0));
}

TEST_CASE("high UAVs can associate with a far site", "[links]") {
  const NetworkLayout l = build_layout(2, 500, 25);
  int far = 0;
  for (std::uint64_t drop = 0; drop < 100; ++drop) {
    const UserPopulation pop = single_user(UserKind::kUav, {5.0, 5.0, 300.0});
    const LinkTable t = build_link_table(l, pop, ChannelParams{}, su_panel(), kTxDbm, 4, drop);
    const AssociationMap m = associate(pop, l, t);
    far += NetworkLayout::site_of(m.serving_sector[0]) != 0;
  }
  CHECK(far > 0);
}

TEST_CASE("association is invariant under a global RSRP offset", "[links]") {
  const NetworkLayout l = build_layout(1, 500, 25);
  Rng rng = make_stream(5, StreamTag::kDrop, {0});
  const UserPopulation pop = drop_users(l, 10, 2, HeightSpec::uniform(1.5, 300), rng);
  LinkTable t = build_link_table(l, pop, ChannelParams{}, su_panel(), kTxDbm, 5, 0);
  const AssociationMap a = associate(pop, l, t);
  for (double& r : t.rsrp_dbm) r += 17.25;
  CHECK(associate(pop, l, t).serving_sector == a.serving_sector);
}

TEST_CASE("association ties go to the lowest sector id", "[links]") {
  const NetworkLayout l = build_layout(0, 500, 25);
  const UserPopulation pop = single_user(UserKind::kGue, {50.0, 50.0, 1.5});
  LinkTable t = build_link_table(l, pop, ChannelParams{}, su_panel(), kTxDbm, 6, 0);
  std::fill(t.rsrp_dbm.begin(), t.rsrp_dbm.end(), -70.0);
  CHECK(associate(pop, l, t).serving_sector[0] == 0);
  t.rsrp_dbm[t.index(0, 0)] = -71.0;
  CHECK(associate(pop, l, t).serving_sector[0] == 1);
}

TEST_CASE("a table that misses links is an internal error", "[links]") {
  const NetworkLayout l = build_layout(0, 500, 25);
  const UserPopulation pop = single_user(UserKind::kGue, {50.0, 50.0, 1.5});
  LinkTable t = build_link_table(l, pop, ChannelParams{}, su_panel(), kTxDbm, 7, 0);
  t.rsrp_dbm.pop_back();
  CHECK_THROWS_AS(associate(pop, l, t), InternalError);
}

TEST_CASE("serving path losses are invariant under a lattice translation", "[links]") {
  const NetworkLayout l = build_layout(2, 500, 25);
  Rng rng = make_stream(8, StreamTag::kDrop, {0});
  const UserPopulation pop = drop_users(l, 2, 1, HeightSpec::uniform(1.5, 300), rng);
  const LinkTable t = build_link_table(l, pop, ChannelParams{}, su_panel(), kTxDbm, 8, 0);
  const AssociationMap m = associate(pop, l, t);

  for (const Vec2& shift : l.wrap_shifts) {
    UserPopulation moved = pop;
    for (User& u : moved.users) {
      u.position.x += shift.x;
      u.position.y += shift.y;
    }
    const LinkTable tm = build_link_table(l, moved, ChannelParams{}, su_panel(), kTxDbm, 8, 0);
    const AssociationMap mm = associate(moved, l, tm);
    std::vector<double> a, b;
    for (const User& u : pop.users) {
      a.push_back(t.at(m.serving_sector[u.id], u.id).path_loss_db);
      b.push_back(tm.at(mm.serving_sector[u.id], u.id).path_loss_db);
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK_THAT(a[i], WithinAbs(b[i], 1e-9));
  }
}
