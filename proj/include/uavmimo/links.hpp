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

#ifndef UAVMIMO_LINKS_HPP
#define UAVMIMO_LINKS_HPP

#include <cstdint>
#include <vector>

#include "uavmimo/arrays.hpp"
#include "uavmimo/channel.hpp"
#include "uavmimo/deployment.hpp"
#include "uavmimo/random.hpp"

namespace uavmimo {

/// Large-scale state of every (sector, user) pair of one drop, plus the
/// fading-averaged reference-signal power used for association.
struct LinkTable {
  int n_sectors = 0;
  int n_users = 0;
  std::vector<LinkState> links;  // sector-major
  std::vector<double> rsrp_dbm;  // same indexing

  std::size_t index(int sector, int user) const {
    return static_cast<std::size_t>(sector) * static_cast<std::size_t>(n_users) + static_cast<std::size_t>(user);
  }
  const LinkState& at(int sector, int user) const { return links[index(sector, user)]; }
  LinkState& at(int sector, int user) { return links[index(sector, user)]; }
  double rsrp(int sector, int user) const { return rsrp_dbm[index(sector, user)]; }
};

/// Geometry of the link from `sector` to `user` using the nearest wrap image.
inline LinkGeometry link_geometry(const NetworkLayout& layout, int sector, const User& u, Vec3* bs_to_user = nullptr) {
  const Vec2 p{u.position.x, u.position.y};
  const Vec2 bs = layout.closest_image(NetworkLayout::site_of(sector), p);
  const Vec3 d{p.x - bs.x, p.y - bs.y, u.position.z - layout.bs_height};
  if (bs_to_user) *bs_to_user = d;
  return {norm(p - bs), d.norm(), u.position.z, layout.bs_height};
}

/// Mean power gain of the reference beam over the Rician fading of a link.
inline double reference_beam_gain(const LinkState& link, const ArrayConfig& panel, const AnalogWeights& w) {
  const double k = link.k_lin();
  const CVec a = steering_vector(panel.positions_wl, link.bs_local_dir);
  const double coherent = std::norm(w.w.dot(a));  // |wᴴa|²
  return k / (k + 1.0) * coherent + 1.0 / (k + 1.0);
}

/// Draws LoS state and shadowing (shared by the three co-located sectors of a
/// site) and evaluates path loss, element gain and reference RSRP per link.
inline LinkTable build_link_table(const NetworkLayout& layout, const UserPopulation& pop, const ChannelParams& params,
                                  const ArrayConfig& reference_panel, double bs_tx_power_dbm,
                                  std::uint64_t master_seed, std::uint64_t drop) {
  LinkTable t;
  t.n_sectors = static_cast<int>(layout.n_sectors());
  t.n_users = static_cast<int>(pop.size());
  t.links.resize(static_cast<std::size_t>(t.n_sectors) * t.n_users);
  t.rsrp_dbm.resize(t.links.size());
  const AnalogWeights ref_w = su_panel_weights(reference_panel);
  const ElementPattern pattern = reference_panel.element.value_or(ElementPattern{});

  for (int site = 0; site < static_cast<int>(layout.n_sites()); ++site) {
    for (const User& u : pop.users) {
      Rng rng = make_stream(master_seed, StreamTag::kLargeScale,
                            {drop, static_cast<std::uint64_t>(site), static_cast<std::uint64_t>(u.id)});
      Vec3 d;
      const LinkGeometry geo = link_geometry(layout, 3 * site, u, &d);
      const double p_los = los_probability(u.position.z, geo.d2d, u.kind);
      const bool los = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p_los;
      const double sigma = params.shadowing ? shadowing_sigma_db(los, u.kind, u.position.z) : 0.0;
      const double sf = shadowing_sample(sigma, rng);
      double pl = path_loss(geo, los, params.carrier_ghz, u.kind);
      if (u.indoor) pl += params.indoor_loss_db;
      const Vec3 dir = d.normalized();

      for (int local = 0; local < 3; ++local) {
        const int s = 3 * site + local;
        LinkState& l = t.at(s, u.id);
        l.sector_id = s;
        l.user_id = u.id;
        l.d2d = geo.d2d;
        l.d3d = geo.d3d;
        l.los = los;
        l.path_loss_db = pl;
        l.shadowing_db = sf;
        const PanelFrame frame{layout.sector_azimuth(s), reference_panel.mechanical_downtilt_deg};
        l.bs_local_dir = frame.to_local(dir);
        l.aod = angles_from_direction(l.bs_local_dir);
        l.user_dir = {-dir.x, -dir.y, -dir.z};
        l.aoa = angles_from_direction(l.user_dir);
        l.element_gain_dbi = element_gain(l.aod.azimuth_deg, l.aod.elevation_deg, pattern);
        l.rician_k_db = rician_k_db(los, u.kind, u.position.z, params);
        t.rsrp_dbm[t.index(s, u.id)] =
            bs_tx_power_dbm + lin_to_db(l.gain_lin() * reference_beam_gain(l, reference_panel, ref_w));
      }
    }
  }
  return t;
}

// ----- Association ---------------------------------------------------------

struct AssociationMap {
  std::vector<int> serving_sector;  // by user id
  std::vector<std::vector<double>> rsrp_table;  // user -> per-sector RSRP (dBm)

  std::vector<int> users_of(int sector) const {
    std::vector<int> out;
    for (std::size_t u = 0; u < serving_sector.size(); ++u)
      if (serving_sector[u] == sector) out.push_back(static_cast<int>(u));
    return out;
  }
};

/// Strongest average received power wins; ties go to the lowest sector id.
inline AssociationMap associate(const UserPopulation& pop, const NetworkLayout& layout, const LinkTable& table) {
  if (table.n_users != static_cast<int>(pop.size()) || table.n_sectors != static_cast<int>(layout.n_sectors()) ||
      table.rsrp_dbm.size() != static_cast<std::size_t>(table.n_users) * table.n_sectors)
    throw InternalError("associate: link table does not cover every (sector, user) pair");
  AssociationMap m;
  m.serving_sector.resize(pop.size());
  m.rsrp_table.resize(pop.size());
  for (const User& u : pop.users) {
    auto& row = m.rsrp_table[u.id];
    row.resize(table.n_sectors);
    int best = 0;
    for (int s = 0; s < table.n_sectors; ++s) {
      row[s] = table.rsrp(s, u.id);
      if (row[s] > row[best]) best = s;
    }
    m.serving_sector[u.id] = best;
  }
  return m;
}

}  // namespace uavmimo

#endif  // UAVMIMO_LINKS_HPP
