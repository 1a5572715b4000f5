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

#ifndef UAVMIMO_DEPLOYMENT_HPP
#define UAVMIMO_DEPLOYMENT_HPP

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "uavmimo/core.hpp"
#include "uavmimo/random.hpp"

namespace uavmimo {

// ----- Layout --------------------------------------------------------------

/// Hexagonal multi-site layout with three sectors per site and 6-image
/// toroidal wraparound. Sector `s` belongs to site `s / 3` and points at
/// `sector_orientations[s % 3]`.
struct NetworkLayout {
  std::vector<Vec2> site_positions;
  double inter_site_distance = 500.0;
  int n_rings = 2;
  std::array<double, 3> sector_orientations{30.0, 150.0, 270.0};
  double bs_height = 25.0;
  std::array<Vec2, 6> wrap_shifts{};
  std::vector<std::array<Vec2, 6>> wraparound_images;

  std::size_t n_sites() const { return site_positions.size(); }
  std::size_t n_sectors() const { return 3 * site_positions.size(); }
  static int site_of(int sector) { return sector / 3; }
  static int local_index(int sector) { return sector % 3; }
  double sector_azimuth(int sector) const { return sector_orientations[local_index(sector)]; }

  /// Copy of `site` on the cluster lattice closest to `p`. Inside the cluster
  /// this is the site itself or one of its six wraparound images.
  Vec2 closest_image(int site, Vec2 p) const {
    const Vec2 s = site_positions[site];
    const Vec2 b1 = wrap_shifts[0];
    const Vec2 b2 = wrap_shifts[1];
    const Vec2 d = p - s;
    const double det = b1.x * b2.y - b1.y * b2.x;
    const double a = std::round((d.x * b2.y - d.y * b2.x) / det);
    const double b = std::round((b1.x * d.y - b1.y * d.x) / det);
    Vec2 best = s;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = -1; i <= 1; ++i) {
      for (int j = -1; j <= 1; ++j) {
        const Vec2 img = s + (a + i) * b1 + (b + j) * b2;
        const double dist = norm(p - img);
        if (dist < best_d - 1e-9) {
          best_d = dist;
          best = img;
        }
      }
    }
    return best;
  }

  /// Hexagonal cell radius (centre to vertex).
  double cell_radius() const { return inter_site_distance / std::sqrt(3.0); }
};

namespace detail {
// Axial hex coordinates (q, r) -> plane, with a1 = (D, 0), a2 = (D/2, D*sqrt(3)/2).
inline Vec2 axial_to_plane(int q, int r, double isd) {
  return {isd * (q + 0.5 * r), isd * (std::sqrt(3.0) / 2.0) * r};
}
inline int hex_ring(int q, int r) { return std::max({std::abs(q), std::abs(r), std::abs(q + r)}); }
}  // namespace detail

inline NetworkLayout build_layout(int n_rings, double isd, double bs_height) {
  if (n_rings < 0) throw ConfigError("layout.n_rings", "must be >= 0");
  if (!(isd > 0.0)) throw ConfigError("layout.isd", "must be positive");
  if (!(bs_height > 0.0)) throw ConfigError("layout.bs_height", "must be positive");

  struct Cell {
    int q, r, ring;
    double angle;
  };
  std::vector<Cell> cells;
  for (int q = -n_rings; q <= n_rings; ++q) {
    for (int r = -n_rings; r <= n_rings; ++r) {
      const int ring = detail::hex_ring(q, r);
      if (ring > n_rings) continue;
      const Vec2 p = detail::axial_to_plane(q, r, 1.0);
      double ang = std::atan2(p.y, p.x);
      if (ang < -1e-12) ang += 2.0 * kPi;
      cells.push_back({q, r, ring, ring == 0 ? 0.0 : ang});
    }
  }
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    if (a.ring != b.ring) return a.ring < b.ring;
    return a.angle < b.angle - 1e-12;
  });

  NetworkLayout layout;
  layout.inter_site_distance = isd;
  layout.n_rings = n_rings;
  layout.bs_height = bs_height;
  for (const Cell& c : cells) layout.site_positions.push_back(detail::axial_to_plane(c.q, c.r, isd));

  // Cluster translation (2n+1, -n) in axial coordinates and its 60° rotations,
  // (q, r) -> (-r, q + r).
  int q = 2 * n_rings + 1;
  int r = -n_rings;
  for (int k = 0; k < 6; ++k) {
    layout.wrap_shifts[k] = detail::axial_to_plane(q, r, isd);
    const int nq = -r;
    const int nr = q + r;
    q = nq;
    r = nr;
  }
  layout.wraparound_images.resize(layout.n_sites());
  for (std::size_t s = 0; s < layout.n_sites(); ++s)
    for (int k = 0; k < 6; ++k) layout.wraparound_images[s][k] = layout.site_positions[s] + layout.wrap_shifts[k];
  return layout;
}

// ----- Users ---------------------------------------------------------------

enum class UserKind { kGue, kUav };

inline const char* to_string(UserKind k) { return k == UserKind::kGue ? "GUE" : "UAV"; }

inline constexpr double kMinUserHeight = 1.5;
inline constexpr double kMaxUavHeight = 300.0;
inline constexpr double kGueHeight = 1.5;

/// UAV altitude distribution: fixed value or uniform on [lo, hi].
struct HeightSpec {
  enum class Kind { kFixed, kUniform };
  Kind kind = Kind::kFixed;
  double lo = 150.0;
  double hi = 150.0;

  static HeightSpec fixed(double h) { return {Kind::kFixed, h, h}; }
  static HeightSpec uniform(double lo, double hi) { return {Kind::kUniform, lo, hi}; }

  void validate() const {
    if (lo < kMinUserHeight || hi > kMaxUavHeight || lo > hi)
      throw ConfigError("population.uav_height", "heights must lie within [1.5, 300] m with lo <= hi");
  }
  double sample(Rng& rng) const {
    if (kind == Kind::kFixed) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  }
  bool operator==(const HeightSpec&) const = default;
};

struct User {
  int id = 0;
  UserKind kind = UserKind::kGue;
  Vec3 position;
  bool indoor = false;
  int home_sector = 0;  // sector whose area the user was dropped in
};

struct UserPopulation {
  std::vector<User> users;

  std::size_t size() const { return users.size(); }
  std::size_t count(UserKind k) const {
    return static_cast<std::size_t>(
        std::count_if(users.begin(), users.end(), [k](const User& u) { return u.kind == k; }));
  }
};

struct DropOptions {
  double indoor_ratio = 0.8;
  double min_distance = 35.0;  // minimum 2D distance to the site

  bool operator==(const DropOptions&) const = default;
};

/// Uniform point in the 120° wedge of the site hexagon served by `sector`,
/// relative to the site position.
inline Vec2 sample_sector_point(const NetworkLayout& layout, int sector, double min_distance, Rng& rng) {
  const double radius = layout.cell_radius();
  const double apothem = layout.inter_site_distance / 2.0;
  const double boresight = deg_to_rad(layout.sector_azimuth(sector));
  std::uniform_real_distribution<double> box(-radius, radius);
  for (;;) {
    const Vec2 p{box(rng), box(rng)};
    bool inside = true;
    for (int k = 0; k < 3 && inside; ++k) {
      const double a = k * kPi / 3.0;
      inside = std::abs(p.x * std::cos(a) + p.y * std::sin(a)) <= apothem;
    }
    if (!inside) continue;
    const double d = norm(p);
    if (d < min_distance) continue;
    double diff = std::atan2(p.y, p.x) - boresight;
    diff = std::remainder(diff, 2.0 * kPi);
    if (std::abs(diff) > kPi / 3.0) continue;
    return p;
  }
}

/// Drops `n_gue` + `n_uav` users in every sector. Ids are sector-major,
/// GUEs before UAVs within a sector.
inline UserPopulation drop_users(const NetworkLayout& layout, int n_gue, int n_uav, const HeightSpec& uav_height,
                                 Rng& rng, const DropOptions& opts = {}) {
  if (n_gue < 0 || n_uav < 0) throw ConfigError("population", "user counts must be non-negative");
  if (n_gue + n_uav < 1) throw ConfigError("population", "at least one user per sector is required");
  uav_height.validate();
  if (opts.indoor_ratio < 0.0 || opts.indoor_ratio > 1.0)
    throw ConfigError("channel.indoor_ratio", "must lie in [0, 1]");

  UserPopulation pop;
  pop.users.reserve(layout.n_sectors() * static_cast<std::size_t>(n_gue + n_uav));
  std::bernoulli_distribution indoor(opts.indoor_ratio);
  int next_id = 0;
  for (int s = 0; s < static_cast<int>(layout.n_sectors()); ++s) {
    const Vec2 site = layout.site_positions[NetworkLayout::site_of(s)];
    for (int i = 0; i < n_gue + n_uav; ++i) {
      User u;
      u.id = next_id++;
      u.kind = i < n_gue ? UserKind::kGue : UserKind::kUav;
      const Vec2 p = site + sample_sector_point(layout, s, opts.min_distance, rng);
      const double h = u.kind == UserKind::kGue ? kGueHeight : uav_height.sample(rng);
      u.position = {p.x, p.y, h};
      u.indoor = u.kind == UserKind::kGue && indoor(rng);
      u.home_sector = s;
      pop.users.push_back(u);
    }
  }
  return pop;
}

}  // namespace uavmimo

#endif  // UAVMIMO_DEPLOYMENT_HPP
