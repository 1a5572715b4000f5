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

#ifndef UAVMIMO_CHANNEL_HPP
#define UAVMIMO_CHANNEL_HPP

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "uavmimo/core.hpp"
#include "uavmimo/deployment.hpp"
#include "uavmimo/random.hpp"

// Large-scale laws: 3GPP TR 38.901 UMa for terrestrial heights and
// TR 36.777 UMa-AV for aerial users above 22.5 m.

namespace uavmimo {

struct ChannelParams {
  double carrier_ghz = 2.0;
  double indoor_loss_db = 20.0;
  double k_gue_los_db = 9.0;
  double k_uav_low_db = 9.0;    // Rician K of a UAV at 1.5 m
  double k_uav_high_db = 20.0;  // ... rising linearly to this at 300 m
  bool shadowing = true;

  bool operator==(const ChannelParams&) const = default;
};

inline constexpr double kAerialModelMinHeight = 22.5;

// ----- LoS probability -----------------------------------------------------

/// UMa LoS probability for heights up to 22.5 m (TR 38.901 Table 7.4.2-1).
inline double los_probability_uma(double h_ut, double d2d) {
  if (d2d <= 18.0) return 1.0;
  const double c = h_ut <= 13.0 ? 0.0 : std::pow((h_ut - 13.0) / 10.0, 1.5);
  const double base = 18.0 / d2d + std::exp(-d2d / 63.0) * (1.0 - 18.0 / d2d);
  const double boost = 1.0 + c * 1.25 * std::pow(d2d / 100.0, 3.0) * std::exp(-d2d / 150.0);
  return std::min(1.0, base * boost);
}

/// LoS probability for a GUE or UAV. Aerial users above 100 m are always LoS.
inline double los_probability(double user_height, double d2d, UserKind kind) {
  if (d2d < 0.0) throw ArgumentError("los_probability: negative 2D distance");
  if (user_height < kMinUserHeight || user_height > kMaxUavHeight)
    throw ArgumentError("los_probability: height outside [1.5, 300] m");
  if (kind == UserKind::kGue || user_height <= kAerialModelMinHeight) return los_probability_uma(user_height, d2d);
  if (user_height > 100.0) return 1.0;
  const double lh = std::log10(user_height);
  const double d1 = std::max(460.0 * lh - 700.0, 18.0);
  const double p1 = 4300.0 * lh - 3800.0;
  if (d2d <= d1) return 1.0;
  return d1 / d2d + std::exp(-d2d / p1) * (1.0 - d1 / d2d);
}

// ----- Path loss -----------------------------------------------------------

struct LinkGeometry {
  double d2d = 0.0;
  double d3d = 0.0;
  double user_height = kGueHeight;
  double bs_height = 25.0;
};

inline double path_loss_uma_los(const LinkGeometry& g, double fc_ghz) {
  const double h_bs = g.bs_height - 1.0;
  const double h_ut = g.user_height - 1.0;
  const double d_bp = 4.0 * h_bs * h_ut * fc_ghz * 1e9 / kSpeedOfLight;
  const double pl1 = 28.0 + 22.0 * std::log10(g.d3d) + 20.0 * std::log10(fc_ghz);
  if (g.d2d <= d_bp) return pl1;
  const double dh = g.bs_height - g.user_height;
  return 28.0 + 40.0 * std::log10(g.d3d) + 20.0 * std::log10(fc_ghz) - 9.0 * std::log10(d_bp * d_bp + dh * dh);
}

inline double path_loss_uma_nlos(const LinkGeometry& g, double fc_ghz) {
  const double pl = 13.54 + 39.08 * std::log10(g.d3d) + 20.0 * std::log10(fc_ghz) - 0.6 * (g.user_height - 1.5);
  return std::max(pl, path_loss_uma_los(g, fc_ghz));
}

/// Basic path loss in dB (no shadowing, no penetration loss).
inline double path_loss(const LinkGeometry& g, bool los, double fc_ghz, UserKind kind) {
  if (!(g.d3d > 0.0)) throw ArgumentError("path_loss: 3D distance must be positive");
  if (kind == UserKind::kUav && g.user_height > kAerialModelMinHeight) {
    if (los) return 28.0 + 22.0 * std::log10(g.d3d) + 20.0 * std::log10(fc_ghz);
    return -17.5 + (46.0 - 7.0 * std::log10(g.user_height)) * std::log10(g.d3d) +
           20.0 * std::log10(40.0 * kPi * fc_ghz / 3.0);
  }
  return los ? path_loss_uma_los(g, fc_ghz) : path_loss_uma_nlos(g, fc_ghz);
}

// ----- Shadowing -----------------------------------------------------------

inline double shadowing_sigma_db(bool los, UserKind kind, double user_height) {
  if (kind == UserKind::kUav && user_height > kAerialModelMinHeight)
    return los ? 4.64 * std::exp(-0.0066 * user_height) : 6.0;
  return los ? 4.0 : 6.0;
}

inline double shadowing_sample(double sigma_db, Rng& rng) {
  if (sigma_db <= 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, sigma_db)(rng);
}

// ----- Rician K ------------------------------------------------------------

/// Rician K in dB; NLoS links are Rayleigh (returns -inf).
inline double rician_k_db(bool los, UserKind kind, double user_height, const ChannelParams& p) {
  if (!los) return -std::numeric_limits<double>::infinity();
  if (kind == UserKind::kGue) return p.k_gue_los_db;
  const double t = std::clamp((user_height - kMinUserHeight) / (kMaxUavHeight - kMinUserHeight), 0.0, 1.0);
  return p.k_uav_low_db + t * (p.k_uav_high_db - p.k_uav_low_db);
}

// ----- Antenna element -----------------------------------------------------

/// 3GPP parabolic sector element (TR 38.901 Table 7.3-1).
struct ElementPattern {
  double max_gain_dbi = 8.0;
  double hpbw_azimuth_deg = 65.0;
  double hpbw_elevation_deg = 65.0;
  double max_attenuation_db = 30.0;  // A_m
  double sidelobe_vertical_db = 30.0;  // SLA_v
};

/// Element gain for panel-local angles (azimuth 0 / elevation 0 is boresight).
inline double element_gain(double azimuth_deg, double elevation_deg, const ElementPattern& p) {
  const double a_v = -std::min(12.0 * std::pow(elevation_deg / p.hpbw_elevation_deg, 2.0), p.sidelobe_vertical_db);
  const double a_h = -std::min(12.0 * std::pow(azimuth_deg / p.hpbw_azimuth_deg, 2.0), p.max_attenuation_db);
  return p.max_gain_dbi - std::min(-(a_v + a_h), p.max_attenuation_db);
}

// ----- Steering vector -----------------------------------------------------

/// exp(j 2π p·u) for element positions `p` (in wavelengths) and the unit
/// direction `u` given in the array's own frame.
inline CVec steering_vector(std::span<const Vec3> positions_wl, const Vec3& direction) {
  const Vec3 u = direction.normalized();
  CVec a(static_cast<Eigen::Index>(positions_wl.size()));
  for (std::size_t n = 0; n < positions_wl.size(); ++n) a[n] = std::polar(1.0, 2.0 * kPi * positions_wl[n].dot(u));
  return a;
}

inline CVec steering_vector(std::span<const Vec3> positions_wl, double azimuth_deg, double elevation_deg) {
  return steering_vector(positions_wl, direction_from_angles(azimuth_deg, elevation_deg));
}

// ----- Link state ----------------------------------------------------------

struct LinkState {
  int sector_id = 0;
  int user_id = 0;
  double d2d = 0.0;
  double d3d = 0.0;
  bool los = false;
  double path_loss_db = 0.0;  // includes indoor penetration loss
  double shadowing_db = 0.0;
  double element_gain_dbi = 0.0;
  AzEl aod;  // panel-local departure angles at the BS
  AzEl aoa;  // global arrival angles at the user (towards the BS)
  Vec3 bs_local_dir;  // unit vector BS -> user, panel frame
  Vec3 user_dir;  // unit vector user -> BS, global frame
  double rician_k_db = -std::numeric_limits<double>::infinity();

  /// Linear large-scale gain per element pair (element gain - PL - SF).
  double gain_lin() const { return db_to_lin(element_gain_dbi - path_loss_db - shadowing_db); }
  double k_lin() const { return std::isinf(rician_k_db) ? 0.0 : db_to_lin(rician_k_db); }
};

/// Rician channel matrix (n_bs x n_ue):
///   H = sqrt(g) ( sqrt(K/(K+1)) e^{jψ} a_bs a_ueᵀ + sqrt(1/(K+1)) W ),
/// W i.i.d. CN(0, 1). `a_ue` is the UE steering vector towards the BS.
inline CMat draw_channel(const LinkState& link, const CVec& a_bs, const CVec& a_ue, Rng& rng) {
  const double g = link.gain_lin();
  const double k = link.k_lin();
  const double los_amp = std::sqrt(g * k / (k + 1.0));
  const double nlos_amp = std::sqrt(g / (k + 1.0));
  CMat h(a_bs.size(), a_ue.size());
  ComplexGaussian cn;
  cn.fill(rng, h.data(), h.size());
  h *= nlos_amp;
  if (los_amp > 0.0) {
    const cplx phase = std::polar(1.0, uniform_phase(rng));
    h.noalias() += (los_amp * phase) * (a_bs * a_ue.transpose());
  }
  return h;
}

/// One row per link: ids, distances, LoS flag and large-scale losses.
inline void write_channel_dump(std::ostream& os, std::span<const LinkState> links) {
  os << "sector_id,user_id,d2d_m,los,path_loss_db,shadowing_db\n";
  char buf[256];
  for (const LinkState& l : links) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.6f,%d,%.6f,%.6f\n", l.sector_id, l.user_id, l.d2d, l.los ? 1 : 0,
                  l.path_loss_db, l.shadowing_db);
    os << buf;
  }
}

}  // namespace uavmimo

#endif  // UAVMIMO_CHANNEL_HPP
