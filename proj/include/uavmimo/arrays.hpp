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

#ifndef UAVMIMO_ARRAYS_HPP
#define UAVMIMO_ARRAYS_HPP

#include <optional>
#include <string>
#include <vector>

#include "uavmimo/channel.hpp"
#include "uavmimo/core.hpp"

namespace uavmimo {

enum class Polarization { kCrossPol, kSingle };

/// Antenna array description. Element positions are in wavelengths in the
/// array frame (x = boresight, y = horizontal, z = up for BS panels).
/// Cross-polarized arrays list the +45° set first, then the co-located -45°
/// set at the same positions.
struct ArrayConfig {
  std::string name;
  std::vector<Vec3> positions_wl;
  int n_rf_chains = 1;
  Polarization polarization = Polarization::kSingle;
  double mechanical_downtilt_deg = 0.0;
  std::optional<ElementPattern> element;  // nullopt = omnidirectional

  int n_elements() const { return static_cast<int>(positions_wl.size()); }
  bool fully_digital() const { return n_rf_chains == n_elements(); }

  void validate() const {
    if (positions_wl.empty()) throw ConfigError("array." + name, "no elements");
    if (n_rf_chains != 1 && n_rf_chains != n_elements())
      throw ConfigError("array." + name, "RF chain count must be 1 or the element count");
  }
};

namespace detail {
inline std::vector<Vec3> planar_grid(int rows, int cols, double spacing_wl, bool cross_pol) {
  std::vector<Vec3> pos;
  const int n_pol = cross_pol ? 2 : 1;
  for (int p = 0; p < n_pol; ++p)
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        pos.push_back({0.0, (c - 0.5 * (cols - 1)) * spacing_wl, (r - 0.5 * (rows - 1)) * spacing_wl});
  return pos;
}
}  // namespace detail

/// Legacy sector panel: 8x1 column of ±45° cross-pol elements, one RF chain.
inline ArrayConfig su_panel(double downtilt_deg = 12.0) {
  return {"su_panel", detail::planar_grid(8, 1, 0.5, true), 1, Polarization::kCrossPol, downtilt_deg,
          ElementPattern{}};
}

/// Massive MIMO panel: 8x8 cross-pol elements, one RF chain each (128).
inline ArrayConfig mmimo_panel(double downtilt_deg = 12.0) {
  return {"mmimo_panel", detail::planar_grid(8, 8, 0.5, true), 128, Polarization::kCrossPol, downtilt_deg,
          ElementPattern{}};
}

/// UAV adaptive array: 2x2 omni elements in the horizontal plane, one RF chain.
inline ArrayConfig uav_array_2x2() {
  std::vector<Vec3> pos;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) pos.push_back({(c - 0.5) * 0.5, (r - 0.5) * 0.5, 0.0});
  return {"uav_2x2", pos, 1, Polarization::kSingle, 0.0, std::nullopt};
}

inline ArrayConfig single_omni() { return {"omni", {Vec3{}}, 1, Polarization::kSingle, 0.0, std::nullopt}; }

/// Orientation of a sector panel: azimuth of boresight plus mechanical
/// downtilt. Maps global directions into the panel frame.
struct PanelFrame {
  double azimuth_deg = 0.0;
  double downtilt_deg = 0.0;

  Vec3 to_local(const Vec3& global) const {
    const double phi = deg_to_rad(azimuth_deg);
    const double th = deg_to_rad(downtilt_deg);
    const double x1 = global.x * std::cos(phi) + global.y * std::sin(phi);
    const double y1 = -global.x * std::sin(phi) + global.y * std::cos(phi);
    const double z1 = global.z;
    return {x1 * std::cos(th) - z1 * std::sin(th), y1, x1 * std::sin(th) + z1 * std::cos(th)};
  }
};

struct AnalogWeights {
  CVec w;
};

/// Fixed equal-gain, co-phased combining over the whole column: 1/sqrt(8)
/// per polarization branch, split evenly across the two branches.
inline AnalogWeights su_panel_weights(const ArrayConfig& panel) {
  if (panel.n_rf_chains != 1) throw ArgumentError("su_panel_weights: panel must have a single RF chain");
  const Eigen::Index n = panel.n_elements();
  return {CVec::Constant(n, cplx(1.0 / std::sqrt(static_cast<double>(n)), 0.0))};
}

/// Analog beam of a single-RF-chain UAV array towards `direction` (global
/// frame, UAV -> serving BS): w = conj(a) / ||a||.
inline AnalogWeights uav_steer_weights(const ArrayConfig& uav_array, const Vec3& direction) {
  const CVec a = steering_vector(uav_array.positions_wl, direction);
  return {a.conjugate() / a.norm()};
}

inline AnalogWeights uav_steer_weights(const ArrayConfig& uav_array, double azimuth_deg, double elevation_deg) {
  return uav_steer_weights(uav_array, direction_from_angles(azimuth_deg, elevation_deg));
}

/// Power gain |aᵀw|² of a weight vector towards `direction`.
inline double array_power_gain(const ArrayConfig& arr, const AnalogWeights& w, const Vec3& direction) {
  const CVec a = steering_vector(arr.positions_wl, direction);
  return std::norm(a.cwiseProduct(w.w).sum());
}

/// rx_analogᴴ · H · tx_analog; an empty optional is the identity (fully
/// digital end). H is n_bs x n_ue, so in uplink tx is the UE side.
inline CMat effective_channel(const CMat& h, const std::optional<AnalogWeights>& tx_analog,
                              const std::optional<AnalogWeights>& rx_analog) {
  if (tx_analog && tx_analog->w.size() != h.cols())
    throw InternalError("effective_channel: tx weight length does not match channel columns");
  if (rx_analog && rx_analog->w.size() != h.rows())
    throw InternalError("effective_channel: rx weight length does not match channel rows");
  CMat out = h;
  if (tx_analog) out = out * tx_analog->w;
  if (rx_analog) out = rx_analog->w.adjoint() * out;
  return out;
}

}  // namespace uavmimo

#endif  // UAVMIMO_ARRAYS_HPP
