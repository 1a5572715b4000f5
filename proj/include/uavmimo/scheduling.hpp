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

#ifndef UAVMIMO_SCHEDULING_HPP
#define UAVMIMO_SCHEDULING_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uavmimo/core.hpp"
#include "uavmimo/random.hpp"

namespace uavmimo {

enum class Mode { kSu, kSuAaUav, kMmimo, kMmimoAaUav, kMmimoNulls, kMmimoGueSplit };

inline constexpr std::array<Mode, 6> kAllModes{Mode::kSu,         Mode::kSuAaUav,    Mode::kMmimo,
                                               Mode::kMmimoAaUav, Mode::kMmimoNulls, Mode::kMmimoGueSplit};

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::kSu: return "SU";
    case Mode::kSuAaUav: return "SU_AAUAV";
    case Mode::kMmimo: return "MMIMO";
    case Mode::kMmimoAaUav: return "MMIMO_AAUAV";
    case Mode::kMmimoNulls: return "MMIMO_NULLS";
    case Mode::kMmimoGueSplit: return "MMIMO_GUESPLIT";
  }
  return "?";
}

inline std::optional<Mode> parse_mode(std::string_view s) {
  for (Mode m : kAllModes)
    if (to_string(m) == s) return m;
  return std::nullopt;
}

inline bool is_single_user(Mode m) { return m == Mode::kSu || m == Mode::kSuAaUav; }
inline bool uses_uav_arrays(Mode m) { return m == Mode::kSuAaUav || m == Mode::kMmimoAaUav; }

/// PRB -> user ids for one cell.
struct CellSchedule {
  std::vector<std::vector<int>> prb_users;

  int n_prb() const { return static_cast<int>(prb_users.size()); }
  int allocation_count(int user) const {
    int n = 0;
    for (const auto& v : prb_users) n += static_cast<int>(std::count(v.begin(), v.end(), user));
    return n;
  }
};

struct Schedule {
  Mode mode = Mode::kSu;
  int n_prb = 50;
  std::vector<CellSchedule> cells;
};

inline constexpr int kDefaultPrbs = 50;  // 10 MHz
inline constexpr int kDefaultGroupSize = 8;

inline std::vector<int> shuffled(std::span<const int> users, Rng& rng) {
  std::vector<int> order(users.begin(), users.end());
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

/// One user per PRB, round-robin over a shuffled order.
inline CellSchedule schedule_su(std::span<const int> users, int n_prb, Rng& rng) {
  CellSchedule s;
  s.prb_users.resize(n_prb);
  if (users.empty()) return s;
  const std::vector<int> order = shuffled(users, rng);
  for (int b = 0; b < n_prb; ++b) s.prb_users[b] = {order[b % order.size()]};
  return s;
}

/// How a cell's users share PRBs when they outnumber the group size.
///  kAlternate:  fixed groups (consecutive chunks of the shuffled order)
///               take turns PRB by PRB, so a remainder group runs short.
///  kCyclicFill: each PRB takes the next `group_size` users cyclically, so
///               every PRB is full and air time is n_prb·G/n per user ± 1.
enum class GroupPolicy { kAlternate, kCyclicFill };

inline std::string_view to_string(GroupPolicy p) { return p == GroupPolicy::kAlternate ? "alternate" : "cyclic"; }

inline GroupPolicy parse_group_policy(std::string_view s) {
  if (s == "alternate") return GroupPolicy::kAlternate;
  if (s == "cyclic") return GroupPolicy::kCyclicFill;
  throw ConfigError("phy.grouping", "unknown grouping policy '" + std::string(s) + "' (alternate|cyclic)");
}

/// Multi-user PRB groups of at most `group_size` users over a shuffled order.
inline CellSchedule schedule_mmimo(std::span<const int> users, int n_prb, int group_size, Rng& rng,
                                   GroupPolicy policy = GroupPolicy::kAlternate) {
  if (group_size < 1) throw SchedulingError("schedule_mmimo: group size must be positive");
  CellSchedule s;
  s.prb_users.resize(n_prb);
  if (users.empty()) return s;
  const std::vector<int> order = shuffled(users, rng);
  const std::size_t n = order.size();
  const std::size_t g_size = static_cast<std::size_t>(group_size);
  if (policy == GroupPolicy::kCyclicFill) {
    const std::size_t per_prb = std::min(n, g_size);
    for (int b = 0; b < n_prb; ++b)
      for (std::size_t i = 0; i < per_prb; ++i) s.prb_users[b].push_back(order[(b * per_prb + i) % n]);
    return s;
  }
  const std::size_t n_groups = (n + g_size - 1) / g_size;
  for (int b = 0; b < n_prb; ++b) {
    const std::size_t lo = (b % n_groups) * g_size;
    const std::size_t hi = std::min(n, lo + g_size);
    s.prb_users[b].assign(order.begin() + static_cast<std::ptrdiff_t>(lo),
                          order.begin() + static_cast<std::ptrdiff_t>(hi));
  }
  return s;
}

struct SplitPolicy {
  int n_uav = 0;
  int n_gue = 0;

  double uav_fraction() const { return static_cast<double>(n_uav) / static_cast<double>(n_uav + n_gue); }
};

struct PrbSplit {
  std::vector<int> uav_prbs;
  std::vector<int> gue_prbs;
};

/// The first round(n_prb·N_UAV/(N_UAV+N_GUE)) PRBs go to UAVs (at least one
/// when UAVs exist), the rest to GUEs. Identical in every cell.
inline PrbSplit split_prbs(const SplitPolicy& policy, int n_prb) {
  if (policy.n_uav < 0 || policy.n_gue < 0 || policy.n_uav + policy.n_gue < 1)
    throw SchedulingError("split_prbs: at least one user required");
  int n_uav_prb = static_cast<int>(std::lround(n_prb * policy.uav_fraction()));
  if (policy.n_uav >= 1) n_uav_prb = std::max(n_uav_prb, 1);
  n_uav_prb = std::min(n_uav_prb, n_prb);
  PrbSplit out;
  for (int b = 0; b < n_prb; ++b) (b < n_uav_prb ? out.uav_prbs : out.gue_prbs).push_back(b);
  return out;
}

/// Orthogonal PRB sets per user kind; each set scheduled multi-user over
/// that kind's users only.
inline CellSchedule schedule_gue_split(std::span<const int> uav_users, std::span<const int> gue_users,
                                       const PrbSplit& split, int n_prb, int group_size, Rng& rng,
                                       GroupPolicy policy = GroupPolicy::kAlternate) {
  CellSchedule s;
  s.prb_users.resize(n_prb);
  const CellSchedule uav = schedule_mmimo(uav_users, static_cast<int>(split.uav_prbs.size()), group_size, rng, policy);
  const CellSchedule gue = schedule_mmimo(gue_users, static_cast<int>(split.gue_prbs.size()), group_size, rng, policy);
  for (std::size_t i = 0; i < split.uav_prbs.size(); ++i) s.prb_users[split.uav_prbs[i]] = uav.prb_users[i];
  for (std::size_t i = 0; i < split.gue_prbs.size(); ++i) s.prb_users[split.gue_prbs[i]] = gue.prb_users[i];
  return s;
}

}  // namespace uavmimo

#endif  // UAVMIMO_SCHEDULING_HPP
