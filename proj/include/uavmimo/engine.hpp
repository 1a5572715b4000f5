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

#ifndef UAVMIMO_ENGINE_HPP
#define UAVMIMO_ENGINE_HPP

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "uavmimo/arrays.hpp"
#include "uavmimo/channel.hpp"
#include "uavmimo/deployment.hpp"
#include "uavmimo/links.hpp"
#include "uavmimo/metrics.hpp"
#include "uavmimo/phy.hpp"
#include "uavmimo/random.hpp"
#include "uavmimo/scheduling.hpp"

namespace uavmimo {

/// Physical-layer and channel settings shared by every drop of a scenario.
struct SimParams {
  ChannelParams channel;
  PowerConfig power;
  DropOptions drop;
  int n_prb = kDefaultPrbs;
  int n_nulls = kDefaultNulls;
  int pilot_length = kDefaultPilotLength;
  int symbols_per_prb = 14;
  int group_size = kDefaultGroupSize;
  GroupPolicy grouping = GroupPolicy::kCyclicFill;
  int silent_samples = 256;
  bool genie_covariance = false;
  bool su_pilot_overhead = true;
  double se_cap = kDefaultSeCap;
  bool exact_links = false;  // materialize every link instead of sampling projections
  ArrayConfig su_array = su_panel();
  ArrayConfig mimo_array = mmimo_panel();
  ArrayConfig uav_array = uav_array_2x2();

  double pilot_overhead(Mode m) const {
    if (is_single_user(m) && !su_pilot_overhead) return 0.0;
    return static_cast<double>(pilot_length) / static_cast<double>(symbols_per_prb);
  }

  void validate() const {
    power.validate();
    su_array.validate();
    mimo_array.validate();
    uav_array.validate();
    if (n_prb < 1) throw ConfigError("phy.n_prb", "must be positive");
    if (pilot_length < 1 || pilot_length >= symbols_per_prb)
      throw ConfigError("phy.pilot_length", "must lie in [1, symbols_per_prb)");
    if (group_size < 1 || group_size > pilot_length)
      throw ConfigError("phy.group_size", "must lie in [1, pilot_length]");
    if (n_nulls < 0 || group_size > mimo_array.n_elements() - n_nulls)
      throw ConfigError("phy.n_nulls", "nulls leave fewer spatial degrees of freedom than the group size");
    if (silent_samples < n_nulls) throw ConfigError("phy.silent_samples", "must be at least n_nulls");
    if (!(se_cap > 0.0)) throw ConfigError("phy.se_cap", "must be positive");
    if (su_array.n_rf_chains != 1) throw ConfigError("array.su", "SU panel must have one RF chain");
    if (!mimo_array.fully_digital()) throw ConfigError("array.mimo", "massive MIMO panel must be fully digital");
  }
};

struct PopulationSpec {
  int n_gue = 14;
  int n_uav = 1;
  HeightSpec uav_height = HeightSpec::fixed(150.0);
  bool operator==(const PopulationSpec&) const = default;
};

struct UserRecord {
  int id = 0;
  UserKind kind = UserKind::kGue;
  double height = 0.0;
  int serving_sector = 0;
};

struct UserModeResult {
  int n_prb = 0;
  double dl_rate_bps = 0.0;
  double ul_rate_bps = 0.0;
  double dl_mean_sinr_db = std::numeric_limits<double>::quiet_NaN();
  double ul_mean_sinr_db = std::numeric_limits<double>::quiet_NaN();
};

struct ModeDropResult {
  Mode mode = Mode::kSu;
  std::vector<UserModeResult> users;  // by user id
  std::vector<double> gue_dl_sinr_db;  // one sample per scheduled (GUE, PRB)
  std::vector<double> gue_ul_sinr_db;
  int regularized_prbs = 0;
};

struct DropResult {
  std::uint64_t drop = 0;
  std::vector<UserRecord> users;
  std::vector<ModeDropResult> modes;
  int empty_cells = 0;
};

/// Everything needed to recompute the SINRs of one (mode, PRB) by brute force.
/// Only meaningful with `exact_links`, where every channel is materialized.
struct PrbTrace {
  Mode mode = Mode::kMmimo;
  int prb = 0;
  bool captured = false;
  std::vector<std::vector<int>> scheduled;  // per cell, stream order
  std::vector<CMat> precoders;  // per cell, M x K
  std::vector<CMat> combiners;  // per cell, K x M
  std::vector<std::vector<CVec>> channels;  // [cell][user id], empty if unused
  std::vector<double> ul_power_w;  // by user id
  double dl_noise_w = 0.0;
  double ul_noise_w = 0.0;
  std::vector<std::vector<double>> dl_sinr;  // [cell][stream]
  std::vector<std::vector<double>> ul_sinr;
};

/// One Monte-Carlo drop: users, large-scale state, association, and the
/// per-PRB TDD frame (CSI, precoding/combining, SINR) for every mode.
///
/// Links that enter no channel estimate on a PRB are independent of the
/// precoders they are weighed with, so their K-dimensional projections
/// Wᴴh (or Vh) are drawn directly from CN(Wᴴh_LoS, g/(K+1)·WᴴW). Links that
/// do enter an estimate (in-cell, co-pilot) are materialized in full.
class DropSimulator {
 public:
  DropSimulator(const NetworkLayout& layout, const SimParams& params, const PopulationSpec& spec,
                std::uint64_t master_seed, std::uint64_t drop)
      : layout_(layout), params_(params), spec_(spec), seed_(master_seed), drop_(drop) {
    Rng rng = make_stream(seed_, StreamTag::kDrop, {drop_});
    pop_ = drop_users(layout_, spec_.n_gue, spec_.n_uav, spec_.uav_height, rng, params_.drop);
    table_ = build_link_table(layout_, pop_, params_.channel, params_.su_array, params_.power.bs_tx_power_dbm, seed_,
                              drop_);
    assoc_ = associate(pop_, layout_, table_);
    n_cells_ = static_cast<int>(layout_.n_sectors());
    n_users_ = static_cast<int>(pop_.size());
    n_ant_ = params_.mimo_array.n_elements();
    cell_users_.resize(n_cells_);
    for (const User& u : pop_.users) cell_users_[assoc_.serving_sector[u.id]].push_back(u.id);

    const std::size_t n_links = static_cast<std::size_t>(n_cells_) * n_users_;
    mimo_steer_.resize(n_links);
    su_factor_.assign(n_links, cplx(0.0, 0.0));
    su_factor_ready_.assign(n_links, 0);
    beta_aa_.assign(n_links, cplx(1.0, 0.0));
    for (const User& u : pop_.users) {
      if (u.kind != UserKind::kUav) continue;
      const int s = assoc_.serving_sector[u.id];
      const AnalogWeights w = uav_steer_weights(params_.uav_array, table_.at(s, u.id).user_dir);
      for (int c = 0; c < n_cells_; ++c) {
        const CVec a = steering_vector(params_.uav_array.positions_wl, table_.at(c, u.id).user_dir);
        beta_aa_[table_.index(c, u.id)] = a.cwiseProduct(w.w).sum();
      }
    }
    base_slot_.assign(n_links, -1);
    su_slot_.assign(n_links, -1);
    eff_slot_.assign(n_links, -1);
    full_.assign(n_links, 0);
    base_nlos_.resize(n_ant_, 0);
    dl_noise_ = noise_power_watt(params_.power.bandwidth_per_prb_hz, params_.power.noise_figure_ue_db);
    ul_noise_ = noise_power_watt(params_.power.bandwidth_per_prb_hz, params_.power.noise_figure_bs_db);
    dl_prb_power_ = dbm_to_watt(params_.power.bs_tx_power_dbm) / params_.n_prb;
  }

  const UserPopulation& population() const { return pop_; }
  const LinkTable& links() const { return table_; }
  const AssociationMap& association() const { return assoc_; }
  const std::vector<int>& users_of(int cell) const { return cell_users_[cell]; }

  /// Coupling loss seen by the UE's power control in `mode` (dB).
  double coupling_loss_db(Mode mode, int user) const {
    const int s = assoc_.serving_sector[user];
    double cl = params_.power.bs_tx_power_dbm - table_.rsrp(s, user);
    if (uses_uav_arrays(mode) && pop_.users[user].kind == UserKind::kUav)
      cl -= lin_to_db(std::norm(beta_aa_[table_.index(s, user)]));
    return cl;
  }

  Schedule make_schedule(Mode mode) const {
    Schedule sch;
    sch.mode = mode;
    sch.n_prb = params_.n_prb;
    sch.cells.resize(n_cells_);
    const PrbSplit split =
        mode == Mode::kMmimoGueSplit ? split_prbs({spec_.n_uav, spec_.n_gue}, params_.n_prb) : PrbSplit{};
    for (int c = 0; c < n_cells_; ++c) {
      Rng rng = make_stream(seed_, StreamTag::kSchedule, {drop_, static_cast<std::uint64_t>(c)});
      const std::vector<int>& users = cell_users_[c];
      if (is_single_user(mode)) {
        sch.cells[c] = schedule_su(users, params_.n_prb, rng);
      } else if (mode == Mode::kMmimoGueSplit) {
        std::vector<int> uav, gue;
        for (int u : users) (pop_.users[u].kind == UserKind::kUav ? uav : gue).push_back(u);
        sch.cells[c] = schedule_gue_split(uav, gue, split, params_.n_prb, params_.group_size, rng, params_.grouping);
      } else {
        sch.cells[c] = schedule_mmimo(users, params_.n_prb, params_.group_size, rng, params_.grouping);
      }
    }
    return sch;
  }

  /// Inter-cell subspace of every cell from the silent phase of `mode`'s
  /// uplink power levels.
  std::vector<InterCellSubspace> intercell_subspaces(const std::vector<double>& ul_power_w) {
    std::vector<InterCellSubspace> out(n_cells_);
    for (int c = 0; c < n_cells_; ++c) {
      std::vector<DirectionalSource> sources;
      double diffuse = ul_noise_;
      for (const User& u : pop_.users) {
        if (assoc_.serving_sector[u.id] == c || ul_power_w[u.id] <= 0.0) continue;
        const LinkState& l = table_.at(c, u.id);
        const double g = l.gain_lin();
        const double k = l.k_lin();
        diffuse += ul_power_w[u.id] * g / (k + 1.0);
        if (k > 0.0) sources.push_back({&mimo_steering(c, u.id), ul_power_w[u.id] * g * k / (k + 1.0)});
      }
      if (params_.genie_covariance) {
        out[c] = subspace_from_covariance(silent_phase_covariance(n_ant_, sources, diffuse), params_.n_nulls);
      } else {
        Rng rng = make_stream(seed_, StreamTag::kSilentPhase, {drop_, static_cast<std::uint64_t>(c)});
        out[c] = estimate_intercell_subspace(
            synthesize_silent_snapshots(n_ant_, sources, diffuse, params_.silent_samples, rng), params_.n_nulls);
      }
    }
    return out;
  }

  DropResult run(std::span<const Mode> modes, PrbTrace* trace = nullptr) {
    std::vector<ModeState> states;
    states.reserve(modes.size());
    for (Mode m : modes) states.push_back(prepare_mode(m));

    for (int b = 0; b < params_.n_prb; ++b) {
      reset_prb_caches();
      for (ModeState& ms : states) {
        if (is_single_user(ms.mode))
          run_su_prb(ms, b, trace);
        else
          run_mimo_prb(ms, b, trace);
      }
    }

    DropResult out;
    out.drop = drop_;
    for (const User& u : pop_.users)
      out.users.push_back({u.id, u.kind, u.position.z, assoc_.serving_sector[u.id]});
    for (int c = 0; c < n_cells_; ++c) out.empty_cells += cell_users_[c].empty() ? 1 : 0;
    for (ModeState& ms : states) out.modes.push_back(finish_mode(ms));
    return out;
  }

 private:
  struct ModeState {
    Mode mode;
    Schedule schedule;
    std::vector<int> n_alloc;
    std::vector<double> ul_power_w;
    std::vector<InterCellSubspace> subspaces;
    std::vector<std::vector<double>> dl_sinr;  // per user, per allocated PRB
    std::vector<std::vector<double>> ul_sinr;
    ModeDropResult result;
  };

  ModeState prepare_mode(Mode m) {
    ModeState ms;
    ms.mode = m;
    ms.schedule = make_schedule(m);
    ms.n_alloc.assign(n_users_, 0);
    for (const CellSchedule& cs : ms.schedule.cells)
      for (const auto& prb : cs.prb_users)
        for (int u : prb) ++ms.n_alloc[u];
    ms.ul_power_w.assign(n_users_, 0.0);
    for (int u = 0; u < n_users_; ++u) {
      if (ms.n_alloc[u] == 0) continue;
      const double total = uplink_fpc_power(coupling_loss_db(m, u), params_.power);
      ms.ul_power_w[u] = dbm_to_watt(per_prb_power_dbm(total, ms.n_alloc[u]));
    }
    if (m == Mode::kMmimoNulls) ms.subspaces = intercell_subspaces(ms.ul_power_w);
    ms.dl_sinr.resize(n_users_);
    ms.ul_sinr.resize(n_users_);
    ms.result.mode = m;
    return ms;
  }

  ModeDropResult finish_mode(ModeState& ms) {
    ModeDropResult& r = ms.result;
    r.users.resize(n_users_);
    const double ovh = params_.pilot_overhead(ms.mode);
    auto mean_db = [](const std::vector<double>& v) {
      if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
      CompensatedSum s;
      for (double x : v) s.add(lin_to_db(x));
      return s.value() / static_cast<double>(v.size());
    };
    for (int u = 0; u < n_users_; ++u) {
      UserModeResult& ur = r.users[u];
      ur.n_prb = ms.n_alloc[u];
      ur.dl_rate_bps = per_user_rate(ms.dl_sinr[u], ovh, params_.se_cap, params_.power.bandwidth_per_prb_hz);
      ur.ul_rate_bps = per_user_rate(ms.ul_sinr[u], ovh, params_.se_cap, params_.power.bandwidth_per_prb_hz);
      ur.dl_mean_sinr_db = mean_db(ms.dl_sinr[u]);
      ur.ul_mean_sinr_db = mean_db(ms.ul_sinr[u]);
    }
    return std::move(r);
  }

  std::uint64_t mode_key(Mode m) const { return static_cast<std::uint64_t>(m); }

  // ----- per-link helpers ----------------------------------------------------

  const CVec& mimo_steering(int c, int u) {
    CVec& a = mimo_steer_[table_.index(c, u)];
    if (a.size() == 0) a = steering_vector(params_.mimo_array.positions_wl, table_.at(c, u).bs_local_dir);
    return a;
  }

  cplx su_factor(int c, int u) {
    const std::size_t i = table_.index(c, u);
    if (!su_factor_ready_[i]) {
      const CVec a = steering_vector(params_.su_array.positions_wl, table_.at(c, u).bs_local_dir);
      su_factor_[i] = su_panel_weights(params_.su_array).w.dot(a);
      su_factor_ready_[i] = 1;
    }
    return su_factor_[i];
  }

  cplx beta(Mode m, int c, int u) const {
    return uses_uav_arrays(m) ? beta_aa_[table_.index(c, u)] : cplx(1.0, 0.0);
  }

  void reset_prb_caches() {
    for (std::size_t i : base_touched_) base_slot_[i] = -1;
    base_touched_.clear();
    base_phase_.clear();
    for (std::size_t i : su_touched_) su_slot_[i] = -1;
    su_touched_.clear();
    su_base_.clear();
  }

  void reset_mode_caches() {
    for (std::size_t i : eff_touched_) eff_slot_[i] = -1;
    eff_touched_.clear();
    for (std::size_t i : full_touched_) full_[i] = 0;
    full_touched_.clear();
    eff_used_ = 0;
  }

  /// Mode-independent small-scale draw (LoS phase, NLoS vector) of a link on
  /// the current PRB, keyed by (drop, cell, user, PRB).
  int base_draw(int c, int u, int b) {
    const std::size_t i = table_.index(c, u);
    if (base_slot_[i] >= 0) return base_slot_[i];
    const int slot = static_cast<int>(base_phase_.size());
    if (static_cast<Eigen::Index>(slot) >= base_nlos_.cols()) {
      CMat grown(n_ant_, std::max<Eigen::Index>(64, 2 * base_nlos_.cols()));
      grown.leftCols(base_nlos_.cols()) = base_nlos_;
      base_nlos_.swap(grown);
    }
    Rng rng = make_stream(seed_, StreamTag::kFullChannel,
                          {drop_, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(u),
                           static_cast<std::uint64_t>(b)});
    ComplexGaussian cn;
    cn.fill(rng, base_nlos_.col(slot).data(), n_ant_);
    base_phase_.push_back(std::polar(1.0, uniform_phase(rng)));
    base_slot_[i] = slot;
    base_touched_.push_back(i);
    return slot;
  }

  /// Effective (after UE analog weights) channel of link (c, u) in mode m.
  const CVec& effective(Mode m, int c, int u, int b) {
    const std::size_t i = table_.index(c, u);
    if (eff_slot_[i] >= 0) return eff_pool_[eff_slot_[i]];
    const int slot = base_draw(c, u, b);
    const LinkState& l = table_.at(c, u);
    const double g = l.gain_lin();
    const double k = l.k_lin();
    if (eff_used_ == eff_pool_.size()) eff_pool_.emplace_back(n_ant_);
    CVec& h = eff_pool_[eff_used_];
    h = std::sqrt(g / (k + 1.0)) * base_nlos_.col(slot);
    if (k > 0.0) h += (std::sqrt(g * k / (k + 1.0)) * base_phase_[slot] * beta(m, c, u)) * mimo_steering(c, u);
    eff_slot_[i] = static_cast<int>(eff_used_);
    eff_touched_.push_back(i);
    return eff_pool_[eff_used_++];
  }

  void mark_full(int c, int u) {
    const std::size_t i = table_.index(c, u);
    if (!full_[i]) {
      full_[i] = 1;
      full_touched_.push_back(i);
    }
  }
  bool is_full(int c, int u) const { return params_.exact_links || full_[table_.index(c, u)]; }

  /// Scalar SU channel after both analog beams, drawn once per PRB.
  cplx su_channel(Mode m, int c, int u, int b) {
    const std::size_t i = table_.index(c, u);
    if (su_slot_[i] < 0) {
      Rng rng = make_stream(seed_, StreamTag::kSuChannel,
                            {drop_, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(u),
                             static_cast<std::uint64_t>(b)});
      ComplexGaussian cn;
      const cplx z = cn(rng);
      su_base_.push_back({std::polar(1.0, uniform_phase(rng)), z});
      su_slot_[i] = static_cast<int>(su_base_.size()) - 1;
      su_touched_.push_back(i);
    }
    const auto& [phase, z] = su_base_[su_slot_[i]];
    const LinkState& l = table_.at(c, u);
    const double g = l.gain_lin();
    const double k = l.k_lin();
    cplx h = std::sqrt(g / (k + 1.0)) * z;
    if (k > 0.0) h += std::sqrt(g * k / (k + 1.0)) * phase * beta(m, c, u) * su_factor(c, u);
    return h;
  }

  /// Lower-triangular L with L Lᴴ = G (Hermitian PSD).
  static CMat sqrt_factor(const CMat& g) {
    Eigen::LLT<CMat> llt(g);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Eigen::SelfAdjointEigenSolver<CMat> eig(g);
    return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }

  bool capture(const PrbTrace* trace, Mode m, int b) const {
    return trace && !trace->captured && trace->mode == m && trace->prb == b;
  }

  // ----- single-user modes ---------------------------------------------------

  void run_su_prb(ModeState& ms, int b, PrbTrace* trace) {
    const Mode m = ms.mode;
    std::vector<int> served(n_cells_, -1);
    for (int c = 0; c < n_cells_; ++c) {
      const auto& v = ms.schedule.cells[c].prb_users[b];
      if (!v.empty()) served[c] = v.front();
    }
    const bool cap = capture(trace, m, b);
    if (cap) begin_trace(*trace, ms);

    for (int s = 0; s < n_cells_; ++s) {
      const int u = served[s];
      if (u < 0) continue;
      // downlink: every active cell radiates its full PRB power
      double sig = 0.0, interf = 0.0;
      for (int c = 0; c < n_cells_; ++c) {
        if (served[c] < 0) continue;
        const cplx h = su_channel(m, c, u, b);
        const double p = dl_prb_power_ * std::norm(h);
        (c == s ? sig : interf) += p;
        if (cap) trace->channels[c][u] = CVec::Constant(1, std::conj(h));
      }
      const double dl = sig / (interf + dl_noise_);
      // uplink: co-channel users of all other cells
      const double ul_sig = ms.ul_power_w[u] * std::norm(su_channel(m, s, u, b));
      double ul_int = 0.0;
      for (int c = 0; c < n_cells_; ++c) {
        if (c == s || served[c] < 0) continue;
        const int j = served[c];
        ul_int += ms.ul_power_w[j] * std::norm(su_channel(m, s, j, b));
        if (cap) trace->channels[s][j] = CVec::Constant(1, std::conj(su_channel(m, s, j, b)));
      }
      const double ul = ul_sig / (ul_int + ul_noise_);
      record(ms, u, dl, ul);
      if (cap) {
        trace->scheduled[s] = {u};
        trace->precoders[s] = CMat::Constant(1, 1, cplx(std::sqrt(dl_prb_power_), 0.0));
        trace->combiners[s] = CMat::Constant(1, 1, cplx(1.0, 0.0));
        trace->dl_sinr[s] = {dl};
        trace->ul_sinr[s] = {ul};
      }
    }
    if (cap) trace->captured = true;
  }

  // ----- massive MIMO modes --------------------------------------------------

  void run_mimo_prb(ModeState& ms, int b, PrbTrace* trace) {
    const Mode m = ms.mode;
    reset_mode_caches();
    std::vector<std::vector<int>> sched(n_cells_);
    for (int c = 0; c < n_cells_; ++c) sched[c] = ms.schedule.cells[c].prb_users[b];
    const PilotMap pilots = assign_pilots(layout_, sched, params_.pilot_length);

    for (int c = 0; c < n_cells_; ++c)
      for (int k = 0; k < static_cast<int>(sched[c].size()); ++k) {
        mark_full(c, sched[c][k]);
        for (const auto& co : pilots.co_pilot_users(c, k)) mark_full(c, co.user);
      }

    auto channel = [&](int c, int u) -> const CVec& { return effective(m, c, u, b); };
    auto power = [&](int u) { return ms.ul_power_w[u]; };
    Rng est_rng = make_stream(seed_, StreamTag::kEstimationNoise,
                              {drop_, mode_key(m), static_cast<std::uint64_t>(b)});
    CsiSet csi;
    if (m == Mode::kMmimoNulls) {
      auto fraction = [&](int c, int u) { return serving_energy_fraction(ms.subspaces[c], c, u, m); };
      csi = estimate_channels_covariance_aided(channel, pilots, power, std::span<const InterCellSubspace>(ms.subspaces),
                                               fraction, ul_noise_, &est_rng);
    } else {
      csi = estimate_channels_ls(channel, pilots, power, ul_noise_, &est_rng);
    }

    std::vector<CMat> w(n_cells_), v(n_cells_);
    for (int c = 0; c < n_cells_; ++c) {
      if (sched[c].empty()) continue;
      LinearFilter pre, comb;
      if (m == Mode::kMmimoNulls) {
        pre = null_projected_zf_precoders(csi[c].estimates, ms.subspaces[c].basis, dl_prb_power_);
        comb = null_projected_zf_combiners(csi[c].estimates, ms.subspaces[c].basis);
      } else {
        pre = zf_precoders(csi[c].estimates, dl_prb_power_);
        comb = zf_combiners(csi[c].estimates);
      }
      if (pre.regularized || comb.regularized) ++ms.result.regularized_prbs;
      w[c] = std::move(pre.matrix);
      v[c] = std::move(comb.matrix);
    }

    Rng proj_rng = make_stream(seed_, StreamTag::kProjection, {drop_, mode_key(m), static_cast<std::uint64_t>(b)});
    ComplexGaussian cn;

    const bool cap = capture(trace, m, b);
    if (cap) {
      begin_trace(*trace, ms);
      trace->scheduled = sched;
      trace->precoders = w;
      trace->combiners = v;
    }

    // In-cell channel matrices, columns in stream order.
    std::vector<CMat> h_own(n_cells_);
    for (int c = 0; c < n_cells_; ++c) {
      if (sched[c].empty()) continue;
      h_own[c].resize(n_ant_, static_cast<Eigen::Index>(sched[c].size()));
      for (std::size_t k = 0; k < sched[c].size(); ++k) h_own[c].col(k) = channel(c, sched[c][k]);
    }

    // Out-of-cell projections F·h for every scheduled user of the other
    // cells, where F is Wᴴ (downlink, from cell c) or V (uplink, at cell c).
    // Calls visit(cell, stream, y) in a fixed order.
    CMat x, y_all, z_all;
    auto project_others = [&](const CMat& f, int c, auto&& visit) {
      int n_cols = 0, n_sampled = 0;
      for (int s = 0; s < n_cells_; ++s) {
        if (s == c) continue;
        for (int u : sched[s]) {
          const bool full = is_full(c, u);
          n_cols += (full || table_.at(c, u).los) ? 1 : 0;
          n_sampled += full ? 0 : 1;
        }
      }
      x.resize(n_ant_, n_cols);
      int col = 0;
      for (int s = 0; s < n_cells_; ++s) {
        if (s == c) continue;
        for (int u : sched[s]) {
          if (is_full(c, u))
            x.col(col++) = channel(c, u);
          else if (table_.at(c, u).los)
            x.col(col++) = mimo_steering(c, u);
        }
      }
      y_all.noalias() = f * x;
      if (n_sampled > 0) {
        // NLoS parts of sampled links: columns of L·Z with L·Lᴴ = F·Fᴴ
        z_all.resize(f.rows(), n_sampled);
        cn.fill(proj_rng, z_all.data(), z_all.size());
        const CMat factor = sqrt_factor(f * f.adjoint());
        z_all = factor * z_all;
      }
      col = 0;
      int zc = 0;
      Eigen::VectorXcd y(f.rows());
      for (int s = 0; s < n_cells_; ++s) {
        if (s == c) continue;
        for (int k = 0; k < static_cast<int>(sched[s].size()); ++k) {
          const int u = sched[s][k];
          if (is_full(c, u)) {
            y = y_all.col(col++);
          } else {
            const LinkState& l = table_.at(c, u);
            const double g = l.gain_lin();
            const double kf = l.k_lin();
            y = std::sqrt(g / (kf + 1.0)) * z_all.col(zc++);
            if (l.los) y += (std::sqrt(g * kf / (kf + 1.0)) * beta(m, c, u)) * y_all.col(col++);
          }
          visit(s, k, y);
        }
      }
    };

    // downlink
    std::vector<Eigen::VectorXd> dl_int(n_cells_), dl_sig(n_cells_);
    for (int s = 0; s < n_cells_; ++s) {
      if (sched[s].empty()) continue;
      const CMat y = w[s].adjoint() * h_own[s];  // y(i, k): stream i at user k
      dl_sig[s] = y.diagonal().cwiseAbs2();
      dl_int[s] = y.cwiseAbs2().colwise().sum().transpose() - dl_sig[s];
    }
    for (int c = 0; c < n_cells_; ++c) {
      if (sched[c].empty()) continue;
      const CMat wh = w[c].adjoint();
      project_others(wh, c, [&](int s, int k, const Eigen::VectorXcd& y) { dl_int[s][k] += y.squaredNorm(); });
    }
    for (int s = 0; s < n_cells_; ++s) {
      for (int k = 0; k < static_cast<int>(sched[s].size()); ++k) {
        const int u = sched[s][k];
        const double dl = dl_sig[s][k] / (dl_int[s][k] + dl_noise_);
        ms.dl_sinr[u].push_back(dl);
        if (pop_.users[u].kind == UserKind::kGue) ms.result.gue_dl_sinr_db.push_back(lin_to_db(dl));
        if (cap) trace->dl_sinr[s].push_back(dl);
      }
    }

    // uplink
    for (int s = 0; s < n_cells_; ++s) {
      const int ks = static_cast<int>(sched[s].size());
      if (ks == 0) continue;
      const CMat y = v[s] * h_own[s];  // y(k, j): stream k from user j
      Eigen::VectorXd sig(ks);
      Eigen::VectorXd interf = Eigen::VectorXd::Zero(ks);
      for (int j = 0; j < ks; ++j) {
        const Eigen::VectorXd p = ms.ul_power_w[sched[s][j]] * y.col(j).cwiseAbs2();
        sig[j] = p[j];
        interf += p;
        interf[j] -= p[j];
      }
      project_others(v[s], s, [&](int c, int j, const Eigen::VectorXcd& yo) {
        interf += ms.ul_power_w[sched[c][j]] * yo.cwiseAbs2();
      });
      for (int k = 0; k < ks; ++k) {
        const int u = sched[s][k];
        const double ul = sig[k] / (interf[k] + ul_noise_);
        ms.ul_sinr[u].push_back(ul);
        if (pop_.users[u].kind == UserKind::kGue) ms.result.gue_ul_sinr_db.push_back(lin_to_db(ul));
        if (cap) trace->ul_sinr[s].push_back(ul);
      }
    }

    if (cap) {
      for (int c = 0; c < n_cells_; ++c)
        for (const auto& cell : sched)
          for (int u : cell) trace->channels[c][u] = channel(c, u);
      trace->captured = true;
    }
  }

  double serving_energy_fraction(const InterCellSubspace& sub, int c, int u, Mode m) {
    if (sub.n_nulls() == 0) return 0.0;
    const LinkState& l = table_.at(c, u);
    const double k = l.k_lin();
    const double b2 = std::norm(beta(m, c, u));
    const double m_ant = static_cast<double>(n_ant_);
    double in_sub = sub.n_nulls() / (k + 1.0);
    double total = m_ant / (k + 1.0);
    if (k > 0.0) {
      in_sub += k / (k + 1.0) * b2 * (sub.basis.adjoint() * mimo_steering(c, u)).squaredNorm();
      total += k / (k + 1.0) * b2 * m_ant;
    }
    return in_sub / total;
  }

  void record(ModeState& ms, int u, double dl, double ul) {
    ms.dl_sinr[u].push_back(dl);
    ms.ul_sinr[u].push_back(ul);
    if (pop_.users[u].kind == UserKind::kGue) {
      ms.result.gue_dl_sinr_db.push_back(lin_to_db(dl));
      ms.result.gue_ul_sinr_db.push_back(lin_to_db(ul));
    }
  }

  void begin_trace(PrbTrace& t, const ModeState& ms) const {
    t.scheduled.assign(n_cells_, {});
    t.precoders.assign(n_cells_, CMat());
    t.combiners.assign(n_cells_, CMat());
    t.channels.assign(n_cells_, std::vector<CVec>(n_users_));
    t.ul_power_w = ms.ul_power_w;
    t.dl_noise_w = dl_noise_;
    t.ul_noise_w = ul_noise_;
    t.dl_sinr.assign(n_cells_, {});
    t.ul_sinr.assign(n_cells_, {});
  }

  const NetworkLayout& layout_;
  const SimParams& params_;
  PopulationSpec spec_;
  std::uint64_t seed_;
  std::uint64_t drop_;

  UserPopulation pop_;
  LinkTable table_;
  AssociationMap assoc_;
  int n_cells_ = 0;
  int n_users_ = 0;
  Eigen::Index n_ant_ = 0;
  std::vector<std::vector<int>> cell_users_;
  double dl_noise_ = 0.0;
  double ul_noise_ = 0.0;
  double dl_prb_power_ = 0.0;

  std::vector<CVec> mimo_steer_;
  std::vector<cplx> su_factor_;
  std::vector<char> su_factor_ready_;
  std::vector<cplx> beta_aa_;

  // per-PRB caches
  std::vector<int> base_slot_;
  std::vector<std::size_t> base_touched_;
  std::vector<cplx> base_phase_;
  CMat base_nlos_;
  std::vector<int> su_slot_;
  std::vector<std::size_t> su_touched_;
  std::vector<std::pair<cplx, cplx>> su_base_;

  // per-(mode, PRB) caches
  std::vector<int> eff_slot_;
  std::vector<std::size_t> eff_touched_;
  std::deque<CVec> eff_pool_;
  std::size_t eff_used_ = 0;
  std::vector<char> full_;
  std::vector<std::size_t> full_touched_;
};

/// Convenience wrapper: simulate one drop for the given modes.
inline DropResult simulate_drop(const NetworkLayout& layout, const SimParams& params, const PopulationSpec& spec,
                                std::span<const Mode> modes, std::uint64_t master_seed, std::uint64_t drop) {
  DropSimulator sim(layout, params, spec, master_seed, drop);
  return sim.run(modes);
}

}  // namespace uavmimo

#endif  // UAVMIMO_ENGINE_HPP
