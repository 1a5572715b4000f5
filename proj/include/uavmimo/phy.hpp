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

#ifndef UAVMIMO_PHY_HPP
#define UAVMIMO_PHY_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Eigenvalues>

#include "uavmimo/core.hpp"
#include "uavmimo/deployment.hpp"
#include "uavmimo/random.hpp"

namespace uavmimo {

// ----- Power control -------------------------------------------------------

struct PowerConfig {
  double bs_tx_power_dbm = 46.0;
  double ue_max_power_dbm = 23.0;
  double p0_dbm = -85.0;
  double alpha = 0.8;
  double noise_figure_bs_db = 5.0;
  double noise_figure_ue_db = 9.0;
  double bandwidth_per_prb_hz = kPrbBandwidthHz;

  bool operator==(const PowerConfig&) const = default;

  void validate() const {
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("phy.alpha", "must lie in [0, 1]");
    for (double v : {bs_tx_power_dbm, ue_max_power_dbm, p0_dbm, noise_figure_bs_db, noise_figure_ue_db})
      if (!std::isfinite(v)) throw ConfigError("phy", "power settings must be finite");
    if (!(bandwidth_per_prb_hz > 0.0)) throw ConfigError("phy.bandwidth_per_prb_hz", "must be positive");
  }
};

/// Open-loop fractional power control: UE total transmit power in dBm.
inline double uplink_fpc_power(double path_loss_db, const PowerConfig& cfg) {
  return std::min(cfg.ue_max_power_dbm, cfg.p0_dbm + cfg.alpha * path_loss_db);
}

/// Total power spread evenly over `n_prb` allocated PRBs (linear domain).
inline double per_prb_power_dbm(double total_dbm, int n_prb) {
  if (n_prb <= 0) throw ArgumentError("per_prb_power_dbm: no PRBs allocated");
  return total_dbm - 10.0 * std::log10(static_cast<double>(n_prb));
}

// ----- Pilots --------------------------------------------------------------

inline constexpr int kDefaultPilotLength = 8;

/// Pilot indices on one PRB. Pilot index = position of the user in its
/// cell's scheduled list; cells with equal reuse group share the pilot set.
struct PilotMap {
  int tau = kDefaultPilotLength;
  std::vector<int> reuse_group;  // per cell
  std::vector<std::vector<int>> cell_users;  // per cell, indexed by pilot

  int n_cells() const { return static_cast<int>(cell_users.size()); }

  int pilot_of(int cell, int user) const {
    const auto& v = cell_users[cell];
    const auto it = std::find(v.begin(), v.end(), user);
    if (it == v.end()) throw InternalError("pilot_of: user not scheduled in cell");
    return static_cast<int>(it - v.begin());
  }

  struct CoPilot {
    int user;
    int cell;
  };

  /// Users in other cells of the same reuse group transmitting pilot `pilot`.
  std::vector<CoPilot> co_pilot_users(int cell, int pilot) const {
    std::vector<CoPilot> out;
    for (int c = 0; c < n_cells(); ++c) {
      if (c == cell || reuse_group[c] != reuse_group[cell]) continue;
      if (pilot < static_cast<int>(cell_users[c].size())) out.push_back({cell_users[c][pilot], c});
    }
    return out;
  }
};

/// Reuse-3 pilot plan: the reuse group of a cell is its sector index within
/// the site, so every group covers exactly one third of the cells.
inline PilotMap assign_pilots(const NetworkLayout& layout, const std::vector<std::vector<int>>& scheduled,
                              int tau = kDefaultPilotLength) {
  if (scheduled.size() != layout.n_sectors()) throw InternalError("assign_pilots: one user list per cell expected");
  PilotMap m;
  m.tau = tau;
  m.reuse_group.resize(scheduled.size());
  for (std::size_t c = 0; c < scheduled.size(); ++c) {
    if (static_cast<int>(scheduled[c].size()) > tau)
      throw SchedulingError("assign_pilots: more co-scheduled users than orthogonal pilots");
    m.reuse_group[c] = NetworkLayout::local_index(static_cast<int>(c));
  }
  m.cell_users = scheduled;
  return m;
}

// ----- Channel estimation --------------------------------------------------

struct PilotInterferer {
  const CVec* channel;  // interferer's channel to the estimating cell
  double power;  // per-PRB pilot power, watts
};

/// Least-squares estimate after pilot despreading:
///   ĥ = h + Σ sqrt(p_j / p_k) h_j + n / sqrt(τ p_k),  n ~ CN(0, noise_var I).
/// `rng` may be null only when noise_var == 0.
inline CVec estimate_channel_ls(const CVec& own, double own_power, std::span<const PilotInterferer> interferers,
                                double noise_var, int tau, Rng* rng) {
  CVec est = own;
  for (const PilotInterferer& j : interferers) est.noalias() += std::sqrt(j.power / own_power) * (*j.channel);
  if (noise_var > 0.0) {
    if (!rng) throw InternalError("estimate_channel_ls: noise requested without an RNG");
    const double amp = std::sqrt(noise_var / (tau * own_power));
    ComplexGaussian cn;
    for (Eigen::Index i = 0; i < est.size(); ++i) est[i] += amp * cn(*rng);
  }
  return est;
}

/// Estimated channels of one cell on one PRB (columns follow pilot order).
struct CellCsi {
  std::vector<int> users;
  CMat estimates;  // M x K
  double estimation_noise_var = 0.0;
  std::vector<std::vector<int>> contamination;  // co-pilot user ids per column
};

using CsiSet = std::vector<CellCsi>;

/// LS estimation for every cell of a pilot map. `channel(cell, user)` returns
/// the user's channel to the cell, `power(user)` its per-PRB pilot power.
template <class ChannelFn, class PowerFn>
CsiSet estimate_channels_ls(ChannelFn&& channel, const PilotMap& pilots, PowerFn&& power, double noise_var,
                            Rng* rng) {
  CsiSet csi(pilots.n_cells());
  for (int c = 0; c < pilots.n_cells(); ++c) {
    CellCsi& cell = csi[c];
    cell.users = pilots.cell_users[c];
    cell.estimation_noise_var = noise_var;
    const int k_users = static_cast<int>(cell.users.size());
    if (k_users == 0) continue;
    std::vector<CVec> held;
    cell.contamination.resize(k_users);
    for (int k = 0; k < k_users; ++k) {
      const auto others = pilots.co_pilot_users(c, k);
      held.clear();
      held.reserve(others.size());
      std::vector<PilotInterferer> interf;
      for (const auto& o : others) {
        held.push_back(channel(c, o.user));
        cell.contamination[k].push_back(o.user);
      }
      for (std::size_t i = 0; i < others.size(); ++i) interf.push_back({&held[i], power(others[i].user)});
      const CVec own = channel(c, cell.users[k]);
      CVec est = estimate_channel_ls(own, power(cell.users[k]), interf, noise_var, pilots.tau, rng);
      if (k == 0) cell.estimates.resize(est.size(), k_users);
      cell.estimates.col(k) = est;
    }
  }
  return csi;
}

// ----- Inter-cell subspace -------------------------------------------------

inline constexpr int kDefaultNulls = 16;

struct InterCellSubspace {
  CMat covariance;  // M x M Hermitian PSD
  CMat basis;  // M x n_nulls, orthonormal, dominant eigenvectors first
  Eigen::VectorXd eigenvalues;  // all eigenvalues, descending

  int n_nulls() const { return static_cast<int>(basis.cols()); }
};

/// Dominant eigenvectors of a Hermitian covariance.
inline InterCellSubspace subspace_from_covariance(const CMat& covariance, int n_nulls) {
  const Eigen::Index m = covariance.rows();
  if (n_nulls < 0 || n_nulls > m) throw EstimationError("subspace_from_covariance: invalid null count");
  InterCellSubspace s;
  s.covariance = covariance;
  Eigen::SelfAdjointEigenSolver<CMat> eig(covariance);
  if (eig.info() != Eigen::Success) throw EstimationError("subspace_from_covariance: eigensolver failed");
  s.eigenvalues = eig.eigenvalues().reverse();
  s.basis = eig.eigenvectors().rightCols(n_nulls).rowwise().reverse();
  return s;
}

/// R = (1/n) Σ y yᴴ over silent-phase snapshots (columns of `snapshots`);
/// the basis spans the top `n_nulls` eigenvectors.
inline InterCellSubspace estimate_intercell_subspace(const CMat& snapshots, int n_nulls) {
  if (snapshots.cols() < n_nulls) throw EstimationError("estimate_intercell_subspace: fewer snapshots than nulls");
  CMat r = CMat::Zero(snapshots.rows(), snapshots.rows());
  r.selfadjointView<Eigen::Lower>().rankUpdate(snapshots, 1.0 / static_cast<double>(snapshots.cols()));
  r = r.selfadjointView<Eigen::Lower>();
  return subspace_from_covariance(r, n_nulls);
}

/// A directional interferer seen during the silent phase: its LoS array
/// response and received LoS power.
struct DirectionalSource {
  const CVec* response;
  double power;
};

/// Silent-phase snapshots: each directional source contributes its LoS
/// component with a fresh uniform phase per snapshot; diffuse components of
/// all sources plus receiver noise form the white floor `diffuse_power`.
inline CMat synthesize_silent_snapshots(Eigen::Index n_antennas, std::span<const DirectionalSource> sources,
                                        double diffuse_power, int n_samples, Rng& rng) {
  CMat y(n_antennas, n_samples);
  ComplexGaussian cn;
  cn.fill(rng, y.data(), y.size());
  y *= std::sqrt(diffuse_power);
  if (!sources.empty()) {
    CMat coeff(static_cast<Eigen::Index>(sources.size()), n_samples);
    for (std::size_t i = 0; i < sources.size(); ++i)
      for (int t = 0; t < n_samples; ++t)
        coeff(static_cast<Eigen::Index>(i), t) = std::polar(std::sqrt(sources[i].power), uniform_phase(rng));
    CMat a(n_antennas, static_cast<Eigen::Index>(sources.size()));
    for (std::size_t i = 0; i < sources.size(); ++i) a.col(static_cast<Eigen::Index>(i)) = *sources[i].response;
    y.noalias() += a * coeff;
  }
  return y;
}

/// Exact covariance of the silent-phase model above (genie mode).
inline CMat silent_phase_covariance(Eigen::Index n_antennas, std::span<const DirectionalSource> sources,
                                    double diffuse_power) {
  CMat r = diffuse_power * CMat::Identity(n_antennas, n_antennas);
  for (const DirectionalSource& s : sources) r.noalias() += s.power * (*s.response) * s.response->adjoint();
  return r;
}

/// (I - E Eᴴ) h
template <class Derived>
CMat project_out(const CMat& basis, const Eigen::MatrixBase<Derived>& h) {
  if (basis.cols() == 0) return h;
  return h - basis * (basis.adjoint() * h);
}

/// Fraction of a channel covariance's energy inside span(E).
inline double subspace_energy_fraction(const CMat& basis, const CMat& channel_covariance) {
  const double total = channel_covariance.trace().real();
  if (basis.cols() == 0 || total <= 0.0) return 0.0;
  return (basis.adjoint() * channel_covariance * basis).trace().real() / total;
}

inline constexpr double kCovarianceAidedThreshold = 0.5;

/// Projects an LS estimate off the inter-cell subspace unless the serving
/// channel itself keeps at least half of its energy there, in which case the
/// LS estimate is returned unchanged.
inline CVec estimate_covariance_aided(const CVec& ls_estimate, const InterCellSubspace& subspace,
                                      double serving_energy_fraction) {
  if (subspace.n_nulls() == 0 || serving_energy_fraction >= kCovarianceAidedThreshold) return ls_estimate;
  return project_out(subspace.basis, ls_estimate);
}

/// Batch covariance-aided estimation: LS per cell, then the projection rule.
/// `serving_fraction(cell, user)` supplies tr(EᴴR_kE)/tr(R_k) from the
/// serving user's channel statistics.
template <class ChannelFn, class PowerFn, class FractionFn>
CsiSet estimate_channels_covariance_aided(ChannelFn&& channel, const PilotMap& pilots, PowerFn&& power,
                                          std::span<const InterCellSubspace> subspaces,
                                          FractionFn&& serving_fraction, double noise_var, Rng* rng) {
  CsiSet csi = estimate_channels_ls(channel, pilots, power, noise_var, rng);
  for (int c = 0; c < static_cast<int>(csi.size()); ++c) {
    CellCsi& cell = csi[c];
    for (int k = 0; k < static_cast<int>(cell.users.size()); ++k) {
      const CVec ls = cell.estimates.col(k);
      cell.estimates.col(k) = estimate_covariance_aided(ls, subspaces[c], serving_fraction(c, cell.users[k]));
    }
  }
  return csi;
}

// ----- Zero-forcing --------------------------------------------------------

struct LinearFilter {
  CMat matrix;  // precoders: M x K columns; combiners: K x M rows
  bool regularized = false;
};

namespace detail {
// (HᴴH)^{-1} with the ε·I fallback (ε = 1e-8·trace/K) for ill-conditioned Gram matrices.
inline CMat inverse_gram(const CMat& h, bool& regularized) {
  const Eigen::Index k = h.cols();
  CMat gram = h.adjoint() * h;
  Eigen::LLT<CMat> llt(gram);
  regularized = llt.info() != Eigen::Success || !(llt.rcond() > 1e-12);
  if (regularized) {
    const double eps = 1e-8 * gram.trace().real() / static_cast<double>(k);
    gram += CMat::Identity(k, k) * std::max(eps, std::numeric_limits<double>::min());
    llt.compute(gram);
  }
  return llt.solve(CMat::Identity(k, k));
}
}  // namespace detail

/// ZF precoders W = Ĥᴴ(ĤĤᴴ)⁻¹ for estimates stacked as columns (M x K);
/// each column rescaled to carry total_power / K.
inline LinearFilter zf_precoders(const CMat& estimates, double total_power) {
  LinearFilter f;
  const Eigen::Index k = estimates.cols();
  if (k == 0) return f;
  if (k > estimates.rows()) throw SchedulingError("zf_precoders: more users than antennas");
  f.matrix = estimates * detail::inverse_gram(estimates, f.regularized);
  const double per_user = total_power / static_cast<double>(k);
  for (Eigen::Index j = 0; j < k; ++j) f.matrix.col(j) *= std::sqrt(per_user) / f.matrix.col(j).norm();
  return f;
}

/// ZF combiners V = (ĤĤᴴ)⁻¹Ĥ with unit-norm rows.
inline LinearFilter zf_combiners(const CMat& estimates) {
  LinearFilter f;
  const Eigen::Index k = estimates.cols();
  if (k == 0) return f;
  if (k > estimates.rows()) throw SchedulingError("zf_combiners: more users than antennas");
  f.matrix = detail::inverse_gram(estimates, f.regularized) * estimates.adjoint();
  for (Eigen::Index j = 0; j < k; ++j) f.matrix.row(j) /= f.matrix.row(j).norm();
  return f;
}

/// ZF in the orthogonal complement of span(E): both precoders and combiners
/// are blind to the inter-cell subspace.
inline LinearFilter null_projected_zf_precoders(const CMat& estimates, const CMat& basis, double total_power) {
  if (estimates.cols() > estimates.rows() - basis.cols())
    throw SchedulingError("null_projected_zf: users exceed the spatial degrees of freedom left by the nulls");
  return zf_precoders(project_out(basis, estimates), total_power);
}

inline LinearFilter null_projected_zf_combiners(const CMat& estimates, const CMat& basis) {
  if (estimates.cols() > estimates.rows() - basis.cols())
    throw SchedulingError("null_projected_zf: users exceed the spatial degrees of freedom left by the nulls");
  return zf_combiners(project_out(basis, estimates));
}

// ----- SINR ----------------------------------------------------------------

/// Downlink SINR of stream `stream` of cell `serving`. `channel_from_cell[c]`
/// is the user's true channel from cell c; `precoders[c]` holds cell c's
/// columns (possibly empty). Every stream other than the desired one counts
/// as interference, including intra-cell leakage.
inline double downlink_sinr(std::span<const CVec> channel_from_cell, std::span<const CMat> precoders, int serving,
                            int stream, double noise_power) {
  double signal = 0.0;
  double interference = 0.0;
  for (std::size_t c = 0; c < precoders.size(); ++c) {
    if (precoders[c].cols() == 0) continue;
    const Eigen::RowVectorXcd y = channel_from_cell[c].adjoint() * precoders[c];
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      const double p = std::norm(y[j]);
      if (static_cast<int>(c) == serving && j == stream)
        signal = p;
      else
        interference += p;
    }
  }
  return signal / (interference + noise_power);
}

/// Uplink SINR after combining with `combiner` (v, so the output is vᴴy).
inline double uplink_sinr(const CVec& combiner, const CVec& own_channel, double own_power,
                          std::span<const CVec> interferer_channels, std::span<const double> interferer_powers,
                          double noise_power) {
  const double signal = own_power * std::norm(combiner.dot(own_channel));
  double interference = 0.0;
  for (std::size_t j = 0; j < interferer_channels.size(); ++j)
    interference += interferer_powers[j] * std::norm(combiner.dot(interferer_channels[j]));
  return signal / (interference + noise_power * combiner.squaredNorm());
}

}  // namespace uavmimo

#endif  // UAVMIMO_PHY_HPP
