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

#ifndef UAVMIMO_CONFIG_HPP
#define UAVMIMO_CONFIG_HPP

#include <array>
#include <charconv>
#include <cstdio>
#include <optional>
#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "uavmimo/engine.hpp"

namespace uavmimo {

enum class LinkDirection { kDownlink, kUplink };

inline std::string_view to_string(LinkDirection d) { return d == LinkDirection::kDownlink ? "downlink" : "uplink"; }
inline std::string_view short_name(LinkDirection d) { return d == LinkDirection::kDownlink ? "dl" : "ul"; }

inline LinkDirection parse_direction(std::string_view s) {
  if (s == "downlink" || s == "dl") return LinkDirection::kDownlink;
  if (s == "uplink" || s == "ul") return LinkDirection::kUplink;
  throw ConfigError("run.report", "expected downlink or uplink, got '" + std::string(s) + "'");
}

/// One point of a parameter sweep: a named population.
struct SweepPoint {
  std::string name;
  PopulationSpec population;
  bool operator==(const SweepPoint&) const = default;
};

struct ScenarioConfig {
  std::string name = "custom";
  // run
  int n_drops = 200;
  std::uint64_t master_seed = 42;
  std::string output_dir = "results";
  int threads = 0;  // 0: hardware concurrency
  LinkDirection report = LinkDirection::kDownlink;
  double ccc_threshold_bps = 100e3;
  // layout
  int n_rings = 2;
  double isd_m = 500.0;
  double bs_height_m = 25.0;
  double downtilt_deg = 12.0;
  // population
  DropOptions drop;
  // channel / phy
  ChannelParams channel;
  PowerConfig power;
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
  bool exact_links = false;
  // sweep
  std::vector<Mode> modes{kAllModes.begin(), kAllModes.end()};
  std::vector<SweepPoint> sweep{{"default", {}}};

  bool operator==(const ScenarioConfig&) const = default;

  SimParams sim_params() const {
    SimParams p;
    p.channel = channel;
    p.power = power;
    p.drop = drop;
    p.n_prb = n_prb;
    p.n_nulls = n_nulls;
    p.pilot_length = pilot_length;
    p.symbols_per_prb = symbols_per_prb;
    p.group_size = group_size;
    p.grouping = grouping;
    p.silent_samples = silent_samples;
    p.genie_covariance = genie_covariance;
    p.su_pilot_overhead = su_pilot_overhead;
    p.se_cap = se_cap;
    p.exact_links = exact_links;
    p.su_array = su_panel(downtilt_deg);
    p.mimo_array = mmimo_panel(downtilt_deg);
    return p;
  }

  void validate() const {
    if (name.empty() || name.find_first_of("/\\ \t") != std::string::npos)
      throw ConfigError("run.name", "must be a non-empty token without slashes or spaces");
    if (n_drops < 0) throw ConfigError("run.n_drops", "must be non-negative");
    if (threads < 0) throw ConfigError("run.threads", "must be non-negative");
    if (!(ccc_threshold_bps >= 0.0)) throw ConfigError("run.ccc_threshold_bps", "must be non-negative");
    if (n_rings < 0 || n_rings > 4) throw ConfigError("layout.n_rings", "must lie in [0, 4]");
    if (!(isd_m > 0.0)) throw ConfigError("layout.isd_m", "must be positive");
    if (!(bs_height_m > 0.0)) throw ConfigError("layout.bs_height_m", "must be positive");
    if (!(drop.indoor_ratio >= 0.0 && drop.indoor_ratio <= 1.0))
      throw ConfigError("population.indoor_ratio", "must lie in [0, 1]");
    if (!(drop.min_distance >= 0.0 && drop.min_distance < isd_m / 2.0))
      throw ConfigError("population.min_distance_m", "must lie in [0, isd/2)");
    if (!(channel.carrier_ghz > 0.0)) throw ConfigError("channel.carrier_ghz", "must be positive");
    if (modes.empty()) throw ConfigError("modes.list", "at least one mode required");
    for (std::size_t i = 0; i < modes.size(); ++i)
      for (std::size_t j = i + 1; j < modes.size(); ++j)
        if (modes[i] == modes[j]) throw ConfigError("modes.list", "duplicate mode " + std::string(to_string(modes[i])));
    if (sweep.empty()) throw ConfigError("scenario", "at least one [scenario:NAME] section required");
    for (std::size_t i = 0; i < sweep.size(); ++i) {
      const SweepPoint& s = sweep[i];
      const std::string f = "scenario:" + s.name;
      if (s.name.empty() || s.name.find_first_of("/\\ \t.") != std::string::npos)
        throw ConfigError(f, "scenario names must be non-empty tokens without dots, slashes or spaces");
      for (std::size_t j = i + 1; j < sweep.size(); ++j)
        if (sweep[j].name == s.name) throw ConfigError(f, "duplicate scenario name");
      if (s.population.n_gue < 0 || s.population.n_uav < 0 || s.population.n_gue + s.population.n_uav < 1)
        throw ConfigError(f + ".n_gue", "need at least one user per sector");
      try {
        s.population.uav_height.validate();
      } catch (const ConfigError& e) {
        throw ConfigError(f + ".uav_height", e.what());
      }
    }
    sim_params().validate();
  }
};

// ----- text form ------------------------------------------------------------

namespace detail {

inline std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

inline double parse_number(const std::string& field, std::string_view s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ConfigError(field, "not a number: '" + std::string(s) + "'");
  return v;
}

template <class Int>
Int parse_integer(const std::string& field, std::string_view s) {
  Int v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ConfigError(field, "not an integer: '" + std::string(s) + "'");
  return v;
}

inline bool parse_bool(const std::string& field, std::string_view s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError(field, "expected true or false, got '" + std::string(s) + "'");
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

inline std::string format_height(const HeightSpec& h) {
  if (h.kind == HeightSpec::Kind::kFixed) return "fixed:" + detail::format_number(h.lo);
  return "uniform:" + detail::format_number(h.lo) + ":" + detail::format_number(h.hi);
}

inline HeightSpec parse_height(const std::string& field, std::string_view s) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto p = s.find(':', start);
    parts.push_back(detail::trim(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start)));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  if (parts.size() == 2 && parts[0] == "fixed") return HeightSpec::fixed(detail::parse_number(field, parts[1]));
  if (parts.size() == 3 && parts[0] == "uniform")
    return HeightSpec::uniform(detail::parse_number(field, parts[1]), detail::parse_number(field, parts[2]));
  throw ConfigError(field, "expected fixed:H or uniform:LO:HI, got '" + std::string(s) + "'");
}

/// Canonical text form; parse_config(to_text(c)) == c.
inline std::string to_text(const ScenarioConfig& c) {
  using detail::format_number;
  std::ostringstream o;
  auto b = [](bool v) { return v ? "true" : "false"; };
  o << "[run]\n"
    << "name = " << c.name << "\n"
    << "n_drops = " << c.n_drops << "\n"
    << "master_seed = " << c.master_seed << "\n"
    << "output_dir = " << c.output_dir << "\n"
    << "threads = " << c.threads << "\n"
    << "report = " << to_string(c.report) << "\n"
    << "ccc_threshold_bps = " << format_number(c.ccc_threshold_bps) << "\n\n";
  o << "[layout]\n"
    << "n_rings = " << c.n_rings << "\n"
    << "isd_m = " << format_number(c.isd_m) << "\n"
    << "bs_height_m = " << format_number(c.bs_height_m) << "\n"
    << "downtilt_deg = " << format_number(c.downtilt_deg) << "\n\n";
  o << "[population]\n"
    << "indoor_ratio = " << format_number(c.drop.indoor_ratio) << "\n"
    << "min_distance_m = " << format_number(c.drop.min_distance) << "\n\n";
  o << "[channel]\n"
    << "carrier_ghz = " << format_number(c.channel.carrier_ghz) << "\n"
    << "indoor_loss_db = " << format_number(c.channel.indoor_loss_db) << "\n"
    << "k_gue_los_db = " << format_number(c.channel.k_gue_los_db) << "\n"
    << "k_uav_low_db = " << format_number(c.channel.k_uav_low_db) << "\n"
    << "k_uav_high_db = " << format_number(c.channel.k_uav_high_db) << "\n"
    << "shadowing = " << b(c.channel.shadowing) << "\n\n";
  o << "[phy]\n"
    << "bs_tx_power_dbm = " << format_number(c.power.bs_tx_power_dbm) << "\n"
    << "ue_max_power_dbm = " << format_number(c.power.ue_max_power_dbm) << "\n"
    << "p0_dbm = " << format_number(c.power.p0_dbm) << "\n"
    << "alpha = " << format_number(c.power.alpha) << "\n"
    << "noise_figure_bs_db = " << format_number(c.power.noise_figure_bs_db) << "\n"
    << "noise_figure_ue_db = " << format_number(c.power.noise_figure_ue_db) << "\n"
    << "prb_bandwidth_hz = " << format_number(c.power.bandwidth_per_prb_hz) << "\n"
    << "n_prb = " << c.n_prb << "\n"
    << "n_nulls = " << c.n_nulls << "\n"
    << "pilot_length = " << c.pilot_length << "\n"
    << "symbols_per_prb = " << c.symbols_per_prb << "\n"
    << "group_size = " << c.group_size << "\n"
    << "grouping = " << to_string(c.grouping) << "\n"
    << "silent_samples = " << c.silent_samples << "\n"
    << "genie_covariance = " << b(c.genie_covariance) << "\n"
    << "su_pilot_overhead = " << b(c.su_pilot_overhead) << "\n"
    << "se_cap = " << format_number(c.se_cap) << "\n"
    << "exact_links = " << b(c.exact_links) << "\n\n";
  o << "[modes]\nlist = ";
  for (std::size_t i = 0; i < c.modes.size(); ++i) o << (i ? "," : "") << to_string(c.modes[i]);
  o << "\n";
  for (const SweepPoint& s : c.sweep) {
    o << "\n[scenario:" << s.name << "]\n"
      << "n_gue = " << s.population.n_gue << "\n"
      << "n_uav = " << s.population.n_uav << "\n"
      << "uav_height = " << format_height(s.population.uav_height) << "\n";
  }
  return o.str();
}

/// Parses the INI text form. Missing keys keep their defaults; unknown
/// sections or keys are errors.
inline ScenarioConfig parse_config(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config", std::string("malformed INI: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  ScenarioConfig c;
  bool sweep_seen = false;
  for (const auto& [section, body] : tree) {
    auto for_keys = [&](auto&& apply) {
      for (const auto& [key, node] : body) {
        const std::string field = section + "." + key;
        if (!node.empty()) throw ConfigError(field, "nested keys are not supported");
        apply(key, field, detail::trim(node.data()));
      }
    };
    auto unknown = [](const std::string& field) { throw ConfigError(field, "unknown key"); };
    using detail::parse_bool;
    using detail::parse_integer;
    using detail::parse_number;

    if (section == "run") {
      for_keys([&](const std::string& k, const std::string& f, const std::string& v) {
        if (k == "name") c.name = v;
        else if (k == "n_drops") c.n_drops = parse_integer<int>(f, v);
        else if (k == "master_seed") c.master_seed = parse_integer<std::uint64_t>(f, v);
        else if (k == "output_dir") c.output_dir = v;
        else if (k == "threads") c.threads = parse_integer<int>(f, v);
        else if (k == "report") c.report = parse_direction(v);
        else if (k == "ccc_threshold_bps") c.ccc_threshold_bps = parse_number(f, v);
        else unknown(f);
      });
    } else if (section == "layout") {
      for_keys([&](const std::string& k, const std::string& f, const std::string& v) {
        if (k == "n_rings") c.n_rings = parse_integer<int>(f, v);
        else if (k == "isd_m") c.isd_m = parse_number(f, v);
        else if (k == "bs_height_m") c.bs_height_m = parse_number(f, v);
        else if (k == "downtilt_deg") c.downtilt_deg = parse_number(f, v);
        else unknown(f);
      });
    } else if (section == "population") {
      for_keys([&](const std::string& k, const std::string& f, const std::string& v) {
        if (k == "indoor_ratio") c.drop.indoor_ratio = parse_number(f, v);
        else if (k == "min_distance_m") c.drop.min_distance = parse_number(f, v);
        else unknown(f);
      });
    } else if (section == "channel") {
      for_keys([&](const std::string& k, const std::string& f, const std::string& v) {
        if (k == "carrier_ghz") c.channel.carrier_ghz = parse_number(f, v);
        else if (k == "indoor_loss_db") c.channel.indoor_loss_db = parse_number(f, v);
        else if (k == "k_gue_los_db") c.channel.k_gue_los_db = parse_number(f, v);
        else if (k == "k_uav_low_db") c.channel.k_uav_low_db = parse_number(f, v);
        else if (k == "k_uav_high_db") c.channel.k_uav_high_db = parse_number(f, v);
        else if (k == "shadowing") c.channel.shadowing = parse_bool(f, v);
        else unknown(f);
      });
    } else if (section == "phy") {
      for_keys([&](const std::string& k, const std::string& f, const std::string& v) {
        if (k == "bs_tx_power_dbm") c.power.bs_tx_power_dbm = parse_number(f, v);
        else if (k == "ue_max_power_dbm") c.power.ue_max_power_dbm = parse_number(f, v);
        else if (k == "p0_dbm") c.power.p0_dbm = parse_number(f, v);
        else if (k == "alpha") c.power.alpha = parse_number(f, v);
        else if (k == "noise_figure_bs_db") c.power.noise_figure_bs_db = parse_number(f, v);
        else if (k == "noise_figure_ue_db") c.power.noise_figure_ue_db = parse_number(f, v);
        else if (k == "prb_bandwidth_hz") c.power.bandwidth_per_prb_hz = parse_number(f, v);
        else if (k == "n_prb") c.n_prb = parse_integer<int>(f, v);
        else if (k == "n_nulls") c.n_nulls = parse_integer<int>(f, v);
        else if (k == "pilot_length") c.pilot_length = parse_integer<int>(f, v);
        else if (k == "symbols_per_prb") c.symbols_per_prb = parse_integer<int>(f, v);
        else if (k == "group_size") c.group_size = parse_integer<int>(f, v);
        else if (k == "grouping") c.grouping = parse_group_policy(v);
        else if (k == "silent_samples") c.silent_samples = parse_integer<int>(f, v);
        else if (k == "genie_covariance") c.genie_covariance = parse_bool(f, v);
        else if (k == "su_pilot_overhead") c.su_pilot_overhead = parse_bool(f, v);
        else if (k == "se_cap") c.se_cap = parse_number(f, v);
        else if (k == "exact_links") c.exact_links = parse_bool(f, v);
        else unknown(f);
      });
    } else if (section == "modes") {
      for_keys([&](const std::string& k, const std::string& f, const std::string& v) {
        if (k != "list") unknown(f);
        c.modes.clear();
        std::size_t start = 0;
        while (start <= v.size()) {
          const auto p = v.find(',', start);
          const std::string tok = detail::trim(std::string_view(v).substr(start, p == std::string::npos ? std::string::npos : p - start));
          if (!tok.empty()) {
            const std::optional<Mode> mode = parse_mode(tok);
            if (!mode) throw ConfigError(f, "unknown mode '" + tok + "'");
            c.modes.push_back(*mode);
          }
          if (p == std::string::npos) break;
          start = p + 1;
        }
      });
    } else if (section.rfind("scenario:", 0) == 0) {
      if (!sweep_seen) c.sweep.clear();
      sweep_seen = true;
      SweepPoint s;
      s.name = section.substr(9);
      for_keys([&](const std::string& k, const std::string& f, const std::string& v) {
        if (k == "n_gue") s.population.n_gue = parse_integer<int>(f, v);
        else if (k == "n_uav") s.population.n_uav = parse_integer<int>(f, v);
        else if (k == "uav_height") s.population.uav_height = parse_height(f, v);
        else unknown(f);
      });
      c.sweep.push_back(std::move(s));
    } else if (body.empty() && !body.data().empty()) {
      throw ConfigError(section, "top-level keys must live in a section");
    } else {
      throw ConfigError(section, "unknown section");
    }
  }
  return c;
}

/// FNV-1a over the canonical text form.
inline std::uint64_t config_hash(const ScenarioConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_text(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ----- presets -----------------------------------------------------------------

inline constexpr std::array<std::string_view, 4> kPresetNames{"fig2", "fig3", "fig4", "fig5"};

/// Full configuration for each figure's experiment (15 devices per cell).
inline ScenarioConfig preset(std::string_view name) {
  ScenarioConfig c;
  c.name = std::string(name);
  c.sweep.clear();
  if (name == "fig2") {
    c.report = LinkDirection::kDownlink;
    c.modes = {Mode::kSu, Mode::kSuAaUav, Mode::kMmimo, Mode::kMmimoAaUav, Mode::kMmimoNulls};
    for (int h : {15, 75, 150, 300})
      c.sweep.push_back({"h" + std::to_string(h), {14, 1, HeightSpec::fixed(h)}});
  } else if (name == "fig3") {
    c.report = LinkDirection::kDownlink;
    c.modes = {Mode::kMmimo, Mode::kMmimoAaUav, Mode::kMmimoNulls};
    c.sweep.push_back({"no_uav", {15, 0, HeightSpec::fixed(150.0)}});
    c.sweep.push_back({"uav_h150", {14, 1, HeightSpec::fixed(150.0)}});
  } else if (name == "fig4" || name == "fig5") {
    c.report = LinkDirection::kUplink;
    c.modes = {kAllModes.begin(), kAllModes.end()};
    for (int n = 1; n <= 5; ++n)
      c.sweep.push_back({"uav" + std::to_string(n), {15 - n, n, HeightSpec::uniform(kMinUserHeight, kMaxUavHeight)}});
  } else {
    std::string list;
    for (auto p : kPresetNames) list += (list.empty() ? "" : ", ") + std::string(p);
    throw ArgumentError("unknown preset '" + std::string(name) + "'; available presets: " + list);
  }
  return c;
}

}  // namespace uavmimo

#endif  // UAVMIMO_CONFIG_HPP
