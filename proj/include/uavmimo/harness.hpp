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

#ifndef UAVMIMO_HARNESS_HPP
#define UAVMIMO_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>
#include <boost/version.hpp>
#include "json.hpp"

#include "uavmimo/config.hpp"

namespace uavmimo {

inline constexpr std::string_view kVersion = "1.0.0";
inline constexpr const char* kOutputDirEnv = "SIM_OUTPUT_DIR";

struct RawRow {
  std::uint64_t drop = 0;
  int user_id = 0;
  UserKind kind = UserKind::kGue;
  double height_m = 0.0;
  Mode mode = Mode::kSu;
  int serving_sector = 0;
  int n_prb = 0;
  double rate_bps = 0.0;
  double mean_sinr_db = 0.0;
  bool operator==(const RawRow&) const = default;
};

struct KpiRow {
  std::string scenario;
  std::string mode;
  std::string metric;
  double value = 0.0;
  bool operator==(const KpiRow&) const = default;
};

/// Per-(scenario, mode) sample store. Drops must be added in drop order;
/// merging two accumulators concatenates, so {1..k} ∪ {k+1..N} equals {1..N}.
class ModeAccumulator {
 public:
  void add(const ModeDropResult& r, const DropResult& drop, LinkDirection dir) {
    for (const UserRecord& u : drop.users) {
      const UserModeResult& x = r.users[u.id];
      const double rate = dir == LinkDirection::kDownlink ? x.dl_rate_bps : x.ul_rate_bps;
      (u.kind == UserKind::kUav ? uav_rate_ : gue_rate_).push_back(rate);
    }
    const auto& s = dir == LinkDirection::kDownlink ? r.gue_dl_sinr_db : r.gue_ul_sinr_db;
    gue_sinr_db_.insert(gue_sinr_db_.end(), s.begin(), s.end());
    regularized_ += r.regularized_prbs;
    ++n_drops_;
  }

  void merge(const ModeAccumulator& o) {
    uav_rate_.insert(uav_rate_.end(), o.uav_rate_.begin(), o.uav_rate_.end());
    gue_rate_.insert(gue_rate_.end(), o.gue_rate_.begin(), o.gue_rate_.end());
    gue_sinr_db_.insert(gue_sinr_db_.end(), o.gue_sinr_db_.begin(), o.gue_sinr_db_.end());
    regularized_ += o.regularized_;
    n_drops_ += o.n_drops_;
  }

  /// KPI rows; metrics with no samples are omitted, and a run without
  /// drops has none at all.
  std::vector<KpiRow> kpis(const std::string& scenario, Mode mode, LinkDirection dir, double ccc_threshold) const {
    std::vector<KpiRow> out;
    if (n_drops_ == 0) return out;
    const std::string m(to_string(mode));
    const std::string d(short_name(dir));
    auto row = [&](const std::string& metric, double v) { out.push_back({scenario, m, metric, v}); };
    row("n_drops", static_cast<double>(n_drops_));
    row("n_uav", static_cast<double>(uav_rate_.size()));
    row("n_gue", static_cast<double>(gue_rate_.size()));
    row("regularized_prbs", static_cast<double>(regularized_));
    if (!uav_rate_.empty()) {
      row("uav_" + d + "_ccc_success_pct", ccc_success_percentage(uav_rate_, ccc_threshold));
      row("uav_" + d + "_rate_mean_bps", mean(uav_rate_));
      row("uav_" + d + "_rate_p5_bps", percentile(uav_rate_, 5.0));
    }
    if (!gue_rate_.empty()) {
      row("gue_" + d + "_rate_mean_bps", mean(gue_rate_));
      row("gue_" + d + "_rate_p5_bps", percentile(gue_rate_, 5.0));
    }
    if (!gue_sinr_db_.empty()) {
      std::vector<double> sorted = gue_sinr_db_;
      std::sort(sorted.begin(), sorted.end());
      const double n = static_cast<double>(sorted.size());
      for (int p = 1; p <= 99; ++p) {
        const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(p / 100.0 * n)));
        char name[32];
        std::snprintf(name, sizeof(name), "gue_%s_sinr_db_p%02d", d.c_str(), p);
        row(name, sorted[rank - 1]);
      }
    }
    return out;
  }

  const std::vector<double>& uav_rates() const { return uav_rate_; }
  const std::vector<double>& gue_rates() const { return gue_rate_; }
  const std::vector<double>& gue_sinr_db() const { return gue_sinr_db_; }
  int regularized_prbs() const { return regularized_; }

 private:
  std::vector<double> uav_rate_, gue_rate_, gue_sinr_db_;
  int regularized_ = 0;
  std::uint64_t n_drops_ = 0;
};

struct ScenarioOutcome {
  std::string name;
  PopulationSpec population;
  std::vector<RawRow> raw;
  std::vector<ModeAccumulator> modes;  // parallel to the config's mode list
  int empty_cells = 0;
};

struct ResultsBundle {
  std::string name;
  LinkDirection report = LinkDirection::kDownlink;
  std::uint64_t master_seed = 0;
  std::uint64_t config_hash = 0;
  int n_drops = 0;
  std::vector<Mode> modes;
  std::vector<ScenarioOutcome> scenarios;
  std::vector<KpiRow> kpis;

  int regularized_prbs() const {
    int n = 0;
    for (const auto& s : scenarios)
      for (const auto& m : s.modes) n += m.regularized_prbs();
    return n;
  }
  int empty_cells() const {
    int n = 0;
    for (const auto& s : scenarios) n += s.empty_cells;
    return n;
  }
  const ModeAccumulator& at(std::string_view scenario, Mode mode) const {
    for (const auto& s : scenarios) {
      if (s.name != scenario) continue;
      for (std::size_t i = 0; i < modes.size(); ++i)
        if (modes[i] == mode) return s.modes[i];
    }
    throw ArgumentError("no results for scenario '" + std::string(scenario) + "' mode " + std::string(to_string(mode)));
  }
};

struct RunManifest {
  std::string config_hash;
  std::vector<std::string> files;
  double wall_clock_s = 0.0;
  int threads = 1;
  int regularized_prbs = 0;
  int empty_cells = 0;
};

/// Runs compute(i) for i in [0, n) on `threads` workers and hands results to
/// consume() strictly in index order on the calling thread.
template <class T, class Compute, class Consume>
void ordered_parallel(int n, int threads, Compute&& compute, Consume&& consume) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) consume(compute(i));
    return;
  }
  std::mutex mu;
  std::condition_variable cv;
  std::map<int, T> ready;
  std::exception_ptr error;
  std::atomic<int> next{0};
  int consumed = 0;
  const int max_backlog = 4 * threads;

  auto worker = [&] {
    while (true) {
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return error || next.load() - consumed < max_backlog || next.load() >= n; });
        if (error) return;
      }
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        T r = compute(i);
        std::lock_guard lock(mu);
        ready.emplace(i, std::move(r));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
      cv.notify_all();
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  try {
    while (consumed < n) {
      T item;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return error || ready.count(consumed) > 0; });
        if (error) break;
        auto it = ready.find(consumed);
        item = std::move(it->second);
        ready.erase(it);
      }
      consume(std::move(item));
      {
        std::lock_guard lock(mu);
        ++consumed;
      }
      cv.notify_all();
    }
  } catch (...) {
    std::lock_guard lock(mu);
    if (!error) error = std::current_exception();
  }
  cv.notify_all();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Monte-Carlo loop over drops for every sweep point. Drop d of every sweep
/// point uses substreams keyed by (master_seed, d).
inline ResultsBundle run_scenario(const ScenarioConfig& cfg,
                                  const std::function<void(const std::string&, int)>& progress = {}) {
  cfg.validate();
  const SimParams params = cfg.sim_params();
  const NetworkLayout layout = build_layout(cfg.n_rings, cfg.isd_m, cfg.bs_height_m);
  const int threads = resolve_threads(cfg.threads);

  ResultsBundle bundle;
  bundle.name = cfg.name;
  bundle.report = cfg.report;
  bundle.master_seed = cfg.master_seed;
  bundle.config_hash = config_hash(cfg);
  bundle.n_drops = cfg.n_drops;
  bundle.modes = cfg.modes;
  const bool dl = cfg.report == LinkDirection::kDownlink;

  for (const SweepPoint& point : cfg.sweep) {
    ScenarioOutcome out;
    out.name = point.name;
    out.population = point.population;
    out.modes.resize(cfg.modes.size());
    ordered_parallel<DropResult>(
        cfg.n_drops, threads,
        [&](int d) {
          DropResult r = simulate_drop(layout, params, point.population, cfg.modes, cfg.master_seed,
                                       static_cast<std::uint64_t>(d));
          for (ModeDropResult& m : r.modes) (dl ? m.gue_ul_sinr_db : m.gue_dl_sinr_db).clear();
          return r;
        },
        [&](DropResult&& r) {
          for (std::size_t i = 0; i < cfg.modes.size(); ++i) {
            const ModeDropResult& m = r.modes[i];
            out.modes[i].add(m, r, cfg.report);
            for (const UserRecord& u : r.users) {
              const UserModeResult& x = m.users[u.id];
              out.raw.push_back({r.drop, u.id, u.kind, u.height, cfg.modes[i], u.serving_sector, x.n_prb,
                                 dl ? x.dl_rate_bps : x.ul_rate_bps, dl ? x.dl_mean_sinr_db : x.ul_mean_sinr_db});
            }
          }
          out.empty_cells += r.empty_cells;
          if (progress) progress(point.name, static_cast<int>(r.drop));
        });
    for (std::size_t i = 0; i < cfg.modes.size(); ++i) {
      auto rows = out.modes[i].kpis(out.name, cfg.modes[i], cfg.report, cfg.ccc_threshold_bps);
      bundle.kpis.insert(bundle.kpis.end(), rows.begin(), rows.end());
    }
    bundle.scenarios.push_back(std::move(out));
  }
  return bundle;
}

// ----- persistence ---------------------------------------------------------------

inline std::string kpi_csv(const ResultsBundle& b) {
  std::string s = "scenario,mode,metric,value\n";
  for (const KpiRow& r : b.kpis) s += r.scenario + "," + r.mode + "," + r.metric + "," + detail::format_number(r.value) + "\n";
  return s;
}

inline std::string raw_csv(const ScenarioOutcome& o) {
  std::string s = "drop,user_id,kind,height_m,mode,serving_sector,n_prb,rate_bps,mean_sinr_db\n";
  for (const RawRow& r : o.raw) {
    s += std::to_string(r.drop) + "," + std::to_string(r.user_id) + "," + std::string(to_string(r.kind)) + "," +
         detail::format_number(r.height_m) + "," + std::string(to_string(r.mode)) + "," +
         std::to_string(r.serving_sector) + "," + std::to_string(r.n_prb) + "," + detail::format_number(r.rate_bps) +
         "," + (std::isnan(r.mean_sinr_db) ? std::string("nan") : detail::format_number(r.mean_sinr_db)) + "\n";
  }
  return s;
}

inline std::string raw_file_name(const std::string& scenario, LinkDirection d) {
  return "raw_" + scenario + "_" + std::string(short_name(d)) + ".csv";
}

/// Writes via a sibling temp file and rename, so readers never see a
/// partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(tmp.string(), "cannot open for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) throw IoError(tmp.string(), "write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError(path.string(), "rename failed");
  }
}

/// Output directory of a run: $SIM_OUTPUT_DIR (if set) or cfg.output_dir,
/// then the run name.
inline std::filesystem::path run_output_dir(const ScenarioConfig& cfg) {
  const char* env = std::getenv(kOutputDirEnv);
  const std::filesystem::path base = (env && *env) ? std::filesystem::path(env) : std::filesystem::path(cfg.output_dir);
  return base / cfg.name;
}

inline nlohmann::json metadata_json(const ResultsBundle& b, const RunManifest& m) {
  nlohmann::json j;
  j["name"] = b.name;
  j["master_seed"] = b.master_seed;
  j["config_hash"] = m.config_hash;
  j["n_drops"] = b.n_drops;
  j["report"] = std::string(to_string(b.report));
  std::vector<std::string> modes;
  for (Mode x : b.modes) modes.emplace_back(to_string(x));
  j["modes"] = modes;
  std::vector<std::string> scen;
  for (const auto& s : b.scenarios) scen.push_back(s.name);
  j["scenarios"] = scen;
  j["flagged"] = {{"regularized_prbs", m.regularized_prbs}, {"empty_cells", m.empty_cells}};
  j["files"] = m.files;
  j["wall_clock_s"] = m.wall_clock_s;
  j["threads"] = m.threads;
  j["versions"] = {{"uavmimo", std::string(kVersion)},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) +
                                 "." + std::to_string(BOOST_VERSION % 100)},
                   {"compiler", __VERSION__}};
  return j;
}

/// Writes kpi.csv, one raw CSV per scenario and metadata.json into `dir`.
inline RunManifest emit_results(const ResultsBundle& b, RunManifest m, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError(dir.string(), "cannot create output directory");
  m.config_hash = hex64(b.config_hash);
  m.regularized_prbs = b.regularized_prbs();
  m.empty_cells = b.empty_cells();
  m.files.clear();
  write_atomic(dir / "kpi.csv", kpi_csv(b));
  m.files.push_back("kpi.csv");
  for (const ScenarioOutcome& s : b.scenarios) {
    const std::string f = raw_file_name(s.name, b.report);
    write_atomic(dir / f, raw_csv(s));
    m.files.push_back(f);
  }
  m.files.push_back("metadata.json");
  write_atomic(dir / "metadata.json", metadata_json(b, m).dump(2) + "\n");
  return m;
}

/// Parses a KPI CSV back into rows.
inline std::vector<KpiRow> read_kpi_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError(path.string(), "cannot open for reading");
  std::string line;
  std::getline(f, line);
  if (line != "scenario,mode,metric,value") throw IoError(path.string(), "unexpected header");
  std::vector<KpiRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    if (cols.size() != 4) throw IoError(path.string(), "malformed row: " + line);
    rows.push_back({cols[0], cols[1], cols[2], detail::parse_number("kpi.value", cols[3])});
  }
  return rows;
}

}  // namespace uavmimo

#endif  // UAVMIMO_HARNESS_HPP
