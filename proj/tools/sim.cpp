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

// sim: command-line front end of the drop simulator.
//
//   sim run --preset fig2 --drops 200 --seed 42 --out results/
//   sim run --config my.ini [--dump-config]
//   sim presets
//   sim validate --config my.ini
//   sim links --preset fig2 --scenario h150 --drop 0 --csv links.csv
//
// Exit codes: 0 success, 1 other failure, 2 usage/config error, 3 I/O error.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "uavmimo/harness.hpp"

namespace {

using namespace uavmimo;

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError(path, "cannot open config file");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

struct Source {
  std::string preset;
  std::string config;
};

ScenarioConfig load(const Source& src) {
  if (!src.preset.empty() && !src.config.empty()) throw ArgumentError("--preset and --config are exclusive");
  if (!src.preset.empty()) return preset(src.preset);
  if (!src.config.empty()) return parse_config(read_file(src.config));
  throw ArgumentError("one of --preset or --config is required");
}

struct Overrides {
  std::optional<int> drops;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::optional<int> rings;
  std::optional<std::string> name;

  void apply(ScenarioConfig& c) const {
    if (drops) c.n_drops = *drops;
    if (seed) c.master_seed = *seed;
    if (out) c.output_dir = *out;
    if (threads) c.threads = *threads;
    if (rings) c.n_rings = *rings;
    if (name) c.name = *name;
  }
};

int cmd_run(const Source& src, const Overrides& ov, bool dump_only, bool quiet) {
  ScenarioConfig cfg = load(src);
  ov.apply(cfg);
  cfg.validate();
  if (dump_only) {
    std::cout << to_text(cfg);
    return 0;
  }
  const auto dir = run_output_dir(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  int done = 0;
  const int total = cfg.n_drops * static_cast<int>(cfg.sweep.size());
  ResultsBundle b = run_scenario(cfg, [&](const std::string& scenario, int drop) {
    ++done;
    if (!quiet && (drop + 1 == cfg.n_drops || done % 10 == 0))
      std::fprintf(stderr, "\r[%s] %s drop %d/%d (%d/%d)   ", cfg.name.c_str(), scenario.c_str(), drop + 1,
                   cfg.n_drops, done, total);
  });
  if (!quiet && total > 0) std::fprintf(stderr, "\n");
  RunManifest m;
  m.threads = resolve_threads(cfg.threads);
  m.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  m = emit_results(b, m, dir);
  std::printf("%s: %d drops x %zu scenarios in %.1f s -> %s (config %s, %d regularized PRBs)\n", cfg.name.c_str(),
              cfg.n_drops, cfg.sweep.size(), m.wall_clock_s, dir.string().c_str(), m.config_hash.c_str(),
              m.regularized_prbs);
  return 0;
}

int cmd_links(const Source& src, const Overrides& ov, const std::string& scenario, int drop, const std::string& out) {
  ScenarioConfig cfg = load(src);
  ov.apply(cfg);
  cfg.validate();
  const SweepPoint* point = nullptr;
  for (const auto& s : cfg.sweep)
    if (s.name == scenario || (scenario.empty() && !point)) point = &s;
  if (!point) throw ArgumentError("unknown scenario '" + scenario + "'");
  const SimParams params = cfg.sim_params();
  const NetworkLayout layout = build_layout(cfg.n_rings, cfg.isd_m, cfg.bs_height_m);
  DropSimulator sim(layout, params, point->population, cfg.master_seed, static_cast<std::uint64_t>(drop));
  std::ostringstream s;
  write_channel_dump(s, sim.links().links);
  if (out.empty() || out == "-") {
    std::cout << s.str();
  } else {
    write_atomic(out, s.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-cell TDD system-level simulator for ground users and UAVs"};
  app.require_subcommand(1);

  Source src;
  Overrides ov;
  bool dump_config = false;
  bool quiet = false;
  auto add_source = [&](CLI::App* c) {
    c->add_option("--preset", src.preset, "Preset name (fig2, fig3, fig4, fig5)");
    c->add_option("--config", src.config, "INI configuration file");
  };
  auto add_overrides = [&](CLI::App* c) {
    c->add_option("--drops", ov.drops, "Number of Monte-Carlo drops");
    c->add_option("--seed", ov.seed, "Master seed");
    c->add_option("--out", ov.out, "Output base directory (" + std::string(kOutputDirEnv) + " takes precedence)");
    c->add_option("--threads", ov.threads, "Worker threads (0 = all cores)");
    c->add_option("--rings", ov.rings, "Hexagonal rings around the centre site");
    c->add_option("--name", ov.name, "Run name (output subdirectory)");
  };

  CLI::App* run = app.add_subcommand("run", "Run a preset or configuration file");
  add_source(run);
  add_overrides(run);
  run->add_flag("--dump-config", dump_config, "Print the fully-resolved configuration and exit");
  run->add_flag("--quiet", quiet, "No progress output");

  CLI::App* presets = app.add_subcommand("presets", "List available presets");

  CLI::App* validate = app.add_subcommand("validate", "Check a configuration file");
  std::string validate_path;
  validate->add_option("--config", validate_path, "INI configuration file")->required();

  CLI::App* links = app.add_subcommand("links", "Dump the large-scale link table of one drop as CSV");
  add_source(links);
  add_overrides(links);
  std::string link_scenario, link_out;
  int link_drop = 0;
  links->add_option("--scenario", link_scenario, "Sweep point (default: first)");
  links->add_option("--drop", link_drop, "Drop index");
  links->add_option("--csv", link_out, "Output CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(src, ov, dump_config, quiet);
    if (*presets) {
      for (auto name : kPresetNames) {
        const ScenarioConfig c = preset(name);
        std::printf("%-5s %-8s %zu sweep points, %zu modes, %d drops\n", c.name.c_str(),
                    std::string(to_string(c.report)).c_str(), c.sweep.size(), c.modes.size(), c.n_drops);
      }
      return 0;
    }
    if (*validate) {
      const ScenarioConfig c = parse_config(read_file(validate_path));
      c.validate();
      std::printf("%s: ok (config %s)\n", validate_path.c_str(), hex64(config_hash(c)).c_str());
      return 0;
    }
    if (*links) return cmd_links(src, ov, link_scenario, link_drop, link_out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const ArgumentError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return 0;
}
