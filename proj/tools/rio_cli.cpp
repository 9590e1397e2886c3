#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rio/geometry.hpp"
#include "rio/reports.hpp"
#include "rio/simulation.hpp"

namespace {

struct CommonOptions {
  std::string geometry_path;
  std::string config_path;
  std::string out_dir = "out";
  rio::RunConfig config;
};

rio::Geometry load_or_default(const std::string& path) {
  if (path.empty()) return rio::make_case_study();
  return rio::load_geometry(path);
}

void apply_config_file(rio::RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  in >> j;
  auto get = [&](const char* section, const char* key, auto& target) {
    if (j.contains(section) && j[section].contains(key)) {
      target = j[section][key].template get<std::decay_t<decltype(target)>>();
    }
  };
  get("scenario", "volume_vphpl", cfg.scenario.volume_vphpl);
  get("scenario", "cav_ratio", cfg.scenario.cav_ratio);
  get("scenario", "duration_s", cfg.scenario.duration_s);
  get("scenario", "seed", cfg.scenario.seed);
  get("scenario", "opt_hz", cfg.scenario.opt_hz);
  get("scenario", "drain", cfg.scenario.drain);
  get("signal", "g_min_s", cfg.signal.g_min);
  get("signal", "g_max_s", cfg.signal.g_max);
  get("signal", "yellow_s", cfg.signal.yellow);
  get("signal", "all_red_s", cfg.signal.all_red);
  get("signal", "sat_headway_s", cfg.signal.sat_headway);
  get("signal", "startup_lost_s", cfg.signal.startup_lost);
  get("signal", "cnv_headway_factor", cfg.signal.cnv_headway_factor);
  if (j.contains("signal") && j["signal"].contains("green_formula")) {
    const auto f = rio::green_formula_from_string(j["signal"]["green_formula"].get<std::string>());
    if (!f) throw std::runtime_error("unknown green_formula in config file");
    cfg.signal.green_formula = *f;
  }
  get("trajectory", "degree", cfg.trajectory.degree);
  get("trajectory", "control_points", cfg.trajectory.control_points);
  if (j.contains("trajectory") && j["trajectory"].contains("headway_mode")) {
    const auto m = rio::headway_mode_from_string(j["trajectory"]["headway_mode"].get<std::string>());
    if (!m) throw std::runtime_error("unknown headway_mode in config file");
    cfg.trajectory.headway_mode = *m;
  }
  get("kinematics", "cav_a_max", cfg.kinematics.cav_a_max);
  get("kinematics", "cav_a_min", cfg.kinematics.cav_a_min);
  get("kinematics", "cav_j_max", cfg.kinematics.cav_j_max);
  get("kinematics", "cav_j_min", cfg.kinematics.cav_j_min);
  get("kinematics", "cnv_a_acc", cfg.kinematics.cnv_a_acc);
  get("kinematics", "cnv_a_dec", cfg.kinematics.cnv_a_dec);
  get("kinematics", "cnv_reaction_s", cfg.kinematics.cnv_reaction);
  get("kinematics", "vehicle_length_m", cfg.kinematics.vehicle_length);
  get("controller", "plan_window_s", cfg.plan_window_s);
  get("controller", "service_zone_m", cfg.service_zone_m);
  get("controller", "deviation_threshold_m", cfg.deviation_threshold_m);
  get("controller", "arrival_speed_min_factor", cfg.arrival_speed_min_factor);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  // "a:b:step" ranges and comma lists both appear in sweep flags.
  if (text.find(':') != std::string::npos) {
    double lo = 0, hi = 0, step = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0) {
      throw std::runtime_error("bad range: " + text + " (expected lo:hi:step)");
    }
    for (double v = lo; v <= hi + 1e-9; v += step) out.push_back(v);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  if (out.empty()) throw std::runtime_error("empty list: " + text);
  return out;
}

void add_common_flags(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--geometry", opt.geometry_path, "Geometry JSON (default: built-in case study)");
  cmd->add_option("--config", opt.config_path, "Config JSON; flags override its values");
  cmd->add_option("--out", opt.out_dir, "Output directory");
  cmd->add_option("--opt-hz", opt.config.scenario.opt_hz, "Re-optimization frequency, Hz");
  cmd->add_option("--headway", opt.config.signal.sat_headway, "Saturation headway h, s");
  cmd->add_option("--startup-lost", opt.config.signal.startup_lost, "Start-up lost time l_s, s");
  cmd->add_option("--g-min", opt.config.signal.g_min, "Minimum green, s");
  cmd->add_option("--g-max", opt.config.signal.g_max, "Maximum green, s");
  cmd->add_option("--yellow", opt.config.signal.yellow, "Yellow duration, s");
  cmd->add_option("--all-red", opt.config.signal.all_red, "All-red clearance, s");
  cmd->add_option("--cnv-headway-factor", opt.config.signal.cnv_headway_factor,
                  "CNV discharge headway multiplier");
  cmd->add_option("--k", opt.config.trajectory.degree, "Trajectory polynomial degree");
  cmd->add_option("--m", opt.config.trajectory.control_points, "Trajectory control points");
  cmd->add_option_function<std::string>(
         "--green-formula",
         [&opt](const std::string& s) {
           const auto f = rio::green_formula_from_string(s);
           if (!f) throw CLI::ValidationError("--green-formula", "unknown value: " + s);
           opt.config.signal.green_formula = *f;
         },
         "paper_literal|headway_times_count")
      ->expected(1);
  cmd->add_option_function<std::string>(
         "--headway-mode",
         [&opt](const std::string& s) {
           const auto m = rio::headway_mode_from_string(s);
           if (!m) throw CLI::ValidationError("--headway-mode", "unknown value: " + s);
           opt.config.trajectory.headway_mode = *m;
         },
         "paper_literal_h|speed_scaled")
      ->expected(1);
  cmd->add_flag("--emit-trajectories", opt.config.emit_trajectories,
                "Write sampled trajectories.csv");
}

int do_run(const CommonOptions& opt) {
  const rio::Geometry geometry = load_or_default(opt.geometry_path);
  const rio::MetricsReport report = rio::run_scenario(geometry, opt.config);
  rio::emit_report_files(report, opt.config, opt.out_dir);
  std::printf("volume=%.0f cav_ratio=%.2f seed=%llu: throughput %.1f vphpl, %lld served\n",
              opt.config.scenario.volume_vphpl, opt.config.scenario.cav_ratio,
              static_cast<unsigned long long>(opt.config.scenario.seed),
              report.average_throughput_vphpl,
              static_cast<long long>(report.total_departures));
  return 0;
}

int do_sweep(const CommonOptions& opt, const std::vector<double>& volumes,
             const std::vector<double>& ratios, int seeds, int jobs, bool per_cell_files) {
  const rio::Geometry geometry = load_or_default(opt.geometry_path);

  struct Cell {
    double volume;
    double ratio;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (double v : volumes) {
    for (double r : ratios) {
      for (int s = 1; s <= seeds; ++s) cells.push_back({v, r, static_cast<std::uint64_t>(s)});
    }
  }

  std::vector<rio::SweepCell> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex io_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      rio::RunConfig cfg = opt.config;
      cfg.scenario.volume_vphpl = cells[i].volume;
      cfg.scenario.cav_ratio = cells[i].ratio;
      cfg.scenario.seed = cells[i].seed;
      const rio::MetricsReport report = rio::run_scenario(geometry, cfg);
      results[i] = {cells[i].volume, cells[i].ratio, cells[i].seed,
                    report.average_throughput_vphpl, report.travel_all.mean};
      if (per_cell_files) {
        char sub[128];
        std::snprintf(sub, sizeof(sub), "cells/v%04.0f_r%03.0f_s%02llu", cells[i].volume,
                      cells[i].ratio * 100.0, static_cast<unsigned long long>(cells[i].seed));
        rio::emit_report_files(report, cfg, (std::filesystem::path(opt.out_dir) / sub).string());
      }
      std::lock_guard<std::mutex> lock(io_mutex);
      std::printf("done volume=%.0f ratio=%.1f seed=%llu: %.1f vphpl\n", cells[i].volume,
                  cells[i].ratio, static_cast<unsigned long long>(cells[i].seed),
                  results[i].average_throughput_vphpl);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::max(1, jobs); ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  rio::emit_sweep_table(
      {results.begin(), results.end()},
      (std::filesystem::path(opt.out_dir) / "sweep_table.csv").string());
  return 0;
}

int do_phases(const std::string& geometry_path) {
  const rio::Geometry geometry = load_or_default(geometry_path);
  const auto validation = rio::validate_phase_set(geometry.phases, geometry.intersection);
  for (const rio::Phase& p : geometry.phases.phases) {
    std::printf("phase %d:", p.id);
    for (int lane : p.lanes) std::printf(" %d", lane);
    std::printf("\n");
  }
  if (!validation.ok()) {
    for (const auto& v : validation.violations) {
      std::fprintf(stderr, "violation: %s\n", v.describe().c_str());
    }
    return 1;
  }
  std::printf("phase set valid (%zu phases, %d lanes)\n", geometry.phases.phases.size(),
              geometry.phases.lane_count);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Real-time intersection optimization simulator"};
  app.require_subcommand(1);

  // Config-file precedence: file values become the flag defaults, so flags
  // the user passes override the file, and the file overrides built-ins.
  std::string pre_config;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") pre_config = argv[i + 1];
  }

  CommonOptions run_opt;
  CommonOptions sweep_opt;
  try {
    if (!pre_config.empty()) {
      apply_config_file(run_opt.config, pre_config);
      apply_config_file(sweep_opt.config, pre_config);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  CLI::App* run_cmd = app.add_subcommand("run", "Run one scenario and write reports");
  add_common_flags(run_cmd, run_opt);
  run_cmd->add_option("--volume", run_opt.config.scenario.volume_vphpl, "Demand, vphpl");
  run_cmd->add_option("--cav-ratio", run_opt.config.scenario.cav_ratio, "CAV share in [0,1]");
  run_cmd->add_option("--seed", run_opt.config.scenario.seed, "RNG seed");
  run_cmd->add_option("--duration", run_opt.config.scenario.duration_s, "Arrival window, s");
  run_cmd->add_flag("--drain", run_opt.config.scenario.drain, "Serve all arrivals before stopping");

  std::string volumes_text = "250,450,650,850";
  std::string ratios_text = "0:1:0.1";
  int seeds = 3;
  int jobs = 4;
  bool per_cell_files = false;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Run the scenario grid");
  add_common_flags(sweep_cmd, sweep_opt);
  sweep_cmd->add_option("--volumes", volumes_text, "Comma list of demands, vphpl");
  sweep_cmd->add_option("--ratios", ratios_text, "Comma list or lo:hi:step of CAV ratios");
  sweep_cmd->add_option("--seeds", seeds, "Seeds per cell (1..N)");
  sweep_cmd->add_option("--jobs", jobs, "Worker threads");
  sweep_cmd->add_option("--duration", sweep_opt.config.scenario.duration_s, "Arrival window, s");
  sweep_cmd->add_flag("--per-cell-files", per_cell_files, "Also write full reports per cell");

  std::string phases_geometry;
  CLI::App* phases_cmd = app.add_subcommand("phases", "Print and validate the phase set");
  phases_cmd->add_option("--geometry", phases_geometry, "Geometry JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return do_run(run_opt);
    if (sweep_cmd->parsed()) {
      return do_sweep(sweep_opt, parse_list(volumes_text), parse_list(ratios_text), seeds, jobs,
                      per_cell_files);
    }
    if (phases_cmd->parsed()) return do_phases(phases_geometry);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
