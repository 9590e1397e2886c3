#include "rio/reports.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace rio {

std::string to_string(GreenFormula f) {
  return f == GreenFormula::PaperLiteral ? "paper_literal" : "headway_times_count";
}

std::string to_string(HeadwayMode m) {
  return m == HeadwayMode::PaperLiteralH ? "paper_literal_h" : "speed_scaled";
}

std::optional<GreenFormula> green_formula_from_string(const std::string& s) {
  if (s == "paper_literal") return GreenFormula::PaperLiteral;
  if (s == "headway_times_count") return GreenFormula::HeadwayTimesCount;
  return std::nullopt;
}

std::optional<HeadwayMode> headway_mode_from_string(const std::string& s) {
  if (s == "paper_literal_h") return HeadwayMode::PaperLiteralH;
  if (s == "speed_scaled") return HeadwayMode::SpeedScaled;
  return std::nullopt;
}

std::string to_csv_kind(VehicleKind kind) { return kind == VehicleKind::Cav ? "CAV" : "CNV"; }

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

nlohmann::ordered_json stats_json(const TravelTimeStats& s) {
  nlohmann::ordered_json j;
  j["count"] = s.count;
  j["mean_s"] = s.mean;
  j["min_s"] = s.min;
  j["max_s"] = s.max;
  return j;
}

}  // namespace

std::string summary_json(const MetricsReport& report, const RunConfig& config) {
  nlohmann::ordered_json j;
  j["scenario"] = {
      {"volume_vphpl", config.scenario.volume_vphpl},
      {"cav_ratio", config.scenario.cav_ratio},
      {"duration_s", config.scenario.duration_s},
      {"seed", config.scenario.seed},
      {"opt_hz", config.scenario.opt_hz},
      {"drain", config.scenario.drain},
  };
  j["signal"] = {
      {"g_min_s", config.signal.g_min},
      {"g_max_s", config.signal.g_max},
      {"yellow_s", config.signal.yellow},
      {"all_red_s", config.signal.all_red},
      {"sat_headway_s", config.signal.sat_headway},
      {"startup_lost_s", config.signal.startup_lost},
      {"cnv_headway_factor", config.signal.cnv_headway_factor},
      {"green_formula", to_string(config.signal.green_formula)},
  };
  j["trajectory"] = {
      {"degree", config.trajectory.degree},
      {"control_points", config.trajectory.control_points},
      {"headway_mode", to_string(config.trajectory.headway_mode)},
      {"dense_check_points", config.trajectory.dense_check_points},
  };
  j["kinematics"] = {
      {"cav_a_max", config.kinematics.cav_a_max},
      {"cav_a_min", config.kinematics.cav_a_min},
      {"cav_j_max", config.kinematics.cav_j_max},
      {"cav_j_min", config.kinematics.cav_j_min},
      {"cnv_a_acc", config.kinematics.cnv_a_acc},
      {"cnv_a_dec", config.kinematics.cnv_a_dec},
      {"cnv_reaction_s", config.kinematics.cnv_reaction},
      {"vehicle_length_m", config.kinematics.vehicle_length},
  };
  j["controller"] = {
      {"plan_window_s", config.plan_window_s},
      {"service_zone_m", config.service_zone_m},
      {"deviation_threshold_m", config.deviation_threshold_m},
      {"arrival_speed_min_factor", config.arrival_speed_min_factor},
  };
  j["results"] = {
      {"average_throughput_vphpl", report.average_throughput_vphpl},
      {"total_arrivals", report.total_arrivals},
      {"total_departures", report.total_departures},
      {"simulated_s", report.simulated_s},
      {"travel_time", {{"all", stats_json(report.travel_all)},
                       {"cav", stats_json(report.travel_cav)},
                       {"cnv", stats_json(report.travel_cnv)}}},
  };
  return j.dump(2) + "\n";
}

void emit_report_files(const MetricsReport& report, const RunConfig& config,
                       const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path base(dir);

  {
    std::string csv = "id,lane,kind,t_arrival,t_departure,travel_time_s\n";
    for (const VehicleRecord& r : report.vehicles) {
      csv += std::to_string(r.id) + "," + std::to_string(r.lane) + "," + to_csv_kind(r.kind) +
             "," + fmt(r.t_arrival) + "," + fmt(r.t_departure) + "," + fmt(r.travel_time) + "\n";
    }
    write_file(base / "vehicles.csv", csv);
  }
  {
    std::string csv = "minute,vphpl,cum_arrivals,cum_departures\n";
    for (std::size_t m = 0; m < report.per_minute_vphpl.size(); ++m) {
      const std::int64_t ca =
          m < report.cumulative_arrivals.size() ? report.cumulative_arrivals[m] : 0;
      const std::int64_t cd =
          m < report.cumulative_departures.size() ? report.cumulative_departures[m] : 0;
      csv += std::to_string(m) + "," + fmt(report.per_minute_vphpl[m]) + "," +
             std::to_string(ca) + "," + std::to_string(cd) + "\n";
    }
    write_file(base / "throughput.csv", csv);
  }
  {
    std::string csv = "round,phase_id,green_start_s,green_s,yellow_s,all_red_s,vehicles_served\n";
    for (const SpatLogEntry& e : report.spat_log) {
      csv += std::to_string(e.round) + "," + std::to_string(e.phase_id) + "," +
             fmt(e.green_start) + "," + fmt(e.green) + "," + fmt(e.yellow) + "," +
             fmt(e.all_red) + "," + std::to_string(e.vehicles_served) + "\n";
    }
    write_file(base / "spat.csv", csv);
  }
  if (config.emit_trajectories) {
    std::string csv = "vehicle_id,t,distance_m,speed_mps\n";
    for (const TrajectoryPoint& p : report.trajectory_points) {
      csv += std::to_string(p.vehicle_id) + "," + fmt(p.t) + "," + fmt(p.distance) + "," +
             fmt(p.speed) + "\n";
    }
    write_file(base / "trajectories.csv", csv);
  }
  write_file(base / "summary.json", summary_json(report, config));
}

void emit_sweep_table(const std::vector<SweepCell>& cells, const std::string& path) {
  std::set<double> volumes, ratios;
  std::map<std::pair<double, double>, std::pair<double, int>> agg;  // sum, count
  for (const SweepCell& c : cells) {
    volumes.insert(c.volume_vphpl);
    ratios.insert(c.cav_ratio);
    auto& [sum, count] = agg[{c.volume_vphpl, c.cav_ratio}];
    sum += c.average_throughput_vphpl;
    count += 1;
  }
  std::string csv = "volume_vphpl";
  for (double r : ratios) csv += "," + fmt(r);
  csv += "\n";
  for (double v : volumes) {
    csv += fmt(v);
    for (double r : ratios) {
      const auto it = agg.find({v, r});
      csv += ",";
      if (it != agg.end() && it->second.second > 0) {
        csv += fmt(it->second.first / it->second.second);
      }
    }
    csv += "\n";
  }
  namespace fs = std::filesystem;
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  write_file(path, csv);
}

}  // namespace rio
