#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rio/geometry.hpp"
#include "rio/simulation.hpp"

namespace rio {

/// Fully resolved configuration echo plus aggregate results, as a stable
/// (byte-deterministic) JSON document.
std::string summary_json(const MetricsReport& report, const RunConfig& config);

/// Writes vehicles.csv, throughput.csv, spat.csv, summary.json and, when the
/// run sampled them, trajectories.csv into `dir` (created if needed).
void emit_report_files(const MetricsReport& report, const RunConfig& config,
                       const std::string& dir);

struct SweepCell {
  double volume_vphpl = 0.0;
  double cav_ratio = 0.0;
  std::uint64_t seed = 0;
  double average_throughput_vphpl = 0.0;
  double mean_travel_time_s = 0.0;
};

/// volume x ratio table of mean throughput over seeds, one row per volume.
void emit_sweep_table(const std::vector<SweepCell>& cells, const std::string& path);

std::string to_csv_kind(VehicleKind kind);

}  // namespace rio
