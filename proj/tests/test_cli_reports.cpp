#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rio/geometry.hpp"
#include "rio/reports.hpp"
#include "rio/simulation.hpp"

namespace rio {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  EXPECT_TRUE(in.good()) << p;
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rio_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Reports, EmitsAllFilesForOneRun) {
  const Geometry g = make_case_study();
  RunConfig cfg;
  cfg.scenario.volume_vphpl = 200.0;
  cfg.scenario.duration_s = 120.0;
  cfg.emit_trajectories = true;
  const MetricsReport r = run_scenario(g, cfg);
  const fs::path dir = fresh_dir("emit_all");
  emit_report_files(r, cfg, dir.string());
  EXPECT_TRUE(fs::exists(dir / "vehicles.csv"));
  EXPECT_TRUE(fs::exists(dir / "throughput.csv"));
  EXPECT_TRUE(fs::exists(dir / "spat.csv"));
  EXPECT_TRUE(fs::exists(dir / "trajectories.csv"));
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
  EXPECT_NE(slurp(dir / "summary.json").find("average_throughput_vphpl"), std::string::npos);
}

TEST(Reports, ByteIdenticalAcrossIdenticalRuns) {
  const Geometry g = make_case_study();
  RunConfig cfg;
  cfg.scenario.volume_vphpl = 300.0;
  cfg.scenario.duration_s = 150.0;
  cfg.scenario.seed = 9;
  const fs::path dir_a = fresh_dir("det_a");
  const fs::path dir_b = fresh_dir("det_b");
  emit_report_files(run_scenario(g, cfg), cfg, dir_a.string());
  emit_report_files(run_scenario(g, cfg), cfg, dir_b.string());
  for (const char* name : {"vehicles.csv", "throughput.csv", "spat.csv", "summary.json"}) {
    EXPECT_EQ(slurp(dir_a / name), slurp(dir_b / name)) << name;
  }
}

TEST(Reports, SweepTableShape) {
  std::vector<SweepCell> cells;
  for (double v : {250.0, 450.0}) {
    for (double r : {0.0, 0.5, 1.0}) {
      for (std::uint64_t s : {1ull, 2ull}) {
        cells.push_back({v, r, s, v * (0.9 + r * 0.1), 40.0});
      }
    }
  }
  const fs::path dir = fresh_dir("sweep");
  const fs::path table = dir / "sweep_table.csv";
  emit_sweep_table(cells, table.string());
  const std::string text = slurp(table);
  std::stringstream ss(text);
  std::string line;
  int rows = 0;
  while (std::getline(ss, line)) ++rows;
  EXPECT_EQ(rows, 3);  // header + 2 volumes
  EXPECT_NE(text.find("volume_vphpl"), std::string::npos);
}

#ifdef RIO_CLI_PATH
TEST(Cli, RunSubcommandWritesReports) {
  const fs::path dir = fresh_dir("cli_run");
  std::ostringstream cmd;
  cmd << RIO_CLI_PATH << " run --volume 150 --cav-ratio 0.5 --seed 1 --duration 90 --out "
      << dir.string() << " > " << (dir / "stdout.txt").string() << " 2>&1";
  ASSERT_EQ(std::system(cmd.str().c_str()), 0);
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
  EXPECT_TRUE(fs::exists(dir / "vehicles.csv"));
}

TEST(Cli, MissingGeometryFileFailsNonzero) {
  const fs::path dir = fresh_dir("cli_missing");
  std::ostringstream cmd;
  cmd << RIO_CLI_PATH << " run --geometry /nonexistent/geom.json --out " << dir.string()
      << " > /dev/null 2>&1";
  EXPECT_NE(std::system(cmd.str().c_str()), 0);
}

TEST(Cli, SweepProducesTable) {
  const fs::path dir = fresh_dir("cli_sweep");
  std::ostringstream cmd;
  cmd << RIO_CLI_PATH
      << " sweep --volumes 150,250 --ratios 0:1:0.5 --seeds 1 --jobs 2 --duration 90 --out "
      << dir.string() << " > " << (dir / "stdout.txt").string() << " 2>&1";
  ASSERT_EQ(std::system(cmd.str().c_str()), 0);
  const std::string table = slurp(dir / "sweep_table.csv");
  std::stringstream ss(table);
  std::string line;
  std::getline(ss, line);
  EXPECT_NE(line.find("volume_vphpl"), std::string::npos);
  int data_rows = 0;
  while (std::getline(ss, line)) ++data_rows;
  EXPECT_EQ(data_rows, 2);
}

TEST(Cli, PhasesSubcommandValidatesCaseStudy) {
  std::ostringstream cmd;
  cmd << RIO_CLI_PATH << " phases > /dev/null 2>&1";
  EXPECT_EQ(std::system(cmd.str().c_str()), 0);
}

TEST(Cli, GeometryFileRoundTrip) {
  const fs::path dir = fresh_dir("cli_geom");
  const Geometry g = make_case_study();
  const fs::path geom = dir / "case_study.json";
  std::ofstream(geom) << geometry_to_json(g);
  std::ostringstream cmd;
  cmd << RIO_CLI_PATH << " run --geometry " << geom.string()
      << " --volume 120 --duration 60 --out " << (dir / "out").string() << " > /dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.str().c_str()), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.json"));
}
#endif

}  // namespace
}  // namespace rio
