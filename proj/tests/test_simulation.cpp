#include "rio/simulation.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "rio/reports.hpp"

namespace rio {
namespace {

RunConfig base_config(double volume, double ratio, double duration, std::uint64_t seed = 1) {
  RunConfig cfg;
  cfg.scenario.volume_vphpl = volume;
  cfg.scenario.cav_ratio = ratio;
  cfg.scenario.duration_s = duration;
  cfg.scenario.seed = seed;
  return cfg;
}

TEST(GenerateArrivals, PoissonCountWithinThreeSigma) {
  Scenario s;
  s.volume_vphpl = 250.0;
  s.duration_s = 900.0;
  s.cav_ratio = 0.5;
  s.seed = 1;
  const auto events = generate_arrivals(s, 16, 15.0, 0.7);
  const double mean = 250.0 / 3600.0 * 900.0 * 16.0;  // 1000
  const double sigma = std::sqrt(mean);
  EXPECT_NEAR(static_cast<double>(events.size()), mean, 3.0 * sigma);
  // Ordered by time, ids sequential.
  for (std::size_t i = 1; i < events.size(); ++i) {
    EXPECT_LE(events[i - 1].t, events[i].t);
    EXPECT_EQ(events[i].id, static_cast<int>(i));
  }
}

TEST(GenerateArrivals, ZeroVolumeIsEmpty) {
  Scenario s;
  s.volume_vphpl = 0.0;
  EXPECT_TRUE(generate_arrivals(s, 16, 15.0, 0.7).empty());
}

TEST(GenerateArrivals, FullCavRatioMakesOnlyCavs) {
  Scenario s;
  s.volume_vphpl = 400.0;
  s.duration_s = 300.0;
  s.cav_ratio = 1.0;
  for (const ArrivalEvent& e : generate_arrivals(s, 16, 15.0, 0.7)) {
    EXPECT_EQ(e.kind, VehicleKind::Cav);
  }
}

TEST(Simulation, NoVehiclesIdlesInAllRed) {
  const Geometry g = make_case_study();
  RunConfig cfg = base_config(0.0, 0.5, 30.0);
  Simulation sim(g, cfg);
  int total_events = 0;
  while (!sim.finished()) {
    for (const SimEvent& e : sim.step()) {
      if (e.kind != SimEvent::Kind::Reoptimized) ++total_events;
    }
    EXPECT_EQ(sim.signal().kind, IntervalKind::Idle);
  }
  EXPECT_EQ(total_events, 0);
  EXPECT_EQ(sim.arrivals(), 0);
}

TEST(Simulation, DurationZeroGivesEmptyReport) {
  const Geometry g = make_case_study();
  const MetricsReport r = run_scenario(g, base_config(250.0, 0.5, 0.0));
  EXPECT_EQ(r.total_arrivals, 0);
  EXPECT_EQ(r.total_departures, 0);
  EXPECT_TRUE(r.vehicles.empty());
}

TEST(Simulation, SingleCavDepartsOnSchedule) {
  const Geometry g = make_case_study();
  RunConfig cfg = base_config(20.0, 1.0, 120.0);  // a handful of arrivals
  cfg.scenario.drain = true;
  const MetricsReport r = run_scenario(g, cfg);
  ASSERT_GT(r.total_arrivals, 0);
  EXPECT_EQ(r.total_departures, r.total_arrivals);
  const double vbar = g.intersection.speed_limit();
  const double range = g.intersection.detection_range();
  for (const VehicleRecord& rec : r.vehicles) {
    EXPECT_GE(rec.travel_time, range / vbar - 1e-6);
    EXPECT_GE(rec.t_departure, rec.t_arrival);
  }
}

TEST(Simulation, ConservationFifoAndSpacing) {
  const Geometry g = make_case_study();
  RunConfig cfg = base_config(300.0, 0.5, 240.0, 3);
  cfg.scenario.drain = true;
  const MetricsReport r = run_scenario(g, cfg);
  EXPECT_EQ(r.total_departures, r.total_arrivals);

  // Cumulative departures never exceed cumulative arrivals.
  for (std::size_t m = 0; m < r.cumulative_departures.size(); ++m) {
    const std::int64_t arr =
        m < r.cumulative_arrivals.size() ? r.cumulative_arrivals[m] : r.total_arrivals;
    EXPECT_LE(r.cumulative_departures[m], arr);
  }

  // Per lane: departures follow arrival order with at least h separation.
  std::map<int, std::vector<VehicleRecord>> by_lane;
  for (const VehicleRecord& rec : r.vehicles) by_lane[rec.lane].push_back(rec);
  for (auto& [lane, records] : by_lane) {
    std::sort(records.begin(), records.end(),
              [](const VehicleRecord& a, const VehicleRecord& b) {
                return a.t_departure < b.t_departure;
              });
    for (std::size_t i = 1; i < records.size(); ++i) {
      EXPECT_GE(records[i].t_arrival, records[i - 1].t_arrival - 1e-9)
          << "lane " << lane << " FIFO";
      EXPECT_GE(records[i].t_departure - records[i - 1].t_departure,
                base_config(0, 0, 0).signal.sat_headway - 1e-6)
          << "lane " << lane << " spacing";
    }
  }
}

TEST(Simulation, DeparturesLieInsideGreensOfTheirPhase) {
  const Geometry g = make_case_study();
  RunConfig cfg = base_config(400.0, 0.5, 180.0, 7);
  cfg.scenario.drain = true;
  const MetricsReport r = run_scenario(g, cfg);
  ASSERT_GT(r.total_departures, 0);
  for (const VehicleRecord& rec : r.vehicles) {
    bool inside = false;
    for (const SpatLogEntry& e : r.spat_log) {
      if (rec.t_departure >= e.green_start - 1e-6 &&
          rec.t_departure <= e.green_start + e.green + 1e-6) {
        const auto& lanes = g.phases.phases[static_cast<std::size_t>(e.phase_id)].lanes;
        if (std::find(lanes.begin(), lanes.end(), rec.lane) != lanes.end()) {
          inside = true;
          break;
        }
      }
    }
    EXPECT_TRUE(inside) << "vehicle " << rec.id << " departed at " << rec.t_departure;
  }
}

TEST(Simulation, GippsFollowersKeepPositiveGaps) {
  const Geometry g = make_case_study();
  RunConfig cfg = base_config(500.0, 0.3, 180.0, 11);
  Simulation sim(g, cfg);
  while (!sim.finished()) sim.step();
  EXPECT_GT(sim.min_follower_gap(), 0.0);
}

TEST(Simulation, DeterministicReports) {
  const Geometry g = make_case_study();
  RunConfig cfg = base_config(350.0, 0.4, 180.0, 5);
  const MetricsReport a = run_scenario(g, cfg);
  const MetricsReport b = run_scenario(g, cfg);
  EXPECT_EQ(summary_json(a, cfg), summary_json(b, cfg));
  ASSERT_EQ(a.vehicles.size(), b.vehicles.size());
  for (std::size_t i = 0; i < a.vehicles.size(); ++i) {
    EXPECT_EQ(a.vehicles[i].id, b.vehicles[i].id);
    EXPECT_EQ(a.vehicles[i].t_departure, b.vehicles[i].t_departure);  // bitwise
  }
}

TEST(Simulation, InjectedDeviationTriggersRescheduleNotFailure) {
  const Geometry g = make_case_study();
  RunConfig cfg = base_config(200.0, 0.0, 120.0, 13);  // all CNV
  cfg.scenario.drain = true;
  Simulation sim(g, cfg);

  int first_vehicle = -1;
  bool injected = false;
  bool reopt_after_injection = false;
  while (!sim.finished()) {
    const auto events = sim.step();
    for (const SimEvent& e : events) {
      if (e.kind == SimEvent::Kind::Arrival && first_vehicle < 0) first_vehicle = e.vehicle_id;
      if (injected && e.kind == SimEvent::Kind::Reoptimized) reopt_after_injection = true;
    }
    if (!injected && first_vehicle >= 0 && sim.now() > 5.0) {
      sim.inject_deviation(first_vehicle, 40.0);  // fell 40 m behind prediction
      injected = true;
    }
  }
  EXPECT_TRUE(injected);
  EXPECT_TRUE(reopt_after_injection);
  EXPECT_EQ(sim.in_system(), 0);  // everyone still served after the deviation
}

TEST(Simulation, DrainEmptiesTheSystem) {
  const Geometry g = make_case_study();
  RunConfig cfg = base_config(600.0, 0.5, 120.0, 17);
  cfg.scenario.drain = true;
  Simulation sim(g, cfg);
  const MetricsReport r = sim.run();
  EXPECT_EQ(sim.in_system(), 0);
  EXPECT_EQ(r.total_arrivals, r.total_departures);
}

}  // namespace
}  // namespace rio
