#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rio/config.hpp"
#include "rio/geometry.hpp"
#include "rio/signal_timing.hpp"
#include "rio/trajectory.hpp"

namespace rio {

struct Scenario {
  double volume_vphpl = 250.0;  // per-lane arrival rate
  double cav_ratio = 0.5;       // probability an arrival is a CAV
  double duration_s = 900.0;    // arrival generation window
  std::uint64_t seed = 1;
  double opt_hz = 5.0;          // control loop frequency
  bool drain = false;           // keep serving after `duration_s` until empty
};

/// Fully resolved run configuration; every default echoes into summary.json.
struct RunConfig {
  Scenario scenario;
  SignalParams signal;
  TrajectoryConfig trajectory;
  KinematicDefaults kinematics;
  double arrival_speed_min_factor = 0.7;  // arrival speed ~ U[factor*vbar, vbar]
  double plan_window_s = 45.0;            // polynomial planning horizon
  double service_zone_m = 1.0;            // max distance from the bar at service
  double deviation_threshold_m = 0.5;     // re-optimization trigger
  bool emit_trajectories = false;
};

struct ArrivalEvent {
  double t = 0.0;
  int lane = 0;
  VehicleKind kind = VehicleKind::Cav;
  double speed_draw = 0.0;  // detection speed before any queue cap
  int id = 0;
};

/// Per-lane Poisson arrival streams (exponential inter-arrival times), each
/// arrival independently a CAV with probability cav_ratio. Deterministic in
/// (scenario, lane count, vbar); ids follow global time order.
std::vector<ArrivalEvent> generate_arrivals(const Scenario& scenario, int lane_count, double vbar,
                                            double speed_min_factor);

struct VehicleRecord {
  int id = 0;
  int lane = 0;
  VehicleKind kind = VehicleKind::Cav;
  double t_arrival = 0.0;
  double t_departure = 0.0;
  double travel_time = 0.0;
};

struct SpatLogEntry {
  int round = 0;
  int phase_id = 0;
  double green_start = 0.0;
  double green = 0.0;
  double yellow = 0.0;
  double all_red = 0.0;
  int vehicles_served = 0;
};

struct TrajectoryPoint {
  int vehicle_id = 0;
  double t = 0.0;
  double distance = 0.0;
  double speed = 0.0;
};

struct TravelTimeStats {
  std::int64_t count = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct MetricsReport {
  std::vector<double> per_minute_vphpl;           // departures per minute, vphpl
  std::vector<std::int64_t> cumulative_arrivals;  // by minute boundary
  std::vector<std::int64_t> cumulative_departures;
  std::vector<VehicleRecord> vehicles;
  std::vector<SpatLogEntry> spat_log;
  std::vector<TrajectoryPoint> trajectory_points;  // only when emit_trajectories
  TravelTimeStats travel_all;
  TravelTimeStats travel_cav;
  TravelTimeStats travel_cnv;
  double average_throughput_vphpl = 0.0;  // steady-state window, minute 1 onward
  std::int64_t total_arrivals = 0;
  std::int64_t total_departures = 0;
  double simulated_s = 0.0;
};

struct SimEvent {
  enum class Kind { Arrival, Departure, MissedSlot, Reoptimized } kind;
  int vehicle_id = -1;
  double t = 0.0;
};

enum class IntervalKind { Green, Yellow, AllRed, Idle };

struct SignalState {
  IntervalKind kind = IntervalKind::Idle;
  int phase_id = -1;
  double start = 0.0;
  double end = 0.0;  // idle: open-ended
};

/// Closed-loop fixed-step simulation of one scenario: stochastic arrivals,
/// re-optimization on every arrival, departure or trajectory deviation,
/// signal interval execution, and slot-based stop-bar service.
class Simulation {
 public:
  Simulation(Geometry geometry, RunConfig config);

  /// Advances one control-loop tick of 1/opt_hz seconds.
  std::vector<SimEvent> step();

  /// Runs to completion (duration plus drain when configured).
  MetricsReport run();

  double now() const { return now_; }
  bool finished() const;
  std::int64_t arrivals() const { return arrivals_; }
  std::int64_t departures() const { return departures_; }
  std::int64_t in_system() const { return arrivals_ - departures_; }
  const SignalState& signal() const { return signal_; }

  /// Test hook: shifts a vehicle's estimated position by `offset_m` (toward
  /// the detector), emulating a CNV that drives slower than predicted.
  void inject_deviation(int vehicle_id, double offset_m);

  /// Gipps safety probe: evaluates every active follower/leader pair at the
  /// current time and returns the minimum bumper gap seen so far.
  double min_follower_gap() const { return min_follower_gap_; }

 private:
  struct Vehicle {
    VehicleState state;      // detection-time state
    double t_arrival = 0.0;
    double slot = kNeverDeparts;
    int seq_round = 0;
    bool pinned = false;
    Trajectory trajectory;   // approach motion estimate / plan
    int revision = 0;
    double planned_slot = kNeverDeparts;  // slot the trajectory was built for
    double lp_attempted_slot = kNeverDeparts;
    int lead_revision_seen = -1;
    int lead_id_seen = -1;
    bool is_lp_plan = false;
    double deviation_offset = 0.0;  // injected estimate error, m
  };

  double dt() const { return 1.0 / config_.scenario.opt_hz; }
  double position_of(const Vehicle& v, double t) const;
  double speed_of(const Vehicle& v, double t) const;
  void spawn_arrivals(double t_to, std::vector<SimEvent>& events);
  void advance_signal(double t_to);
  void service_slots(double t_from, double t_to, std::vector<SimEvent>& events);
  void reoptimize(double t_now);
  void rebuild_trajectories(double t_now);
  void update_safety_probe(double t_now);
  void record_departure(const Vehicle& v, double t_dep);
  bool lane_in_phase(int lane, int phase_id) const;
  void log_signal_interval();

  Geometry geometry_;
  RunConfig config_;
  SignalParams params_;

  std::vector<ArrivalEvent> pending_arrivals_;
  std::size_t next_arrival_ = 0;
  std::vector<std::deque<int>> lane_queue_;  // vehicle ids, FIFO per lane
  std::map<int, Vehicle> vehicles_;          // active vehicles by id

  SignalState signal_;
  std::vector<SpatEntry> future_entries_;  // planned, not yet started
  int signal_round_ = 0;
  int current_green_served_ = 0;
  double now_ = 0.0;
  bool dirty_ = true;

  std::int64_t arrivals_ = 0;
  std::int64_t departures_ = 0;
  MetricsReport report_;
  double min_follower_gap_ = std::numeric_limits<double>::infinity();
};

/// Convenience wrapper: constructs the simulation and runs it to completion.
MetricsReport run_scenario(const Geometry& geometry, const RunConfig& config);

}  // namespace rio
