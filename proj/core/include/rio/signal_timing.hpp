#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rio/config.hpp"
#include "rio/geometry.hpp"
#include "rio/min_cost_flow.hpp"
#include "rio/trajectory.hpp"

namespace rio {

struct SignalParams {
  double g_min = 5.0;      // minimum green, s
  double g_max = 30.0;     // maximum green, s
  double yellow = 3.5;     // yellow, s
  double all_red = 2.0;    // all-red clearance, s
  double sat_headway = 1.2;    // h: stop-bar headway between scheduled departures, s
  double startup_lost = 2.0;   // l_s: first departure offset after green onset, s
  double cnv_headway_factor = 1.2;  // CNV followers discharge at h * factor
  GreenFormula green_formula = GreenFormula::HeadwayTimesCount;

  int max_served_per_lane() const;  // floor(g_max / h)
  double spacing_for(VehicleKind kind) const {
    return kind == VehicleKind::Cnv ? sat_headway * cnv_headway_factor : sat_headway;
  }
};

struct DemandVehicle {
  int vehicle_id = 0;
  int lane = 0;
  VehicleKind kind = VehicleKind::Cav;
  double earliest = 0.0;  // effective earliest departure, finite after normalization
};

/// Per-lane FIFO demand presented to one optimization pass.
struct DemandSnapshot {
  std::vector<std::vector<DemandVehicle>> lanes;

  int lane_count() const { return static_cast<int>(lanes.size()); }
  std::vector<std::int64_t> counts() const;
  std::int64_t total() const;
};

/// Replaces infinite earliest-departure sentinels by the FIFO cascade bound
/// (leader's earliest plus the follower's headway) and clamps everything to
/// be at or after `now`. Leaves finite bounds that already dominate alone.
void normalize_earliest(DemandSnapshot& demand, const SignalParams& params, double now);

/// The phase-time-allocation network and the arc layout needed to read the
/// solution back. `net` follows the published arc table: lane->phase arcs
/// with cost max|p'| - |p| and per-lane capacity floor(g_max/h), lane->reject
/// arcs at big-M, phase split arcs carrying x_p, and zero-cost drains into
/// the sink.
struct AllocationNetwork {
  FlowNetwork net;
  std::vector<std::int64_t> demand;
  // Arc indices for extraction.
  std::vector<std::vector<int>> lane_phase_arc;  // [lane][phase] or -1
  std::vector<int> reject_arc;                   // per lane
  std::vector<int> split_arc;                    // per phase
  int reject_node = -1;
  int sink_node = -1;
  std::int64_t big_m = 0;
};

AllocationNetwork build_allocation_network(const std::vector<std::int64_t>& demand,
                                           const PhaseSet& phases, const SignalParams& params);

struct AllocationResult {
  std::vector<std::vector<std::int64_t>> served;  // [lane][phase]
  std::vector<std::int64_t> phase_total;          // x_p per phase
  std::vector<std::int64_t> unserved;             // r_l per lane
  std::int64_t objective = 0;                     // includes big-M reject terms
};

AllocationResult solve_phase_allocation(const AllocationNetwork& net, const PhaseSet& phases);

/// Green time for a phase that serves x vehicles, clamped into
/// [g_min, g_max]. `x` is the busiest-lane served count of the phase.
double green_from_flow(std::int64_t x, const SignalParams& params);
double green_from_flow(std::int64_t x, const SignalParams& params, GreenFormula formula);

/// Orders the phases with positive served totals by ascending mean earliest
/// departure of the vehicles tentatively assigned to them (FIFO prefixes per
/// lane, phases visited by ascending id); ties break by phase id.
std::vector<int> order_phases(const PhaseSet& phases, const DemandSnapshot& demand,
                              const std::vector<std::vector<std::int64_t>>& served);

struct SpatEntry {
  int round = 0;
  int phase_id = 0;
  double green_start = 0.0;
  double green = 0.0;
  double yellow = 0.0;
  double all_red = 0.0;
  int vehicles_served = 0;
  bool extends_current = false;  // continuation of the caller's open green

  double green_end() const { return green_start + green; }
  double interval_end() const { return green_start + green + yellow + all_red; }
};

using SpatSequence = std::vector<SpatEntry>;

struct DepartureSlot {
  int vehicle_id = 0;
  int lane = 0;
  int sequence_index = 0;  // index into the returned SpatSequence
  int round = 0;
  double t_dep = 0.0;
  double depart_speed = 0.0;  // scheduled stop-bar speed (vbar)
};

struct DepartureSchedule {
  std::vector<DepartureSlot> slots;  // ascending by (t_dep, lane, vehicle_id)
};

/// State the optimizer needs about the interval currently executing, so a new
/// plan can extend an in-progress green of the same phase instead of
/// scheduling a conflicting duplicate.
struct SpatContext {
  double anchor = 0.0;                // earliest start for a new green
  std::optional<int> prev_phase;      // phase immediately before the anchor
  // Present when the previous interval is an open green that may be extended.
  struct OpenGreen {
    int phase_id = 0;
    double green_start = 0.0;
    double committed_end = 0.0;           // current green end
    std::vector<double> lane_last_slot;   // per lane, -inf when unused
  };
  std::optional<OpenGreen> open;
};

struct SpatPlan {
  SpatSequence sequence;
  DepartureSchedule schedule;
};

/// Runs allocation rounds until every vehicle in the snapshot is scheduled.
/// Each round solves the flow model on the remaining demand, orders the
/// selected phases, and books stop-bar slots at headway spacing inside each
/// green; vehicles whose earliest departure misses their green roll into the
/// next round. Greens stay inside [g_min, g_max] and consecutive entries
/// switch phases whenever more than one phase can serve the demand.
SpatPlan optimize_spat(const DemandSnapshot& demand, const PhaseSet& phases,
                       const SignalParams& params, double now, double vbar,
                       const SpatContext& context = {});

}  // namespace rio
