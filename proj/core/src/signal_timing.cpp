#include "rio/signal_timing.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rio {

namespace {
constexpr double kEps = 1e-9;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

int SignalParams::max_served_per_lane() const {
  return static_cast<int>(std::floor(g_max / sat_headway + kEps));
}

std::vector<std::int64_t> DemandSnapshot::counts() const {
  std::vector<std::int64_t> c(lanes.size(), 0);
  for (std::size_t l = 0; l < lanes.size(); ++l) c[l] = static_cast<std::int64_t>(lanes[l].size());
  return c;
}

std::int64_t DemandSnapshot::total() const {
  std::int64_t t = 0;
  for (const auto& lane : lanes) t += static_cast<std::int64_t>(lane.size());
  return t;
}

void normalize_earliest(DemandSnapshot& demand, const SignalParams& params, double now) {
  for (auto& lane : demand.lanes) {
    double prev = kNegInf;
    for (DemandVehicle& v : lane) {
      double e = v.earliest;
      if (!std::isfinite(e)) {
        // Queued vehicle: bounded by its leader's departure plus the
        // discharge headway, or by `now` when it leads the lane.
        e = (prev == kNegInf) ? now : prev + params.spacing_for(v.kind);
      }
      v.earliest = std::max(e, now);
      prev = v.earliest;
    }
  }
}

AllocationNetwork build_allocation_network(const std::vector<std::int64_t>& demand,
                                           const PhaseSet& phases, const SignalParams& params) {
  const int L = static_cast<int>(demand.size());
  const int P = static_cast<int>(phases.phases.size());

  std::vector<std::vector<int>> phases_of_lane(L);
  std::int64_t max_size = 0;
  for (int p = 0; p < P; ++p) {
    max_size = std::max<std::int64_t>(max_size, static_cast<std::int64_t>(phases.phases[p].lanes.size()));
    for (int lane : phases.phases[p].lanes) {
      if (lane >= 0 && lane < L) phases_of_lane[lane].push_back(p);
    }
  }
  std::int64_t total = 0;
  for (int l = 0; l < L; ++l) {
    total += demand[l];
    if (demand[l] > 0 && phases_of_lane[l].empty()) {
      throw std::invalid_argument("lane with demand is covered by no phase");
    }
  }

  AllocationNetwork an;
  an.demand = demand;
  an.lane_phase_arc.assign(L, std::vector<int>(P, -1));
  an.reject_arc.assign(L, -1);
  an.split_arc.assign(P, -1);

  FlowNetwork& net = an.net;
  for (int l = 0; l < L; ++l) net.add_node(demand[l]);
  const int p_in = L;
  const int p_out = L + P;
  for (int p = 0; p < 2 * P; ++p) net.add_node(0);
  an.reject_node = net.add_node(0);
  an.sink_node = net.add_node(-total);

  const std::int64_t per_lane_cap = params.max_served_per_lane();
  an.big_m = (max_size + 1) * std::max<std::int64_t>(total, 1) + 1;

  for (int l = 0; l < L; ++l) {
    for (int p : phases_of_lane[l]) {
      const std::int64_t cost = max_size - static_cast<std::int64_t>(phases.phases[p].lanes.size());
      an.lane_phase_arc[l][p] = net.add_arc(l, p_in + p, cost, 0, per_lane_cap);
    }
  }
  for (int l = 0; l < L; ++l) {
    an.reject_arc[l] = net.add_arc(l, an.reject_node, an.big_m, 0, total);
  }
  for (int p = 0; p < P; ++p) {
    const std::int64_t lanes_in_phase = static_cast<std::int64_t>(phases.phases[p].lanes.size());
    an.split_arc[p] = net.add_arc(p_in + p, p_out + p, 0, 0, per_lane_cap * lanes_in_phase);
  }
  for (int p = 0; p < P; ++p) net.add_arc(p_out + p, an.sink_node, 0, 0, total);
  net.add_arc(an.reject_node, an.sink_node, 0, 0, total);
  return an;
}

AllocationResult solve_phase_allocation(const AllocationNetwork& an, const PhaseSet& phases) {
  const FlowSolution sol = solve_min_cost_flow(an.net);
  if (sol.status != FlowStatus::Optimal) {
    throw std::logic_error("phase allocation infeasible; reject arcs should prevent this");
  }
  const int L = static_cast<int>(an.lane_phase_arc.size());
  const int P = static_cast<int>(phases.phases.size());
  AllocationResult r;
  r.served.assign(L, std::vector<std::int64_t>(P, 0));
  r.phase_total.assign(P, 0);
  r.unserved.assign(L, 0);
  r.objective = sol.objective;
  for (int l = 0; l < L; ++l) {
    for (int p = 0; p < P; ++p) {
      const int arc = an.lane_phase_arc[l][p];
      if (arc >= 0) r.served[l][p] = sol.flows[arc];
    }
    r.unserved[l] = sol.flows[an.reject_arc[l]];
  }
  for (int p = 0; p < P; ++p) r.phase_total[p] = sol.flows[an.split_arc[p]];

  // Flow balance: served plus unserved accounts for every vehicle.
  std::int64_t served_sum = 0, reject_sum = 0, demand_sum = 0;
  for (int p = 0; p < P; ++p) served_sum += r.phase_total[p];
  for (int l = 0; l < L; ++l) {
    reject_sum += r.unserved[l];
    demand_sum += an.demand[l];
  }
  assert(served_sum + reject_sum == demand_sum);
  (void)served_sum;
  (void)reject_sum;
  (void)demand_sum;
  return r;
}

double green_from_flow(std::int64_t x, const SignalParams& params, GreenFormula formula) {
  if (x < 1) throw std::invalid_argument("green_from_flow requires x >= 1; exclude inactive phases");
  const double raw = (formula == GreenFormula::PaperLiteral)
                         ? (params.sat_headway - 1.0) * static_cast<double>(x) + params.startup_lost
                         : params.sat_headway * static_cast<double>(x - 1) + params.startup_lost;
  return std::min(params.g_max, std::max(params.g_min, raw));
}

double green_from_flow(std::int64_t x, const SignalParams& params) {
  return green_from_flow(x, params, params.green_formula);
}

std::vector<int> order_phases(const PhaseSet& phases, const DemandSnapshot& demand,
                              const std::vector<std::vector<std::int64_t>>& served) {
  const int P = static_cast<int>(phases.phases.size());
  std::vector<double> sum(P, 0.0);
  std::vector<std::int64_t> count(P, 0);
  for (int l = 0; l < demand.lane_count(); ++l) {
    std::size_t next = 0;
    for (int p = 0; p < P; ++p) {
      const std::int64_t k = served[l][p];
      for (std::int64_t i = 0; i < k && next < demand.lanes[l].size(); ++i, ++next) {
        sum[p] += demand.lanes[l][next].earliest;
        ++count[p];
      }
    }
  }
  std::vector<int> order;
  for (int p = 0; p < P; ++p) {
    if (count[p] > 0) order.push_back(p);
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ma = sum[a] / static_cast<double>(count[a]);
    const double mb = sum[b] / static_cast<double>(count[b]);
    if (ma != mb) return ma < mb;
    return a < b;
  });
  return order;
}

SpatPlan optimize_spat(const DemandSnapshot& demand_in, const PhaseSet& phases,
                       const SignalParams& params, double now, double vbar,
                       const SpatContext& context) {
  SpatPlan plan;
  DemandSnapshot remaining = demand_in;
  normalize_earliest(remaining, params, now);

  const int L = remaining.lane_count();
  auto open = context.open;
  std::optional<int> prev_phase = context.prev_phase;
  double cursor = open ? open->committed_end + params.yellow + params.all_red
                       : std::max(context.anchor, now);
  // Last booked slot per lane across the whole horizon, so lane spacing holds
  // even across phase instances.
  std::vector<double> lane_overall(L, kNegInf);
  if (open) {
    for (int l = 0; l < std::min<int>(L, static_cast<int>(open->lane_last_slot.size())); ++l) {
      lane_overall[l] = open->lane_last_slot[l];
    }
  }

  int round = 0;
  int stall_guard = 0;
  while (remaining.total() > 0) {
    if (++stall_guard > 200000) throw std::logic_error("optimize_spat failed to make progress");

    const AllocationNetwork net = build_allocation_network(remaining.counts(), phases, params);
    const AllocationResult alloc = solve_phase_allocation(net, phases);
    std::vector<int> order = order_phases(phases, remaining, alloc.served);
    if (order.empty()) throw std::logic_error("allocation served no vehicles");

    // Feasible sequences switch phases; reorder when the round would repeat
    // the previous phase and another served phase exists. An open green of
    // the same phase is extended instead.
    const bool extendable_head = open && prev_phase && order.front() == *prev_phase;
    if (!extendable_head && prev_phase && order.front() == *prev_phase && order.size() > 1) {
      std::swap(order[0], order[1]);
    }

    ++round;
    std::vector<std::size_t> taken(L, 0);  // FIFO pointer per lane, this round
    bool emitted_this_round = false;

    for (std::size_t oi = 0; oi < order.size(); ++oi) {
      const int phase_id = order[oi];
      const Phase& phase = phases.phases[phase_id];

      const bool extend = open && open->phase_id == phase_id && !emitted_this_round &&
                          plan.sequence.empty();
      const double green_start = extend ? open->green_start : cursor;
      const double cap_end = green_start + params.g_max;
      const double floor_slot = std::max(green_start + params.startup_lost, now);
      std::vector<double> lane_last =
          extend ? open->lane_last_slot : std::vector<double>(L, kNegInf);
      if (extend && static_cast<int>(lane_last.size()) != L) lane_last.assign(L, kNegInf);

      struct Booked {
        int lane;
        std::size_t index;
        double slot;
      };
      std::vector<Booked> booked;
      // Interleave lanes by tentative slot time. A slot that would leave the
      // green idle for more than a short gap rolls to a later round instead
      // of stretching this green; that keeps allocated green time utilized.
      const double idle_allowance = std::max(2.0 * params.sat_headway, 2.0);
      std::vector<std::int64_t> quota(L, 0);
      for (int lane : phase.lanes) {
        if (lane >= 0 && lane < L) quota[lane] = alloc.served[lane][phase_id];
      }
      double span = floor_slot;  // latest booked slot (or the slot floor)
      if (extend) {
        for (double last : lane_last) {
          if (last != kNegInf) span = std::max(span, last);
        }
      }
      auto tentative = [&](int lane) {
        const DemandVehicle& v = remaining.lanes[lane][taken[lane]];
        double slot = std::max(floor_slot, v.earliest);
        const double spacing = params.spacing_for(v.kind);
        if (lane_last[lane] != kNegInf) slot = std::max(slot, lane_last[lane] + spacing);
        if (lane_overall[lane] != kNegInf) slot = std::max(slot, lane_overall[lane] + spacing);
        return slot;
      };
      for (;;) {
        int pick = -1;
        double pick_slot = 0.0;
        for (int lane : phase.lanes) {
          if (lane < 0 || lane >= L) continue;
          if (quota[lane] <= 0 || taken[lane] >= remaining.lanes[lane].size()) continue;
          const double slot = tentative(lane);
          if (pick < 0 || slot < pick_slot - kEps ||
              (std::abs(slot - pick_slot) <= kEps && lane < pick)) {
            pick = lane;
            pick_slot = slot;
          }
        }
        if (pick < 0) break;
        if (pick_slot > cap_end + kEps || pick_slot > span + idle_allowance + kEps) {
          // Everything still pending starts even later; the rest of this
          // phase's quota rolls.
          break;
        }
        booked.push_back({pick, taken[pick], pick_slot});
        lane_last[pick] = pick_slot;
        lane_overall[pick] = pick_slot;
        span = std::max(span, pick_slot);
        ++taken[pick];
        --quota[pick];
      }

      if (booked.empty()) {
        if (extend) open.reset();  // a saturated open green cannot grow further
        continue;
      }

      double last_slot = green_start;
      for (const Booked& b : booked) last_slot = std::max(last_slot, b.slot);

      SpatEntry entry;
      entry.round = round;
      entry.phase_id = phase_id;
      entry.green_start = green_start;
      entry.yellow = params.yellow;
      entry.all_red = params.all_red;
      entry.vehicles_served = static_cast<int>(booked.size());
      entry.extends_current = extend;
      if (extend) {
        entry.green = std::max(open->committed_end, last_slot) - green_start;
        open.reset();
      } else {
        entry.green = std::min(params.g_max, std::max(params.g_min, last_slot - green_start));
      }
      plan.sequence.push_back(entry);
      const int seq_index = static_cast<int>(plan.sequence.size()) - 1;
      for (const Booked& b : booked) {
        const DemandVehicle& v = remaining.lanes[b.lane][b.index];
        plan.schedule.slots.push_back(
            {v.vehicle_id, b.lane, seq_index, round, b.slot, vbar});
      }
      cursor = entry.interval_end();
      prev_phase = phase_id;
      emitted_this_round = true;
    }

    // Drop the served FIFO prefixes.
    for (int l = 0; l < L; ++l) {
      if (taken[l] > 0) {
        auto& lane = remaining.lanes[l];
        lane.erase(lane.begin(), lane.begin() + static_cast<std::ptrdiff_t>(taken[l]));
      }
    }

    if (!emitted_this_round) {
      --round;
      // Nothing was schedulable: jump the cursor to the first moment the
      // earliest remaining vehicle fits a fresh green.
      double min_earliest = std::numeric_limits<double>::infinity();
      for (const auto& lane : remaining.lanes) {
        for (const DemandVehicle& v : lane) min_earliest = std::min(min_earliest, v.earliest);
      }
      const double target = min_earliest - params.startup_lost;
      cursor = (target > cursor + kEps) ? target : cursor + params.g_min;
    }
  }

  std::sort(plan.schedule.slots.begin(), plan.schedule.slots.end(),
            [](const DepartureSlot& a, const DepartureSlot& b) {
              if (a.t_dep != b.t_dep) return a.t_dep < b.t_dep;
              if (a.lane != b.lane) return a.lane < b.lane;
              return a.vehicle_id < b.vehicle_id;
            });
  return plan;
}

}  // namespace rio
