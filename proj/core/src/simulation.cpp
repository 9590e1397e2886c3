#include "rio/simulation.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <random>
#include <stdexcept>

namespace rio {
namespace {

constexpr double kEps = 1e-9;

// Far-away static leader used to launch a stopped lane-leading CNV with the
// Gipps free-acceleration branch.
SampledTrajectory far_leader_stub(double t) {
  SampledTrajectory s;
  s.samples.push_back({t, -1.0e4, 0.0, 0.0});
  return s;
}

TravelTimeStats stats_of(const std::vector<double>& samples) {
  TravelTimeStats s;
  s.count = static_cast<std::int64_t>(samples.size());
  if (samples.empty()) return s;
  double sum = 0.0;
  s.min = samples.front();
  s.max = samples.front();
  for (double v : samples) {
    sum += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean = sum / static_cast<double>(samples.size());
  return s;
}

}  // namespace

std::vector<ArrivalEvent> generate_arrivals(const Scenario& scenario, int lane_count, double vbar,
                                            double speed_min_factor) {
  std::vector<ArrivalEvent> all;
  if (scenario.volume_vphpl <= 0.0 || scenario.duration_s <= 0.0) return all;
  const double rate = scenario.volume_vphpl / 3600.0;  // veh/s per lane
  for (int lane = 0; lane < lane_count; ++lane) {
    std::seed_seq seq{scenario.seed, static_cast<std::uint64_t>(lane) + 1};
    std::mt19937_64 rng(seq);
    std::exponential_distribution<double> gap(rate);
    std::uniform_real_distribution<double> speed(speed_min_factor * vbar, vbar);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    double t = 0.0;
    for (;;) {
      t += gap(rng);
      if (t > scenario.duration_s) break;
      ArrivalEvent ev;
      ev.t = t;
      ev.lane = lane;
      ev.kind = (coin(rng) < scenario.cav_ratio) ? VehicleKind::Cav : VehicleKind::Cnv;
      ev.speed_draw = speed(rng);
      all.push_back(ev);
    }
  }
  std::sort(all.begin(), all.end(), [](const ArrivalEvent& a, const ArrivalEvent& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.lane < b.lane;
  });
  for (std::size_t i = 0; i < all.size(); ++i) all[i].id = static_cast<int>(i);
  return all;
}

Simulation::Simulation(Geometry geometry, RunConfig config)
    : geometry_(std::move(geometry)), config_(std::move(config)), params_(config_.signal) {
  const auto validation = validate_phase_set(geometry_.phases, geometry_.intersection);
  if (!validation.ok()) {
    throw std::invalid_argument("invalid phase set: " + validation.violations.front().describe());
  }
  if (config_.scenario.opt_hz <= 0.0) throw std::invalid_argument("opt_hz must be positive");
  lane_queue_.assign(geometry_.intersection.lane_count(), {});
  pending_arrivals_ = generate_arrivals(config_.scenario, geometry_.intersection.lane_count(),
                                        geometry_.intersection.speed_limit(),
                                        config_.arrival_speed_min_factor);
  signal_.kind = IntervalKind::Idle;
  signal_.start = 0.0;
  signal_.end = 0.0;
}

bool Simulation::finished() const {
  const double duration = config_.scenario.duration_s;
  if (!config_.scenario.drain) return now_ >= duration - kEps;
  if (now_ < duration - kEps) return false;
  if (in_system() == 0 && next_arrival_ >= pending_arrivals_.size()) return true;
  return now_ >= duration + 14400.0;  // drain guard
}

double Simulation::position_of(const Vehicle& v, double t) const {
  // Held at the bar until the service slot.
  return std::max(evaluate_extended(v.trajectory, t).distance, 0.0);
}

double Simulation::speed_of(const Vehicle& v, double t) const {
  const Kinematics k = evaluate_extended(v.trajectory, t);
  if (k.distance <= 0.0) return 0.0;
  return std::max(k.speed, 0.0);
}

bool Simulation::lane_in_phase(int lane, int phase_id) const {
  const auto& lanes = geometry_.phases.phases[static_cast<std::size_t>(phase_id)].lanes;
  return std::find(lanes.begin(), lanes.end(), lane) != lanes.end();
}

void Simulation::spawn_arrivals(double t_to, std::vector<SimEvent>& events) {
  const double vbar = geometry_.intersection.speed_limit();
  const double range = geometry_.intersection.detection_range();
  while (next_arrival_ < pending_arrivals_.size() && pending_arrivals_[next_arrival_].t <= t_to) {
    ArrivalEvent ev = pending_arrivals_[next_arrival_];
    // A new vehicle enters at the detection range; its speed is capped by a
    // Gipps-safe value against the current lane tail.
    double v0 = ev.speed_draw;
    if (!lane_queue_[ev.lane].empty()) {
      const Vehicle& tail = vehicles_.at(lane_queue_[ev.lane].back());
      const double tail_pos = position_of(tail, ev.t);
      const double tail_speed = speed_of(tail, ev.t);
      if (tail_pos > range - tail.state.length - 1.0) {
        // No room at the detection boundary yet; retry next tick.
        pending_arrivals_[next_arrival_].t = t_to + dt();
        std::stable_sort(pending_arrivals_.begin() + static_cast<std::ptrdiff_t>(next_arrival_),
                         pending_arrivals_.end(),
                         [](const ArrivalEvent& a, const ArrivalEvent& b) { return a.t < b.t; });
        continue;
      }
      bool flagged = false;
      const double safe = gipps_braking_speed(range, v0, tail_pos, tail_speed, tail.state.length,
                                              config_.kinematics.cnv_a_dec,
                                              config_.kinematics.cnv_reaction, &flagged);
      v0 = std::clamp(std::min(v0, safe), 0.0, vbar);
    }

    Vehicle v;
    v.state.id = ev.id;
    v.state.lane = ev.lane;
    v.state.kind = ev.kind;
    v.state.t0 = ev.t;
    v.state.d0 = range;
    v.state.v0 = v0;
    v.state.a_max = config_.kinematics.cav_a_max;
    v.state.a_min = config_.kinematics.cav_a_min;
    v.state.j_max = config_.kinematics.cav_j_max;
    v.state.j_min = config_.kinematics.cav_j_min;
    v.state.length = config_.kinematics.vehicle_length;
    v.state.v_des = vbar;
    v.state.a_acc = config_.kinematics.cnv_a_acc;
    v.state.a_dec = config_.kinematics.cnv_a_dec;
    v.state.reaction = config_.kinematics.cnv_reaction;
    v.t_arrival = ev.t;
    v.trajectory = SampledTrajectory{{{ev.t, range, v0, 0.0}}, false};

    lane_queue_[ev.lane].push_back(ev.id);
    vehicles_.emplace(ev.id, std::move(v));
    ++arrivals_;
    const std::size_t minute = static_cast<std::size_t>(ev.t / 60.0);
    if (report_.cumulative_arrivals.size() <= minute) report_.cumulative_arrivals.resize(minute + 1, 0);
    ++report_.cumulative_arrivals[minute];
    events.push_back({SimEvent::Kind::Arrival, ev.id, ev.t});
    ++next_arrival_;
    dirty_ = true;
  }
}

void Simulation::log_signal_interval() {
  // Called when a green completes; records the executed instance.
  report_.spat_log.push_back({signal_round_, signal_.phase_id, signal_.start,
                              signal_.end - signal_.start, params_.yellow, params_.all_red,
                              current_green_served_});
  current_green_served_ = 0;
}

void Simulation::advance_signal(double t_to) {
  for (;;) {
    switch (signal_.kind) {
      case IntervalKind::Green:
        if (t_to < signal_.end - kEps) return;
        log_signal_interval();
        signal_ = {IntervalKind::Yellow, signal_.phase_id, signal_.end, signal_.end + params_.yellow};
        break;
      case IntervalKind::Yellow:
        if (t_to < signal_.end - kEps) return;
        signal_ = {IntervalKind::AllRed, signal_.phase_id, signal_.end, signal_.end + params_.all_red};
        break;
      case IntervalKind::AllRed:
        if (t_to < signal_.end - kEps) return;
        if (future_entries_.empty()) {
          signal_ = {IntervalKind::Idle, -1, signal_.end, signal_.end};
          return;
        }
        signal_ = {IntervalKind::Idle, -1, signal_.end, future_entries_.front().green_start};
        break;
      case IntervalKind::Idle:
        if (future_entries_.empty()) return;
        if (t_to < future_entries_.front().green_start - kEps) return;
        {
          const SpatEntry e = future_entries_.front();
          future_entries_.erase(future_entries_.begin());
          signal_ = {IntervalKind::Green, e.phase_id, e.green_start, e.green_start + e.green};
          signal_round_ = e.round;
          current_green_served_ = 0;
        }
        break;
    }
  }
}

void Simulation::service_slots(double t_from, double t_to, std::vector<SimEvent>& events) {
  struct Due {
    double slot;
    int lane;
    int id;
  };
  std::vector<Due> due;
  for (const auto& [id, v] : vehicles_) {
    if (v.slot <= t_to && v.slot > t_from - kEps) due.push_back({v.slot, v.state.lane, id});
  }
  std::sort(due.begin(), due.end(), [](const Due& a, const Due& b) {
    if (a.slot != b.slot) return a.slot < b.slot;
    if (a.lane != b.lane) return a.lane < b.lane;
    return a.id < b.id;
  });
  for (const Due& d : due) {
    auto it = vehicles_.find(d.id);
    if (it == vehicles_.end()) continue;
    Vehicle& v = it->second;
    if (v.slot != d.slot) continue;  // rescheduled mid-tick

    // Per-lane FIFO: the serviced vehicle must head its lane.
    if (lane_queue_[v.state.lane].empty() || lane_queue_[v.state.lane].front() != d.id) {
      throw std::logic_error("departure would violate per-lane FIFO order");
    }

    const double pos = position_of(v, v.slot) + v.deviation_offset;
    if (pos > config_.service_zone_m) {
      // The vehicle did not make its slot (trajectory deviation); release the
      // slot and let the next optimization pass reschedule it.
      v.slot = kNeverDeparts;
      v.planned_slot = kNeverDeparts;
      v.pinned = false;
      dirty_ = true;
      events.push_back({SimEvent::Kind::MissedSlot, d.id, d.slot});
      continue;
    }

    // Departures happen inside a green of a phase serving the lane.
    const bool in_green = signal_.kind == IntervalKind::Green &&
                          v.slot >= signal_.start - 1e-6 && v.slot <= signal_.end + 1e-6 &&
                          lane_in_phase(v.state.lane, signal_.phase_id);
    bool in_past_green = false;
    if (!in_green) {
      for (auto rit = report_.spat_log.rbegin(); rit != report_.spat_log.rend(); ++rit) {
        if (v.slot >= rit->green_start - 1e-6 && v.slot <= rit->green_start + rit->green + 1e-6 &&
            lane_in_phase(v.state.lane, rit->phase_id)) {
          in_past_green = true;
          break;
        }
        if (rit->green_start + rit->green < v.slot - params_.g_max) break;
      }
    }
    if (!in_green && !in_past_green) {
      throw std::logic_error("departure scheduled outside a green window");
    }

    if (in_green) ++current_green_served_;
    record_departure(v, v.slot);
    events.push_back({SimEvent::Kind::Departure, d.id, v.slot});
    lane_queue_[v.state.lane].pop_front();
    vehicles_.erase(it);
    dirty_ = true;
  }
}

void Simulation::record_departure(const Vehicle& v, double t_dep) {
  VehicleRecord rec;
  rec.id = v.state.id;
  rec.lane = v.state.lane;
  rec.kind = v.state.kind;
  rec.t_arrival = v.t_arrival;
  rec.t_departure = t_dep;
  rec.travel_time = t_dep - v.t_arrival;
  report_.vehicles.push_back(rec);
  ++departures_;
  const std::size_t minute = static_cast<std::size_t>(t_dep / 60.0);
  if (report_.cumulative_departures.size() <= minute) {
    report_.cumulative_departures.resize(minute + 1, 0);
  }
  ++report_.cumulative_departures[minute];
}

void Simulation::reoptimize(double t_now) {
  const double vbar = geometry_.intersection.speed_limit();

  // Fold injected deviations into fresh detection states.
  for (auto& [id, v] : vehicles_) {
    if (std::abs(v.deviation_offset) >= config_.deviation_threshold_m) {
      const double pos = std::min(position_of(v, t_now) + v.deviation_offset,
                                  geometry_.intersection.detection_range());
      const double spd = speed_of(v, t_now);
      v.state.t0 = t_now;
      v.state.d0 = std::max(pos, 0.0);
      v.state.v0 = spd;
      v.deviation_offset = 0.0;
      v.trajectory = SampledTrajectory{{{t_now, v.state.d0, spd, 0.0}}, false};
      v.planned_slot = kNeverDeparts;
      v.slot = kNeverDeparts;
      v.pinned = false;
      v.revision++;
    }
  }

  // Pin vehicles already committed to the executing green; everything else
  // re-enters the optimization demand.
  SpatContext ctx;
  const int L = geometry_.intersection.lane_count();
  if (signal_.kind == IntervalKind::Green) {
    SpatContext::OpenGreen open;
    open.phase_id = signal_.phase_id;
    open.green_start = signal_.start;
    open.committed_end = signal_.end;
    open.lane_last_slot.assign(L, -std::numeric_limits<double>::infinity());
    ctx.prev_phase = signal_.phase_id;
    for (auto& [id, v] : vehicles_) {
      if (v.slot != kNeverDeparts && v.slot >= signal_.start - kEps &&
          v.slot <= signal_.end + kEps) {
        v.pinned = true;
        open.lane_last_slot[v.state.lane] = std::max(open.lane_last_slot[v.state.lane], v.slot);
      } else {
        v.pinned = false;
      }
    }
    ctx.open = std::move(open);
    ctx.anchor = signal_.end + params_.yellow + params_.all_red;
  } else {
    for (auto& [id, v] : vehicles_) v.pinned = false;
    if (signal_.kind == IntervalKind::Yellow) {
      ctx.anchor = signal_.end + params_.all_red;
      ctx.prev_phase = signal_.phase_id;
    } else if (signal_.kind == IntervalKind::AllRed) {
      ctx.anchor = signal_.end;
      ctx.prev_phase = signal_.phase_id >= 0 ? std::optional<int>(signal_.phase_id) : std::nullopt;
    } else {
      ctx.anchor = t_now;
    }
  }
  ctx.anchor = std::max(ctx.anchor, t_now);

  DemandSnapshot demand;
  demand.lanes.assign(L, {});
  for (int lane = 0; lane < L; ++lane) {
    for (int id : lane_queue_[lane]) {
      const Vehicle& v = vehicles_.at(id);
      if (v.pinned) continue;
      DemandVehicle dv;
      dv.vehicle_id = id;
      dv.lane = lane;
      dv.kind = v.state.kind;
      const double pos = position_of(v, t_now);
      const double spd = speed_of(v, t_now);
      if (v.state.kind == VehicleKind::Cav) {
        VehicleState rebased = v.state;
        rebased.t0 = t_now;
        rebased.d0 = pos;
        rebased.v0 = spd;
        dv.earliest = earliest_departure(rebased, vbar);
      } else {
        dv.earliest = (spd > 1e-6) ? t_now + pos / spd : kNeverDeparts;
      }
      demand.lanes[lane].push_back(dv);
    }
  }

  SpatPlan plan = optimize_spat(demand, geometry_.phases, params_, t_now, vbar, ctx);

  // Install the plan: slots onto vehicles, intervals onto the timeline.
  future_entries_.clear();
  for (const SpatEntry& e : plan.sequence) {
    if (e.extends_current) {
      assert(signal_.kind == IntervalKind::Green && signal_.phase_id == e.phase_id);
      signal_.end = e.green_start + e.green;
    } else {
      future_entries_.push_back(e);
    }
  }
  for (const DepartureSlot& s : plan.schedule.slots) {
    auto it = vehicles_.find(s.vehicle_id);
    if (it == vehicles_.end()) continue;
    it->second.slot = s.t_dep;
    it->second.seq_round = s.round;
  }
  rebuild_trajectories(t_now);
  dirty_ = false;
}

void Simulation::rebuild_trajectories(double t_now) {
  const double vbar = geometry_.intersection.speed_limit();
  for (auto& lane : lane_queue_) {
    const Vehicle* lead = nullptr;
    for (int id : lane) {
      Vehicle& v = vehicles_.at(id);
      const int lead_id = lead ? lead->state.id : -1;
      const int lead_rev = lead ? lead->revision : -1;
      // Far-future slots jitter as demand accumulates; rebuilding those
      // trajectories on every shift would dominate the loop, so shifts only
      // count once they are material or the slot is near.
      const double slot_tol =
          (v.slot != kNeverDeparts && v.slot - t_now > 120.0) ? 5.0 : 1e-9;
      const bool slot_changed = std::abs(v.slot - v.planned_slot) > slot_tol &&
                                !(v.slot == kNeverDeparts && v.planned_slot == kNeverDeparts);
      const bool lead_changed = (v.lead_id_seen != lead_id) || (v.lead_revision_seen != lead_rev);
      const bool empty_traj =
          std::holds_alternative<SampledTrajectory>(v.trajectory) &&
          std::get<SampledTrajectory>(v.trajectory).samples.size() <= 1;
      const bool cav_window = v.state.kind == VehicleKind::Cav && !v.is_lp_plan &&
                              v.slot != kNeverDeparts && v.slot - t_now <= config_.plan_window_s &&
                              v.lp_attempted_slot != v.slot;
      if (!(slot_changed || lead_changed || empty_traj || cav_window)) {
        lead = &v;
        continue;
      }

      VehicleState basis = v.state;
      basis.t0 = t_now;
      basis.d0 = position_of(v, t_now);
      basis.v0 = speed_of(v, t_now);
      const double slot = v.slot;

      std::optional<LeadView> lead_view;
      if (lead) {
        double lead_dep = lead->slot == kNeverDeparts ? t_now + 120.0 : lead->slot;
        lead_dep = std::min(lead_dep, t_now + 120.0);  // estimation horizon cap
        lead_view = LeadView{&lead->trajectory, lead->state.length, lead_dep};
      }

      v.is_lp_plan = false;
      if (v.state.kind == VehicleKind::Cav) {
        std::optional<PolyTrajectory> poly;
        if (slot != kNeverDeparts && slot - t_now <= config_.plan_window_s && slot > t_now + kEps) {
          v.lp_attempted_slot = slot;
          poly = lead_view ? plan_follower_cav_validated(basis, *lead_view, slot, vbar,
                                                         params_.sat_headway, config_.trajectory)
                           : plan_lead_cav_validated(basis, slot, vbar, config_.trajectory);
        }
        if (poly) {
          v.trajectory = std::move(*poly);
          v.is_lp_plan = true;
        } else {
          const double target = (slot != kNeverDeparts) ? slot : earliest_departure(basis, vbar);
          v.trajectory = sampled_arrival_profile(basis, target, vbar, 1.0);
        }
      } else {
        if (lead_view) {
          v.trajectory = estimate_cnv_trajectory(basis, lead_view, vbar);
        } else if (basis.v0 < 0.5) {
          // Stopped lane leader: Gipps free-acceleration launch.
          SampledTrajectory stub = far_leader_stub(t_now);
          Trajectory stub_traj = stub;
          LeadView far{&stub_traj, 0.0, std::min(slot != kNeverDeparts ? slot : t_now + 120.0,
                                                 t_now + 120.0)};
          v.trajectory = estimate_cnv_trajectory(basis, far, vbar);
        } else {
          v.trajectory = estimate_cnv_trajectory(basis, std::nullopt, vbar);
        }
      }
      v.planned_slot = slot;
      v.lead_id_seen = lead_id;
      v.lead_revision_seen = lead_rev;
      v.revision++;
      lead = &v;
    }
  }
}

void Simulation::update_safety_probe(double t_now) {
  for (const auto& lane : lane_queue_) {
    const Vehicle* lead = nullptr;
    for (int id : lane) {
      const Vehicle& v = vehicles_.at(id);
      if (lead && v.state.kind == VehicleKind::Cnv) {
        const double fol = evaluate_extended(v.trajectory, t_now).distance;
        const double led = evaluate_extended(lead->trajectory, t_now).distance;
        min_follower_gap_ = std::min(min_follower_gap_, fol - led - lead->state.length);
      }
      lead = &v;
    }
  }
}

std::vector<SimEvent> Simulation::step() {
  std::vector<SimEvent> events;
  const double t_from = now_;
  const double t_to = now_ + dt();

  spawn_arrivals(t_to, events);
  advance_signal(t_to);
  service_slots(t_from, t_to, events);

  for (const auto& [id, v] : vehicles_) {
    if (std::abs(v.deviation_offset) >= config_.deviation_threshold_m) dirty_ = true;
  }
  if (dirty_) {
    reoptimize(t_to);
    events.push_back({SimEvent::Kind::Reoptimized, -1, t_to});
  }
  update_safety_probe(t_to);

  if (config_.emit_trajectories) {
    for (const auto& [id, v] : vehicles_) {
      report_.trajectory_points.push_back(
          {id, t_to, position_of(v, t_to), speed_of(v, t_to)});
    }
  }

  now_ = t_to;
  return events;
}

MetricsReport Simulation::run() {
  while (!finished()) step();

  const double duration = config_.scenario.duration_s;
  report_.total_arrivals = arrivals_;
  report_.total_departures = departures_;
  report_.simulated_s = now_;

  const int lane_count = geometry_.intersection.lane_count();
  const std::size_t minutes = static_cast<std::size_t>(std::ceil(std::max(now_, 1.0) / 60.0));
  std::vector<std::int64_t> dep_by_minute(minutes, 0);
  for (const VehicleRecord& r : report_.vehicles) {
    const std::size_t m = static_cast<std::size_t>(r.t_departure / 60.0);
    if (m < minutes) ++dep_by_minute[m];
  }
  report_.per_minute_vphpl.assign(minutes, 0.0);
  for (std::size_t m = 0; m < minutes; ++m) {
    report_.per_minute_vphpl[m] = static_cast<double>(dep_by_minute[m]) * 60.0 / lane_count;
  }
  // Cumulative curves on minute boundaries.
  if (report_.cumulative_arrivals.size() < minutes) report_.cumulative_arrivals.resize(minutes, 0);
  if (report_.cumulative_departures.size() < minutes) {
    report_.cumulative_departures.resize(minutes, 0);
  }
  for (std::size_t m = 1; m < minutes; ++m) {
    report_.cumulative_arrivals[m] += report_.cumulative_arrivals[m - 1];
    report_.cumulative_departures[m] += report_.cumulative_departures[m - 1];
  }

  // Steady-state average: the first minute is spent filling the empty
  // intersection, so the window starts at minute 1.
  const std::size_t window_begin = (duration > 120.0) ? 1 : 0;
  const std::size_t window_end =
      std::max<std::size_t>(window_begin + 1, static_cast<std::size_t>(duration / 60.0));
  std::int64_t window_total = 0;
  for (std::size_t m = window_begin; m < window_end && m < minutes; ++m) {
    window_total += dep_by_minute[m];
  }
  const double window_s = 60.0 * static_cast<double>(std::min(window_end, minutes) - window_begin);
  report_.average_throughput_vphpl =
      window_s > 0.0 ? static_cast<double>(window_total) * 3600.0 / window_s / lane_count : 0.0;

  std::vector<double> all, cav, cnv;
  for (const VehicleRecord& r : report_.vehicles) {
    all.push_back(r.travel_time);
    (r.kind == VehicleKind::Cav ? cav : cnv).push_back(r.travel_time);
  }
  report_.travel_all = stats_of(all);
  report_.travel_cav = stats_of(cav);
  report_.travel_cnv = stats_of(cnv);
  return report_;
}

void Simulation::inject_deviation(int vehicle_id, double offset_m) {
  auto it = vehicles_.find(vehicle_id);
  if (it != vehicles_.end()) it->second.deviation_offset += offset_m;
}

MetricsReport run_scenario(const Geometry& geometry, const RunConfig& config) {
  Simulation sim(geometry, config);
  return sim.run();
}

}  // namespace rio
