#include "rio/trajectory.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "rio/linear_program.hpp"

namespace rio {
namespace {

Kinematics evaluate_poly(const PolyTrajectory& p, double t) {
  const double T = p.duration();
  const double u = (t - p.t0) / T;
  double f = 0.0, f1 = 0.0, f2 = 0.0, f3 = 0.0;
  // Horner evaluation of f and its first three derivatives in u.
  for (int n = static_cast<int>(p.coeffs.size()) - 1; n >= 0; --n) {
    f3 = f3 * u + 3.0 * f2;
    f2 = f2 * u + 2.0 * f1;
    f1 = f1 * u + f;
    f = f * u + p.coeffs[static_cast<std::size_t>(n)];
  }
  Kinematics k;
  k.distance = f;
  k.speed = -f1 / T;
  k.accel = -f2 / (T * T);
  k.jerk = -f3 / (T * T * T);
  return k;
}

Kinematics evaluate_sampled(const SampledTrajectory& s, double t) {
  const auto& v = s.samples;
  auto it = std::upper_bound(v.begin(), v.end(), t,
                             [](double x, const TrajectorySample& smp) { return x < smp.t; });
  const std::size_t seg = static_cast<std::size_t>(std::distance(v.begin(), it)) - 1;
  const TrajectorySample& a = v[seg];
  const double dt = t - a.t;
  Kinematics k;
  k.distance = a.distance - a.speed * dt - 0.5 * a.accel * dt * dt;
  k.speed = a.speed + a.accel * dt;
  k.accel = a.accel;
  k.jerk = 0.0;
  return k;
}

constexpr double kTimeEps = 1e-9;

}  // namespace

std::pair<double, double> domain(const Trajectory& traj) {
  if (const auto* p = std::get_if<PolyTrajectory>(&traj)) return {p->t0, p->t_dep};
  const auto& s = std::get<SampledTrajectory>(traj);
  return {s.start_time(), s.end_time()};
}

Kinematics evaluate(const Trajectory& traj, double t) {
  const auto [lo, hi] = domain(traj);
  if (t < lo - kTimeEps || t > hi + kTimeEps) {
    throw std::out_of_range("trajectory evaluated outside its domain");
  }
  t = std::clamp(t, lo, hi);
  if (const auto* p = std::get_if<PolyTrajectory>(&traj)) return evaluate_poly(*p, t);
  return evaluate_sampled(std::get<SampledTrajectory>(traj), t);
}

Kinematics evaluate_extended(const Trajectory& traj, double t) {
  const auto [lo, hi] = domain(traj);
  if (t < lo) {
    Kinematics k = evaluate(traj, lo);
    k.speed = 0.0;
    k.accel = 0.0;
    k.jerk = 0.0;
    return k;
  }
  if (t > hi) {
    Kinematics end = evaluate(traj, hi);
    Kinematics k;
    k.distance = end.distance - end.speed * (t - hi);
    k.speed = end.speed;
    return k;
  }
  return evaluate(traj, t);
}

double earliest_departure(const VehicleState& v, double vbar) {
  if (v.d0 <= 0.0) return v.t0;
  if (v.kind == VehicleKind::Cnv) {
    if (v.v0 <= 1e-9) return kNeverDeparts;
    return v.t0 + v.d0 / v.v0;
  }
  // CAV: accelerate at a_max from v0 to vbar, then cruise.
  const double accel_dist = (vbar * vbar - v.v0 * v.v0) / (2.0 * v.a_max);
  if (accel_dist <= v.d0) {
    const double t_accel = (vbar - v.v0) / v.a_max;
    return v.t0 + t_accel + (v.d0 - accel_dist) / vbar;
  }
  // vbar is out of reach within d0; accelerate the whole way.
  return v.t0 + (-v.v0 + std::sqrt(v.v0 * v.v0 + 2.0 * v.a_max * v.d0)) / v.a_max;
}

namespace {

// Shared LCAV constraint system in normalized time. The printed boundary
// rows for speed lack the 1/T factor the parameterization implies; the rows
// here are derived consistently from f(u) with u = t/T.
LinearProgram build_cav_lp(const VehicleState& v, double T, double vbar, int k, int m) {
  LinearProgram lp(k + 1);
  for (int n = 0; n <= k; ++n) lp.objective[n] = T / (n + 1);

  auto unit = [&](int n) {
    std::vector<double> row(k + 1, 0.0);
    row[n] = 1.0;
    return row;
  };
  lp.add_row(unit(0), Relation::Equal, v.d0);           // f(0) = d0
  lp.add_row(unit(1), Relation::Equal, -v.v0 * T);      // v(0) = v0
  lp.add_row(std::vector<double>(k + 1, 1.0), Relation::Equal, 0.0);  // f(1) = 0
  {
    std::vector<double> row(k + 1, 0.0);
    for (int n = 1; n <= k; ++n) row[n] = n;
    lp.add_row(std::move(row), Relation::Equal, -vbar * T);  // v(1) = vbar
  }

  for (int j = 1; j <= m; ++j) {
    const double u = static_cast<double>(j) / (m + 1);
    std::vector<double> speed(k + 1, 0.0);
    std::vector<double> accel(k + 1, 0.0);
    std::vector<double> jerk(k + 1, 0.0);
    double un1 = 1.0;  // u^(n-1)
    for (int n = 1; n <= k; ++n) {
      speed[n] = -n * un1 / T;
      if (n >= 2) accel[n] = -n * (n - 1) * un1 / (u * T * T);
      if (n >= 3) jerk[n] = -n * (n - 1) * (n - 2) * un1 / (u * u * T * T * T);
      un1 *= u;
    }
    lp.add_row(speed, Relation::GreaterEq, 0.0);
    lp.add_row(speed, Relation::LessEq, vbar);
    lp.add_row(accel, Relation::GreaterEq, v.a_min);
    lp.add_row(accel, Relation::LessEq, v.a_max);
    lp.add_row(jerk, Relation::GreaterEq, v.j_min);
    lp.add_row(std::move(jerk), Relation::LessEq, v.j_max);
  }
  return lp;
}

std::optional<PolyTrajectory> solve_cav_lp(const LinearProgram& lp, const VehicleState& v,
                                           double t_dep, int m) {
  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal) return std::nullopt;
  PolyTrajectory traj;
  traj.coeffs = sol.values;
  traj.t0 = v.t0;
  traj.t_dep = t_dep;
  traj.control_points = m;
  return traj;
}

}  // namespace

std::optional<PolyTrajectory> plan_lead_cav(const VehicleState& v, double t_dep, double vbar,
                                            int degree, int control_points) {
  const double T = t_dep - v.t0;
  if (T <= 0.0) return std::nullopt;
  LinearProgram lp = build_cav_lp(v, T, vbar, degree, control_points);
  return solve_cav_lp(lp, v, t_dep, control_points);
}

std::optional<PolyTrajectory> plan_follower_cav(const VehicleState& v, const LeadView& lead,
                                                double t_dep, double vbar, int degree,
                                                int control_points, double headway_s,
                                                HeadwayMode mode) {
  const double T = t_dep - v.t0;
  if (T <= 0.0 || lead.trajectory == nullptr) return std::nullopt;
  LinearProgram lp = build_cav_lp(v, T, vbar, degree, control_points);
  const double gap = (mode == HeadwayMode::PaperLiteralH) ? headway_s : vbar * headway_s;
  for (int j = 1; j <= control_points; ++j) {
    const double u = static_cast<double>(j) / (control_points + 1);
    std::vector<double> row(degree + 1, 0.0);
    double un = 1.0;
    for (int n = 0; n <= degree; ++n) {
      row[n] = un;
      un *= u;
    }
    const double lead_d = evaluate_extended(*lead.trajectory, v.t0 + u * T).distance;
    lp.add_row(std::move(row), Relation::GreaterEq, lead_d + gap);
  }
  return solve_cav_lp(lp, v, t_dep, control_points);
}

namespace {

// Worst dense-sample violation relative to the 1%-of-bound policy; zero when
// the trajectory honors the envelope everywhere it is sampled.
double dense_violation(const PolyTrajectory& traj, const VehicleState& v, double vbar,
                       int points) {
  const double slack = 0.01;
  const double v_tol = slack * vbar;
  const double a_tol = slack * (v.a_max - v.a_min);
  const double j_tol = slack * (v.j_max - v.j_min);
  double worst = 0.0;
  for (int i = 1; i < points; ++i) {
    const double t = traj.t0 + traj.duration() * i / points;
    const Kinematics k = evaluate_poly(traj, t);
    worst = std::max(worst, (-v_tol) - k.speed);
    worst = std::max(worst, k.speed - (vbar + v_tol));
    worst = std::max(worst, (v.a_min - a_tol) - k.accel);
    worst = std::max(worst, k.accel - (v.a_max + a_tol));
    worst = std::max(worst, (v.j_min - j_tol) - k.jerk);
    worst = std::max(worst, k.jerk - (v.j_max + j_tol));
  }
  return worst;
}

}  // namespace

std::optional<PolyTrajectory> plan_lead_cav_validated(const VehicleState& v, double t_dep,
                                                      double vbar, const TrajectoryConfig& cfg) {
  int m = cfg.control_points;
  for (int attempt = 0; attempt <= cfg.max_m_doublings; ++attempt, m *= 2) {
    auto traj = plan_lead_cav(v, t_dep, vbar, cfg.degree, m);
    if (!traj) continue;
    if (dense_violation(*traj, v, vbar, cfg.dense_check_points) <= 0.0) return traj;
  }
  return std::nullopt;
}

std::optional<PolyTrajectory> plan_follower_cav_validated(const VehicleState& v,
                                                          const LeadView& lead, double t_dep,
                                                          double vbar, double headway_s,
                                                          const TrajectoryConfig& cfg) {
  // Plan against a slightly inflated headway so the nominal gap survives
  // between control points; tight instances fall back to the exact rows.
  const double guarded_h = (cfg.headway_mode == HeadwayMode::PaperLiteralH)
                               ? headway_s + cfg.headway_guard_m
                               : headway_s + cfg.headway_guard_m / vbar;
  const double nominal_gap =
      (cfg.headway_mode == HeadwayMode::PaperLiteralH) ? headway_s : vbar * headway_s;

  auto headway_violation = [&](const PolyTrajectory& traj) {
    // The terminal boundary pins the gap to exactly vbar*h, so the dense
    // audit uses the same 1%-of-bound policy as the envelope checks.
    const double slack = 0.01 * nominal_gap;
    double worst = 0.0;
    for (int i = 1; i < cfg.dense_check_points; ++i) {
      const double t = traj.t0 + traj.duration() * i / cfg.dense_check_points;
      const double fol_d = evaluate_poly(traj, t).distance;
      const double lead_d = evaluate_extended(*lead.trajectory, t).distance;
      worst = std::max(worst, (nominal_gap - slack) - (fol_d - lead_d));
    }
    return worst;
  };

  int m = cfg.control_points;
  for (int attempt = 0; attempt <= cfg.max_m_doublings; ++attempt, m *= 2) {
    for (const double h_try : {guarded_h, headway_s}) {
      auto traj = plan_follower_cav(v, lead, t_dep, vbar, cfg.degree, m, h_try, cfg.headway_mode);
      if (!traj) continue;
      const double violation = std::max(dense_violation(*traj, v, vbar, cfg.dense_check_points),
                                        headway_violation(*traj));
      if (violation <= 0.0) return traj;
    }
  }
  // No discretization level honored the full envelope; the caller falls back
  // to sampled following rather than executing a known-violating plan.
  return std::nullopt;
}

double gipps_free_speed(double v, double v_des, double a_acc, double reaction) {
  const double ratio = std::clamp(v / v_des, 0.0, 1.0);
  return v + 2.5 * a_acc * reaction * (1.0 - ratio) * std::sqrt(0.025 + ratio);
}

double gipps_braking_speed(double d_fol, double v_fol, double d_lead, double v_lead,
                           double lead_length, double a_dec, double reaction, bool* flagged) {
  // Braking branch of the Gipps update. The leader feedback term enters as
  // v_lead^2 (leader braking estimated at the follower's own a_dec), keeping
  // every term in m^2/s^2.
  const double arg = a_dec * (2.0 * (d_lead - d_fol + lead_length) +
                              reaction * (a_dec * reaction + v_fol)) +
                     v_lead * v_lead;
  if (arg < 0.0) {
    if (flagged) *flagged = true;
    return 0.0;
  }
  return a_dec * reaction + std::sqrt(arg);
}

SampledTrajectory estimate_cnv_trajectory(const VehicleState& v, const std::optional<LeadView>& lead,
                                          double vbar) {
  SampledTrajectory out;
  if (!lead || lead->trajectory == nullptr) {
    // Lead CNV: constant detection speed down to the stop bar.
    const double speed = std::min(v.v0, vbar);
    if (speed <= 1e-9) {
      out.samples.push_back({v.t0, v.d0, 0.0, 0.0});
      return out;
    }
    const double t_cross = v.t0 + v.d0 / speed;
    double t = v.t0;
    double d = v.d0;
    while (t + v.reaction < t_cross) {
      out.samples.push_back({t, d, speed, 0.0});
      t += v.reaction;
      d -= speed * v.reaction;
    }
    out.samples.push_back({t, d, speed, 0.0});
    out.samples.push_back({t_cross, 0.0, speed, 0.0});
    return out;
  }

  double t = v.t0;
  double d = v.d0;
  double speed = v.v0;
  out.samples.push_back({t, d, speed, 0.0});
  while (t + v.reaction <= lead->depart_time + kTimeEps) {
    const Kinematics lk = evaluate_extended(*lead->trajectory, t);
    bool flagged = false;
    const double free_v = gipps_free_speed(speed, v.v_des, v.a_acc, v.reaction);
    const double brake_v = gipps_braking_speed(d, speed, lk.distance, lk.speed, lead->length,
                                               v.a_dec, v.reaction, &flagged);
    if (flagged) out.braking_flagged = true;
    double next_v = std::clamp(std::min(free_v, brake_v), 0.0, vbar);
    const double accel = (next_v - speed) / v.reaction;
    out.samples.back().accel = accel;
    d -= speed * v.reaction + 0.5 * accel * v.reaction * v.reaction;
    t += v.reaction;
    speed = next_v;
    out.samples.push_back({t, d, speed, 0.0});
  }
  return out;
}

SampledTrajectory sampled_arrival_profile(const VehicleState& v, double t_dep, double vbar,
                                          double step) {
  SampledTrajectory out;
  const double T = t_dep - v.t0;
  if (T <= 0.0 || v.d0 <= 0.0) {
    out.samples.push_back({v.t0, std::max(v.d0, 0.0), v.v0, 0.0});
    return out;
  }

  // Ramp from v0 to a cruise speed chosen by bisection so the stop bar is
  // reached exactly at t_dep. Ramps use the vehicle's own accel envelope, so
  // any t_dep at or beyond the minimum-time arrival admits a profile.
  auto profile = [&](double vc) {
    const double rate = (vc >= v.v0) ? v.a_max : -v.a_min;
    const double ramp_time = std::min(std::abs(vc - v.v0) / rate, T);
    return std::pair<double, double>{rate * ((vc >= v.v0) ? 1.0 : -1.0), ramp_time};
  };
  auto traveled_by = [&](double vc, double x) {
    const auto [a, ramp_time] = profile(vc);
    const double xr = std::min(x, ramp_time);
    double dist = v.v0 * xr + 0.5 * a * xr * xr;
    if (x > ramp_time) dist += (v.v0 + a * ramp_time) * (x - ramp_time);
    return dist;
  };
  double lo = 0.0, hi = vbar;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (traveled_by(mid, T) < v.d0) lo = mid; else hi = mid;
  }
  const double vc = hi;
  const auto [a, ramp_time] = profile(vc);

  // Sample on the step grid plus the ramp/cruise boundary so the piecewise
  // constant-acceleration interpolation is exact.
  std::vector<double> knots;
  for (double x = 0.0; x < T; x += step) knots.push_back(x);
  if (ramp_time > 0.0 && ramp_time < T) knots.push_back(ramp_time);
  knots.push_back(T);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end(),
                          [](double x, double y) { return std::abs(x - y) < 1e-9; }),
              knots.end());

  for (double x : knots) {
    TrajectorySample s;
    s.t = v.t0 + x;
    s.distance = std::max(v.d0 - traveled_by(vc, x), 0.0);
    s.speed = (x < ramp_time) ? v.v0 + a * x : v.v0 + a * ramp_time;
    s.accel = (x < ramp_time - 1e-9) ? a : 0.0;
    out.samples.push_back(s);
  }
  out.samples.back().distance = 0.0;
  out.samples.back().accel = 0.0;
  return out;
}

}  // namespace rio
