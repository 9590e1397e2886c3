#pragma once

#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "rio/config.hpp"

namespace rio {

enum class VehicleKind { Cav, Cnv };

/// Detection-time state and kinematic envelope of one vehicle. Times are
/// absolute simulation seconds; distances are measured to the stop bar.
struct VehicleState {
  int id = 0;
  int lane = 0;
  VehicleKind kind = VehicleKind::Cav;
  double t0 = 0.0;  // detection time, s
  double d0 = 0.0;  // detection distance, m
  double v0 = 0.0;  // detection speed, m/s
  double a_min = -4.5;
  double a_max = 3.0;
  double j_min = -5.0;
  double j_max = 5.0;
  double length = 4.5;
  double v_des = 15.0;    // Gipps desired speed (CNV)
  double a_acc = 1.7;     // Gipps acceleration parameter (CNV)
  double a_dec = -3.4;    // Gipps braking parameter (CNV), < 0
  double reaction = 1.0;  // Gipps reaction time, s
};

/// Polynomial space-time curve f(u) = sum beta_n u^n over normalized time
/// u = (t - t0) / (t_dep - t0). Boundary rows pin f and -f' at both ends.
struct PolyTrajectory {
  std::vector<double> coeffs;
  double t0 = 0.0;
  double t_dep = 0.0;
  int control_points = 0;

  double duration() const { return t_dep - t0; }
};

struct TrajectorySample {
  double t = 0.0;
  double distance = 0.0;
  double speed = 0.0;
  double accel = 0.0;  // piecewise constant until the next sample
};

struct SampledTrajectory {
  std::vector<TrajectorySample> samples;  // ascending in t
  bool braking_flagged = false;           // a Gipps braking term went imaginary

  double start_time() const { return samples.empty() ? 0.0 : samples.front().t; }
  double end_time() const { return samples.empty() ? 0.0 : samples.back().t; }
};

using Trajectory = std::variant<PolyTrajectory, SampledTrajectory>;

struct Kinematics {
  double distance = 0.0;
  double speed = 0.0;
  double accel = 0.0;
  double jerk = 0.0;
};

/// Evaluates a trajectory at time t. Polynomials differentiate analytically
/// in normalized time and chain-rule back to seconds; sampled trajectories
/// interpolate with constant acceleration inside a step (jerk reported as 0).
/// Throws std::out_of_range outside the domain.
Kinematics evaluate(const Trajectory& traj, double t);

/// Domain of a trajectory as [start, end].
std::pair<double, double> domain(const Trajectory& traj);

/// Evaluates a lead vehicle's trajectory for follower constraints, extending
/// flat before the domain and with constant final speed after it.
Kinematics evaluate_extended(const Trajectory& traj, double t);

/// Reference to a leader used by follower planning/estimation.
struct LeadView {
  const Trajectory* trajectory = nullptr;
  double length = 4.5;       // leader vehicle length, m
  double depart_time = 0.0;  // leader's stop-bar departure time, s
};

inline constexpr double kNeverDeparts = std::numeric_limits<double>::infinity();

/// Earliest stop-bar arrival absent signal and traffic. CNVs are bounded by
/// their constant detection speed (infinite for a stopped CNV); CAVs by the
/// minimum-time profile that accelerates at a_max to vbar and cruises.
double earliest_departure(const VehicleState& v, double vbar);

/// Minimum space-time (area under the curve) polynomial trajectory for a
/// lane-leading CAV departing at t_dep at speed vbar. Speed, acceleration and
/// jerk stay inside the vehicle envelope at the m interior control points.
std::optional<PolyTrajectory> plan_lead_cav(const VehicleState& v, double t_dep, double vbar,
                                            int degree, int control_points);

/// Follower CAV: lead-CAV model plus a spacing row against the leader at
/// every control point. The gap is h meters in PaperLiteralH mode and vbar*h
/// meters in SpeedScaled mode.
std::optional<PolyTrajectory> plan_follower_cav(const VehicleState& v, const LeadView& lead,
                                                double t_dep, double vbar, int degree,
                                                int control_points, double headway_s,
                                                HeadwayMode mode);

/// Planning wrappers that densely sample the solution and re-solve with m
/// doubled when bounds are violated between control points.
std::optional<PolyTrajectory> plan_lead_cav_validated(const VehicleState& v, double t_dep,
                                                      double vbar, const TrajectoryConfig& cfg);
std::optional<PolyTrajectory> plan_follower_cav_validated(const VehicleState& v,
                                                          const LeadView& lead, double t_dep,
                                                          double vbar, double headway_s,
                                                          const TrajectoryConfig& cfg);

/// Gipps trajectory estimation for CNVs. A lead CNV holds its detection
/// speed; a follower steps the Gipps speed update every `reaction` seconds
/// against the leader until the leader departs, interpolating distance with
/// constant acceleration inside each step.
SampledTrajectory estimate_cnv_trajectory(const VehicleState& v, const std::optional<LeadView>& lead,
                                          double vbar);

/// Gipps speed terms of one update step, exposed for tests and the arrival
/// speed cap. `gipps_braking` returns 0 and sets `flagged` when the square
/// root argument is negative (inconsistent leader data).
double gipps_free_speed(double v, double v_des, double a_acc, double reaction);
double gipps_braking_speed(double d_fol, double v_fol, double d_lead, double v_lead,
                           double lead_length, double a_dec, double reaction, bool* flagged);

/// Sampled profile that ramps from the detection speed to a cruise speed so
/// the vehicle reaches the stop bar exactly at t_dep. Serves as the fallback
/// when a polynomial plan is infeasible and as the far-horizon cruise.
SampledTrajectory sampled_arrival_profile(const VehicleState& v, double t_dep, double vbar,
                                          double step);

}  // namespace rio
