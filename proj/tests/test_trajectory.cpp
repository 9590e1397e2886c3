#include "rio/trajectory.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace rio {
namespace {

constexpr double kVbar = 15.0;

VehicleState cav(double t0, double d0, double v0) {
  VehicleState v;
  v.kind = VehicleKind::Cav;
  v.t0 = t0;
  v.d0 = d0;
  v.v0 = v0;
  return v;
}

VehicleState cnv(double t0, double d0, double v0) {
  VehicleState v = cav(t0, d0, v0);
  v.kind = VehicleKind::Cnv;
  return v;
}

TEST(EarliestDeparture, CnvConstantSpeedBound) {
  EXPECT_NEAR(earliest_departure(cnv(0.0, 100.0, 10.0), kVbar), 10.0, 1e-12);
}

TEST(EarliestDeparture, CavAlreadyAtSpeedLimit) {
  EXPECT_NEAR(earliest_departure(cav(0.0, 100.0, 15.0), kVbar), 100.0 / 15.0, 1e-12);
}

TEST(EarliestDeparture, CavAccelerateThenCruise) {
  VehicleState v = cav(0.0, 100.0, 5.0);
  v.a_max = 2.0;
  // Accelerate 5 s over 50 m, cruise the remaining 50 m at 15 m/s.
  const double expected = 5.0 + 50.0 / 15.0;
  EXPECT_NEAR(earliest_departure(v, kVbar), expected, 1e-9);

  // Cross-check against numeric integration of the same profile.
  double t = 0.0, d = 0.0, speed = 5.0;
  const double step = 1e-5;
  while (d < 100.0) {
    speed = std::min(speed + v.a_max * step, kVbar);
    d += speed * step;
    t += step;
  }
  EXPECT_NEAR(earliest_departure(v, kVbar), t, 1e-3);
}

TEST(EarliestDeparture, StoppedCnvNeverDeparts) {
  EXPECT_TRUE(std::isinf(earliest_departure(cnv(0.0, 50.0, 0.0), kVbar)));
}

TEST(PlanLeadCav, ConstantSpeedInstanceIsLinear) {
  // v0 = vbar and d0 = vbar * T: the constant-speed line is feasible, and it
  // is optimal because f >= max(0, d0 - vbar t) pointwise for any feasible f.
  const double T = 8.0;
  const auto traj = plan_lead_cav(cav(0.0, kVbar * T, kVbar), T, kVbar, 9, 20);
  ASSERT_TRUE(traj.has_value());
  double objective = 0.0;
  for (std::size_t n = 0; n < traj->coeffs.size(); ++n) {
    objective += T / (static_cast<double>(n) + 1.0) * traj->coeffs[n];
  }
  EXPECT_NEAR(objective, kVbar * T * T / 2.0, 1e-5);
  for (double t = 0.0; t <= T; t += 0.5) {
    const Kinematics k = evaluate(Trajectory{*traj}, t);
    EXPECT_NEAR(k.distance, kVbar * (T - t), 1e-5);
    EXPECT_NEAR(k.speed, kVbar, 1e-5);
  }
}

TEST(PlanLeadCav, BoundaryEqualitiesHold) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> d0(60.0, 400.0);
  std::uniform_real_distribution<double> v0(3.0, 15.0);
  std::uniform_real_distribution<double> slack(1.1, 2.5);
  for (int iter = 0; iter < 25; ++iter) {
    VehicleState v = cav(0.0, d0(rng), v0(rng));
    const double t_min = earliest_departure(v, kVbar);
    const double T = t_min * slack(rng);
    const auto traj = plan_lead_cav(v, T, kVbar, 9, 20);
    if (!traj) continue;
    const Kinematics start = evaluate(Trajectory{*traj}, 0.0);
    const Kinematics end = evaluate(Trajectory{*traj}, T);
    EXPECT_NEAR(start.distance, v.d0, 1e-6);
    EXPECT_NEAR(start.speed, v.v0, 1e-6);
    EXPECT_NEAR(end.distance, 0.0, 1e-6);
    EXPECT_NEAR(end.speed, kVbar, 1e-6);
  }
}

TEST(PlanLeadCav, AreaMonotoneInDegree) {
  // The degree-k optimum embeds into degree k+1 with a zero top coefficient,
  // so the optimal area cannot increase with k.
  VehicleState v = cav(0.0, 150.0, 8.0);
  const double T = earliest_departure(v, kVbar) * 1.6;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 4; k <= 9; ++k) {
    const auto traj = plan_lead_cav(v, T, kVbar, k, 20);
    ASSERT_TRUE(traj.has_value()) << "k=" << k;
    double objective = 0.0;
    for (std::size_t n = 0; n < traj->coeffs.size(); ++n) {
      objective += T / (static_cast<double>(n) + 1.0) * traj->coeffs[n];
    }
    EXPECT_LE(objective, prev + 1e-6) << "k=" << k;
    prev = objective;
  }
}

TEST(PlanFollowerCav, FarLeadMatchesLeadPlan) {
  VehicleState v = cav(0.0, 120.0, 10.0);
  const double T = earliest_departure(v, kVbar) * 1.5;
  const auto lead_plan = plan_lead_cav(v, T, kVbar, 7, 16);
  ASSERT_TRUE(lead_plan.has_value());

  // A leader already far beyond the stop bar leaves the spacing rows slack.
  SampledTrajectory far;
  far.samples.push_back({0.0, -500.0, kVbar, 0.0});
  Trajectory far_traj{far};
  LeadView lead{&far_traj, 4.5, 0.0};
  const auto fol_plan = plan_follower_cav(v, lead, T, kVbar, 7, 16, 1.2, HeadwayMode::SpeedScaled);
  ASSERT_TRUE(fol_plan.has_value());
  ASSERT_EQ(fol_plan->coeffs.size(), lead_plan->coeffs.size());
  for (std::size_t i = 0; i < lead_plan->coeffs.size(); ++i) {
    EXPECT_NEAR(fol_plan->coeffs[i], lead_plan->coeffs[i], 1e-6);
  }
}

TEST(PlanFollowerCav, HeadwayHoldsAtDenseSamples) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> d0(150.0, 400.0);
  std::uniform_real_distribution<double> v0(6.0, 14.0);
  const double h = 1.2;
  const TrajectoryConfig cfg;
  int checked = 0;
  for (int iter = 0; iter < 40; ++iter) {
    VehicleState lead_v = cav(0.0, d0(rng), v0(rng));
    const double lead_T = earliest_departure(lead_v, kVbar) * 1.3;
    const auto lead_plan = plan_lead_cav(lead_v, lead_T, kVbar, 9, 20);
    if (!lead_plan) continue;
    Trajectory lead_traj{*lead_plan};

    VehicleState fol_v = cav(0.0, lead_v.d0 + 30.0, v0(rng));
    const double fol_T = std::max(earliest_departure(fol_v, kVbar) * 1.3, lead_T + h + 2.0);
    LeadView lead{&lead_traj, 4.5, lead_T};
    const auto fol_plan = plan_follower_cav_validated(fol_v, lead, fol_T, kVbar, h, cfg);
    if (!fol_plan) continue;
    ++checked;
    const double gap = kVbar * h;
    for (int i = 1; i < 100; ++i) {
      const double t = fol_T * i / 100.0;
      const double fol_d = evaluate(Trajectory{*fol_plan}, t).distance;
      const double lead_d = evaluate_extended(lead_traj, t).distance;
      EXPECT_GE(fol_d - lead_d, gap * 0.99 - 1e-9) << "iter " << iter << " t " << t;
    }
  }
  EXPECT_GE(checked, 12);
}

TEST(PlanFollowerCav, DepartureSeparationAtTheBar) {
  VehicleState lead_v = cav(0.0, 200.0, 12.0);
  const double lead_T = earliest_departure(lead_v, kVbar) * 1.4;
  const auto lead_plan = plan_lead_cav(lead_v, lead_T, kVbar, 9, 20);
  ASSERT_TRUE(lead_plan.has_value());
  Trajectory lead_traj{*lead_plan};

  // Departure slots exactly h apart: the spacing rows stay feasible and the
  // two trajectories cross the bar h seconds apart.
  const double h = 1.2;
  const int m = 20;
  VehicleState fol_v = cav(0.0, 225.0, 12.0);
  const double fol_T = lead_T + h;
  LeadView lead{&lead_traj, 4.5, lead_T};
  const auto fol_plan =
      plan_follower_cav(fol_v, lead, fol_T, kVbar, 9, m, h, HeadwayMode::SpeedScaled);
  ASSERT_TRUE(fol_plan.has_value());
  EXPECT_NEAR(evaluate(Trajectory{*fol_plan}, fol_T).distance, 0.0, 1e-6);
  EXPECT_NEAR(evaluate(lead_traj, lead_T).distance, 0.0, 1e-6);
  // The spacing rows hold at every control point.
  const double gap = kVbar * h;
  for (int j = 1; j <= m; ++j) {
    const double t = fol_T * j / (m + 1);
    const double fol_d = evaluate(Trajectory{*fol_plan}, t).distance;
    const double lead_d = evaluate_extended(lead_traj, t).distance;
    EXPECT_GE(fol_d - lead_d, gap - 1e-6) << "control point " << j;
  }
  // At the leader's departure instant the follower is about h seconds out.
  const double fol_at_lead_dep = evaluate(Trajectory{*fol_plan}, lead_T).distance;
  EXPECT_GE(fol_at_lead_dep, gap * 0.98);
}

TEST(EstimateCnv, LeadKeepsConstantSpeed) {
  const SampledTrajectory traj = estimate_cnv_trajectory(cnv(0.0, 120.0, 12.0), std::nullopt, kVbar);
  const Kinematics k = evaluate(Trajectory{traj}, 5.0);
  EXPECT_NEAR(k.distance, 60.0, 1e-9);
  EXPECT_NEAR(k.speed, 12.0, 1e-9);
}

TEST(EstimateCnv, SlowStartMatchesDirectEquationEvaluation) {
  // Follower far behind a distant leader: the acceleration branch governs.
  VehicleState v = cnv(0.0, 300.0, 0.0);
  v.v_des = 15.0;
  v.a_acc = 1.7;
  v.reaction = 1.0;
  SampledTrajectory lead_line;
  lead_line.samples.push_back({0.0, -700.0, 15.0, 0.0});  // 1000 m ahead
  Trajectory lead_traj{lead_line};
  LeadView lead{&lead_traj, 4.5, 60.0};
  const SampledTrajectory est = estimate_cnv_trajectory(v, lead, kVbar);

  // Direct evaluation of the update at v = 0.
  const double acc_term = 0.0 + 2.5 * 1.7 * 1.0 * (1.0 - 0.0 / 15.0) * std::sqrt(0.025 + 0.0);
  ASSERT_GE(est.samples.size(), 2u);
  EXPECT_NEAR(est.samples[1].speed, acc_term, 1e-12);
  EXPECT_FALSE(est.braking_flagged);
}

TEST(EstimateCnv, StoppedLeaderForcesZeroSpeed) {
  // Queued follower with zero bumper gap behind a stopped leader: the
  // braking branch evaluates to exactly zero, so the clamped speed stays
  // zero and the follower never moves into the leader.
  VehicleState v = cnv(0.0, 30.0, 0.0);
  SampledTrajectory stopped;
  stopped.samples.push_back({0.0, 25.5, 0.0, 0.0});  // gap = leader length exactly
  Trajectory lead_traj{stopped};
  LeadView lead{&lead_traj, 4.5, 20.0};
  const SampledTrajectory est = estimate_cnv_trajectory(v, lead, kVbar);
  ASSERT_GE(est.samples.size(), 2u);
  for (const TrajectorySample& s : est.samples) {
    EXPECT_NEAR(s.distance, 30.0, 1e-9);
    EXPECT_NEAR(s.speed, 0.0, 1e-12);
  }
  // Sign check on the braking term directly: an already-moving follower with
  // zero net gap gets a non-positive update (it cannot avoid encroaching).
  bool flagged = false;
  const double brake = gipps_braking_speed(30.0, 8.0, 25.5, 0.0, 4.5, -3.4, 1.0, &flagged);
  EXPECT_LE(brake, 1e-12);
}

TEST(Evaluate, LinearTrajectory) {
  SampledTrajectory line;
  line.samples.push_back({0.0, 100.0, 10.0, 0.0});
  line.samples.push_back({10.0, 0.0, 10.0, 0.0});
  const Kinematics k = evaluate(Trajectory{line}, 4.0);
  EXPECT_NEAR(k.distance, 60.0, 1e-12);
  EXPECT_NEAR(k.speed, 10.0, 1e-12);
  EXPECT_NEAR(k.accel, 0.0, 1e-12);
  EXPECT_NEAR(k.jerk, 0.0, 1e-12);
}

TEST(Evaluate, OutsideDomainThrows) {
  SampledTrajectory line;
  line.samples.push_back({0.0, 100.0, 10.0, 0.0});
  line.samples.push_back({10.0, 0.0, 10.0, 0.0});
  EXPECT_THROW(evaluate(Trajectory{line}, -1.0), std::out_of_range);
  EXPECT_THROW(evaluate(Trajectory{line}, 11.0), std::out_of_range);
}

TEST(Evaluate, PolySpeedMatchesFiniteDifferences) {
  std::mt19937_64 rng(5150);
  std::uniform_real_distribution<double> d0(80.0, 300.0);
  std::uniform_real_distribution<double> v0(4.0, 14.0);
  for (int iter = 0; iter < 20; ++iter) {
    VehicleState v = cav(0.0, d0(rng), v0(rng));
    const double T = earliest_departure(v, kVbar) * 1.5;
    const auto traj = plan_lead_cav(v, T, kVbar, 9, 20);
    if (!traj) continue;
    const Trajectory t{*traj};
    for (double x = 0.1; x < T - 0.1; x += T / 7.0) {
      const double step = 1e-4;
      const double fd_speed =
          -(evaluate(t, x + step).distance - evaluate(t, x - step).distance) / (2.0 * step);
      const double fd_accel =
          (evaluate(t, x + step).speed - evaluate(t, x - step).speed) / (2.0 * step);
      const Kinematics k = evaluate(t, x);
      EXPECT_NEAR(k.speed, fd_speed, 1e-3);
      EXPECT_NEAR(k.accel, fd_accel, 1e-3);
    }
    EXPECT_NEAR(evaluate(t, 0.0).speed, v.v0, 1e-6);
  }
}

TEST(Evaluate, ControlPointEnvelopeRespected) {
  std::mt19937_64 rng(1812);
  std::uniform_real_distribution<double> d0(80.0, 350.0);
  std::uniform_real_distribution<double> v0(3.0, 14.0);
  for (int iter = 0; iter < 25; ++iter) {
    VehicleState v = cav(0.0, d0(rng), v0(rng));
    const double T = earliest_departure(v, kVbar) * 1.4;
    const int m = 20;
    const auto traj = plan_lead_cav(v, T, kVbar, 9, m);
    if (!traj) continue;
    for (int j = 1; j <= m; ++j) {
      const double t = T * j / (m + 1);
      const Kinematics k = evaluate(Trajectory{*traj}, t);
      EXPECT_GE(k.speed, -1e-6);
      EXPECT_LE(k.speed, kVbar + 1e-6);
      EXPECT_GE(k.accel, v.a_min - 1e-6);
      EXPECT_LE(k.accel, v.a_max + 1e-6);
      EXPECT_GE(k.jerk, v.j_min - 1e-6);
      EXPECT_LE(k.jerk, v.j_max + 1e-6);
    }
  }
}

TEST(SampledArrivalProfile, HitsTheBarAtTheTarget) {
  VehicleState v = cav(10.0, 250.0, 9.0);
  const double slot = 10.0 + 32.0;
  const SampledTrajectory traj = sampled_arrival_profile(v, slot, kVbar, 1.0);
  EXPECT_NEAR(traj.end_time(), slot, 1e-9);
  EXPECT_NEAR(traj.samples.back().distance, 0.0, 1e-9);
  EXPECT_NEAR(evaluate(Trajectory{traj}, 10.0).distance, 250.0, 1e-9);
  // Distances decrease monotonically.
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    EXPECT_LE(traj.samples[i].distance, traj.samples[i - 1].distance + 1e-9);
  }
}

}  // namespace
}  // namespace rio
