#pragma once

#include <optional>
#include <string>

namespace rio {

/// Reading of the per-phase green duration as a function of the served
/// vehicle count x. PaperLiteral is (h-1)*x + ls; HeadwayTimesCount is
/// h*(x-1) + ls, the form under which x departures at headway h starting
/// ls after green onset exactly fill the green.
enum class GreenFormula { PaperLiteral, HeadwayTimesCount };

/// Interpretation of the follower headway term added to the lead trajectory:
/// PaperLiteralH adds h directly (as meters); SpeedScaled adds vbar*h.
enum class HeadwayMode { PaperLiteralH, SpeedScaled };

std::string to_string(GreenFormula f);
std::string to_string(HeadwayMode m);
std::optional<GreenFormula> green_formula_from_string(const std::string& s);
std::optional<HeadwayMode> headway_mode_from_string(const std::string& s);

/// Polynomial trajectory planning knobs.
struct TrajectoryConfig {
  int degree = 9;           // polynomial degree k
  int control_points = 20;  // m interior control points
  HeadwayMode headway_mode = HeadwayMode::SpeedScaled;
  int dense_check_points = 200;  // post-solve validation sampling
  int max_m_doublings = 2;       // re-solve attempts when dense check fails
  // The spacing rows bind only at the control points; planning against a
  // slightly inflated gap absorbs the between-point dip so the nominal gap
  // holds on the whole interval.
  double headway_guard_m = 0.3;
};

/// Default kinematic limits; all per-vehicle overridable.
struct KinematicDefaults {
  double cav_a_max = 3.0;    // m/s^2
  double cav_a_min = -4.5;   // m/s^2
  double cav_j_max = 5.0;    // m/s^3
  double cav_j_min = -5.0;   // m/s^3
  double cnv_a_acc = 1.7;    // Gipps acceleration parameter
  double cnv_a_dec = -3.4;   // Gipps braking parameter (< 0)
  double cnv_reaction = 1.0; // Gipps reaction time / step, s
  double vehicle_length = 4.5;  // m
};

}  // namespace rio
