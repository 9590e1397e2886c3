#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rio {

enum class Movement : std::uint8_t { Through, Left, Right };

std::string to_string(Movement m);
std::optional<Movement> movement_from_string(const std::string& s);

struct Lane {
  int id = 0;
  std::vector<Movement> movements;  // non-empty, unique entries
  std::string approach;             // cardinal label, e.g. "NB"
};

/// Intersection geometry: lanes, the symmetric lane conflict relation, the
/// speed limit near the stop bars and the detection (communication) range.
/// Immutable after construction; safe to share across threads read-only.
class Intersection {
 public:
  Intersection(std::vector<Lane> lanes, double speed_limit_mps, double detection_range_m);

  void set_conflict(int a, int b, bool conflicting = true);
  bool conflicts(int a, int b) const { return conflict_[index(a, b)] != 0; }

  int lane_count() const { return static_cast<int>(lanes_.size()); }
  const std::vector<Lane>& lanes() const { return lanes_; }
  const Lane& lane(int id) const { return lanes_[static_cast<std::size_t>(id)]; }
  double speed_limit() const { return speed_limit_; }
  double detection_range() const { return detection_range_; }

  /// All conflicting lane pairs (a < b), in lexicographic order.
  std::vector<std::pair<int, int>> conflict_pairs() const;

 private:
  std::size_t index(int a, int b) const {
    return static_cast<std::size_t>(a) * lanes_.size() + static_cast<std::size_t>(b);
  }

  std::vector<Lane> lanes_;
  std::vector<std::uint8_t> conflict_;
  double speed_limit_ = 0.0;
  double detection_range_ = 0.0;
};

struct Phase {
  int id = 0;
  std::vector<int> lanes;  // sorted ascending
};

struct PhaseSet {
  std::vector<Phase> phases;
  int lane_count = 0;
};

/// Enumerates every feasible phase: the maximal cliques of the compatibility
/// graph (complement of the conflict relation), via Bron-Kerbosch with
/// pivoting. Output is canonical: lanes sorted within each phase, phases in
/// lexicographic order, ids assigned in that order.
PhaseSet enumerate_phases(const Intersection& intersection);

struct PhaseViolation {
  enum class Kind { ConflictingPair, UncoveredLane, UnknownLane, EmptyPhase };
  Kind kind;
  int phase_id = -1;
  int lane_a = -1;
  int lane_b = -1;
  std::string describe() const;
};

struct PhaseValidation {
  std::vector<PhaseViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// A phase set is valid when each phase is internally conflict-free and every
/// lane is covered by at least one phase. Returns all violations found.
PhaseValidation validate_phase_set(const PhaseSet& phases, const Intersection& intersection);

/// Phase-lane incidence matrix: entry [lane][phase] is 1 iff the lane belongs
/// to the phase. Dimensions lane_count x phases.size().
std::vector<std::vector<int>> incidence_matrix(const PhaseSet& phases);

/// Geometry plus the analyst-supplied (or enumerated) phase set.
struct Geometry {
  Intersection intersection;
  PhaseSet phases;
};

/// The shipped 16-lane case study: four approaches of [left, through,
/// through, through+right], conflicts derived from a movement path-crossing
/// and shared-receiving-leg check. Its eight maximal cliques are the classic
/// collection: two paired through phases, two paired left phases, and four
/// single-approach (split) phases.
Geometry make_case_study();

/// Conflict derivation used by the case study, exposed for tests and for
/// geometry files that list lanes but omit the conflict relation.
bool movements_conflict(const std::string& approach_a, Movement a,
                        const std::string& approach_b, Movement b);

Geometry load_geometry(const std::string& path);
Geometry parse_geometry_json(const std::string& text);
std::string geometry_to_json(const Geometry& geometry);

}  // namespace rio
