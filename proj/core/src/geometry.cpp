#include "rio/geometry.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rio {

std::string to_string(Movement m) {
  switch (m) {
    case Movement::Through: return "through";
    case Movement::Left: return "left";
    case Movement::Right: return "right";
  }
  return "?";
}

std::optional<Movement> movement_from_string(const std::string& s) {
  if (s == "through") return Movement::Through;
  if (s == "left") return Movement::Left;
  if (s == "right") return Movement::Right;
  return std::nullopt;
}

Intersection::Intersection(std::vector<Lane> lanes, double speed_limit_mps, double detection_range_m)
    : lanes_(std::move(lanes)), speed_limit_(speed_limit_mps), detection_range_(detection_range_m) {
  if (speed_limit_ <= 0.0) throw std::invalid_argument("speed limit must be positive");
  if (detection_range_ <= 0.0) throw std::invalid_argument("detection range must be positive");
  for (std::size_t i = 0; i < lanes_.size(); ++i) {
    if (lanes_[i].id != static_cast<int>(i)) throw std::invalid_argument("lane ids must be 0..n-1 in order");
    if (lanes_[i].movements.empty()) throw std::invalid_argument("lane movements must be non-empty");
  }
  conflict_.assign(lanes_.size() * lanes_.size(), 0);
}

void Intersection::set_conflict(int a, int b, bool conflicting) {
  if (a == b) throw std::invalid_argument("a lane cannot conflict with itself");
  conflict_[index(a, b)] = conflicting ? 1 : 0;
  conflict_[index(b, a)] = conflicting ? 1 : 0;
}

std::vector<std::pair<int, int>> Intersection::conflict_pairs() const {
  std::vector<std::pair<int, int>> out;
  for (int a = 0; a < lane_count(); ++a) {
    for (int b = a + 1; b < lane_count(); ++b) {
      if (conflicts(a, b)) out.emplace_back(a, b);
    }
  }
  return out;
}

namespace {

struct Dir {
  int x = 0;
  int y = 0;
  bool operator==(const Dir&) const = default;
};

std::optional<Dir> approach_dir(const std::string& approach) {
  if (approach == "NB") return Dir{0, 1};
  if (approach == "SB") return Dir{0, -1};
  if (approach == "EB") return Dir{1, 0};
  if (approach == "WB") return Dir{-1, 0};
  return std::nullopt;
}

Dir out_dir(Dir d, Movement m) {
  switch (m) {
    case Movement::Through: return d;
    case Movement::Left: return Dir{-d.y, d.x};   // 90 degrees counterclockwise
    case Movement::Right: return Dir{d.y, -d.x};  // 90 degrees clockwise
  }
  return d;
}

// Bron-Kerbosch with pivoting over adjacency bitmasks (compatibility graph).
void bron_kerbosch(std::uint32_t r, std::uint32_t p, std::uint32_t x,
                   const std::vector<std::uint32_t>& adj, std::vector<std::uint32_t>& out) {
  if (p == 0 && x == 0) {
    out.push_back(r);
    return;
  }
  // Pivot on the candidate with the most neighbours in P.
  std::uint32_t px = p | x;
  int pivot = -1;
  int best = -1;
  for (std::uint32_t s = px; s != 0; s &= s - 1) {
    const int v = std::countr_zero(s);
    const int deg = std::popcount(adj[v] & p);
    if (deg > best) {
      best = deg;
      pivot = v;
    }
  }
  std::uint32_t candidates = p & ~adj[pivot];
  for (std::uint32_t s = candidates; s != 0; s &= s - 1) {
    const int v = std::countr_zero(s);
    const std::uint32_t bit = 1u << v;
    bron_kerbosch(r | bit, p & adj[v], x & adj[v], adj, out);
    p &= ~bit;
    x |= bit;
  }
}

}  // namespace

bool movements_conflict(const std::string& approach_a, Movement a,
                        const std::string& approach_b, Movement b) {
  if (approach_a == approach_b) return false;
  const auto da = approach_dir(approach_a);
  const auto db = approach_dir(approach_b);
  if (!da || !db) throw std::invalid_argument("unknown approach label: " + approach_a + "/" + approach_b);

  // Merging conflict: both movements feed the same outbound leg.
  if (out_dir(*da, a) == out_dir(*db, b)) return true;

  // Path-crossing conflicts. Right turns hug their corner and never cross.
  if (a == Movement::Right || b == Movement::Right) return false;
  const bool opposing = (da->x == -db->x && da->y == -db->y);
  if (a == Movement::Through && b == Movement::Through) return !opposing;
  if (a == Movement::Left && b == Movement::Left) return !opposing;
  return true;  // through vs left crosses whether opposing or perpendicular
}

PhaseSet enumerate_phases(const Intersection& intersection) {
  const int n = intersection.lane_count();
  if (n > 32) throw std::invalid_argument("enumerate_phases supports up to 32 lanes");
  std::vector<std::uint32_t> adj(n, 0);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a != b && !intersection.conflicts(a, b)) adj[a] |= 1u << b;
    }
  }
  std::vector<std::uint32_t> cliques;
  const std::uint32_t all = (n == 32) ? ~0u : ((1u << n) - 1);
  bron_kerbosch(0, all, 0, adj, cliques);

  PhaseSet set;
  set.lane_count = n;
  for (std::uint32_t c : cliques) {
    Phase phase;
    for (std::uint32_t s = c; s != 0; s &= s - 1) phase.lanes.push_back(std::countr_zero(s));
    set.phases.push_back(std::move(phase));
  }
  std::sort(set.phases.begin(), set.phases.end(),
            [](const Phase& lhs, const Phase& rhs) { return lhs.lanes < rhs.lanes; });
  for (std::size_t i = 0; i < set.phases.size(); ++i) set.phases[i].id = static_cast<int>(i);
  return set;
}

std::string PhaseViolation::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::ConflictingPair:
      os << "phase " << phase_id << " contains conflicting lanes " << lane_a << " and " << lane_b;
      break;
    case Kind::UncoveredLane:
      os << "lane " << lane_a << " is covered by no phase";
      break;
    case Kind::UnknownLane:
      os << "phase " << phase_id << " references unknown lane " << lane_a;
      break;
    case Kind::EmptyPhase:
      os << "phase " << phase_id << " contains no lanes";
      break;
  }
  return os.str();
}

PhaseValidation validate_phase_set(const PhaseSet& phases, const Intersection& intersection) {
  PhaseValidation result;
  std::vector<char> covered(intersection.lane_count(), 0);
  for (const Phase& phase : phases.phases) {
    if (phase.lanes.empty()) {
      result.violations.push_back({PhaseViolation::Kind::EmptyPhase, phase.id, -1, -1});
      continue;
    }
    for (int lane : phase.lanes) {
      if (lane < 0 || lane >= intersection.lane_count()) {
        result.violations.push_back({PhaseViolation::Kind::UnknownLane, phase.id, lane, -1});
      } else {
        covered[lane] = 1;
      }
    }
    for (std::size_t i = 0; i < phase.lanes.size(); ++i) {
      for (std::size_t j = i + 1; j < phase.lanes.size(); ++j) {
        const int a = phase.lanes[i];
        const int b = phase.lanes[j];
        if (a < 0 || b < 0 || a >= intersection.lane_count() || b >= intersection.lane_count()) continue;
        if (intersection.conflicts(a, b)) {
          result.violations.push_back({PhaseViolation::Kind::ConflictingPair, phase.id, a, b});
        }
      }
    }
  }
  for (int lane = 0; lane < intersection.lane_count(); ++lane) {
    if (!covered[lane]) {
      result.violations.push_back({PhaseViolation::Kind::UncoveredLane, -1, lane, -1});
    }
  }
  return result;
}

std::vector<std::vector<int>> incidence_matrix(const PhaseSet& phases) {
  std::vector<std::vector<int>> pi(phases.lane_count, std::vector<int>(phases.phases.size(), 0));
  for (std::size_t p = 0; p < phases.phases.size(); ++p) {
    for (int lane : phases.phases[p].lanes) {
      pi[static_cast<std::size_t>(lane)][p] = 1;
    }
  }
  return pi;
}

Geometry make_case_study() {
  const char* approaches[4] = {"NB", "SB", "EB", "WB"};
  std::vector<Lane> lanes;
  for (int a = 0; a < 4; ++a) {
    const int base = a * 4;
    lanes.push_back({base + 0, {Movement::Left}, approaches[a]});
    lanes.push_back({base + 1, {Movement::Through}, approaches[a]});
    lanes.push_back({base + 2, {Movement::Through}, approaches[a]});
    lanes.push_back({base + 3, {Movement::Through, Movement::Right}, approaches[a]});
  }
  Intersection intersection(std::move(lanes), 15.0, 500.0);
  for (int a = 0; a < intersection.lane_count(); ++a) {
    for (int b = a + 1; b < intersection.lane_count(); ++b) {
      const Lane& la = intersection.lane(a);
      const Lane& lb = intersection.lane(b);
      bool conflict = false;
      for (Movement ma : la.movements) {
        for (Movement mb : lb.movements) {
          if (movements_conflict(la.approach, ma, lb.approach, mb)) conflict = true;
        }
      }
      if (conflict) intersection.set_conflict(a, b);
    }
  }
  PhaseSet phases = enumerate_phases(intersection);
  return Geometry{std::move(intersection), std::move(phases)};
}

namespace {

Geometry geometry_from_json(const nlohmann::json& j) {
  std::vector<Lane> lanes;
  for (const auto& jl : j.at("lanes")) {
    Lane lane;
    lane.id = jl.at("id").get<int>();
    lane.approach = jl.at("approach").get<std::string>();
    for (const auto& jm : jl.at("movements")) {
      const auto m = movement_from_string(jm.get<std::string>());
      if (!m) throw std::runtime_error("unknown movement: " + jm.get<std::string>());
      lane.movements.push_back(*m);
    }
    lanes.push_back(std::move(lane));
  }
  std::sort(lanes.begin(), lanes.end(), [](const Lane& a, const Lane& b) { return a.id < b.id; });

  Intersection intersection(std::move(lanes), j.at("speed_limit_mps").get<double>(),
                            j.at("detection_range_m").get<double>());
  if (j.contains("conflicts")) {
    for (const auto& jp : j.at("conflicts")) {
      intersection.set_conflict(jp.at(0).get<int>(), jp.at(1).get<int>());
    }
  } else {
    for (int a = 0; a < intersection.lane_count(); ++a) {
      for (int b = a + 1; b < intersection.lane_count(); ++b) {
        const Lane& la = intersection.lane(a);
        const Lane& lb = intersection.lane(b);
        for (Movement ma : la.movements) {
          for (Movement mb : lb.movements) {
            if (movements_conflict(la.approach, ma, lb.approach, mb)) {
              intersection.set_conflict(a, b);
            }
          }
        }
      }
    }
  }

  PhaseSet phases;
  phases.lane_count = intersection.lane_count();
  if (j.contains("phases")) {
    int id = 0;
    for (const auto& jp : j.at("phases")) {
      Phase phase;
      phase.id = id++;
      for (const auto& jl : jp) phase.lanes.push_back(jl.get<int>());
      std::sort(phase.lanes.begin(), phase.lanes.end());
      phases.phases.push_back(std::move(phase));
    }
  } else {
    phases = enumerate_phases(intersection);
  }
  return Geometry{std::move(intersection), std::move(phases)};
}

}  // namespace

Geometry parse_geometry_json(const std::string& text) {
  return geometry_from_json(nlohmann::json::parse(text));
}

Geometry load_geometry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open geometry file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_geometry_json(ss.str());
}

std::string geometry_to_json(const Geometry& geometry) {
  nlohmann::ordered_json j;
  j["lanes"] = nlohmann::ordered_json::array();
  for (const Lane& lane : geometry.intersection.lanes()) {
    nlohmann::ordered_json jl;
    jl["id"] = lane.id;
    jl["movements"] = nlohmann::ordered_json::array();
    for (Movement m : lane.movements) jl["movements"].push_back(to_string(m));
    jl["approach"] = lane.approach;
    j["lanes"].push_back(std::move(jl));
  }
  j["conflicts"] = nlohmann::ordered_json::array();
  for (const auto& [a, b] : geometry.intersection.conflict_pairs()) {
    j["conflicts"].push_back({a, b});
  }
  j["speed_limit_mps"] = geometry.intersection.speed_limit();
  j["detection_range_m"] = geometry.intersection.detection_range();
  j["phases"] = nlohmann::ordered_json::array();
  for (const Phase& phase : geometry.phases.phases) {
    j["phases"].push_back(phase.lanes);
  }
  return j.dump(2) + "\n";
}

}  // namespace rio
