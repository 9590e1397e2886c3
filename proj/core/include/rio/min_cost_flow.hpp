#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace rio {

/// Sentinel capacity for arcs the model treats as uncapacitated.
inline constexpr std::int64_t kUncapped = std::numeric_limits<std::int64_t>::max() / 4;

struct FlowArc {
  int from = 0;
  int to = 0;
  std::int64_t cost = 0;      // per-unit cost, must be >= 0
  std::int64_t lower = 0;     // lower bound on flow
  std::int64_t capacity = 0;  // upper bound on flow
};

/// A directed network with node supplies b(i) (positive = source, negative =
/// sink). Supplies must sum to zero for the instance to be solvable.
struct FlowNetwork {
  std::vector<std::int64_t> supply;
  std::vector<FlowArc> arcs;

  int add_node(std::int64_t b = 0) {
    supply.push_back(b);
    return static_cast<int>(supply.size()) - 1;
  }

  int add_arc(int from, int to, std::int64_t cost, std::int64_t lower, std::int64_t capacity) {
    arcs.push_back(FlowArc{from, to, cost, lower, capacity});
    return static_cast<int>(arcs.size()) - 1;
  }

  int node_count() const { return static_cast<int>(supply.size()); }
};

enum class FlowStatus { Optimal, Infeasible };

struct FlowSolution {
  FlowStatus status = FlowStatus::Infeasible;
  std::vector<std::int64_t> flows;       // per arc, aligned with FlowNetwork::arcs
  std::int64_t objective = 0;            // sum of cost * flow
  std::vector<std::int64_t> potentials;  // node potentials certifying optimality
};

/// Solves the integral minimum cost flow problem by successive shortest
/// augmenting paths with node potentials. Requires nonnegative arc costs and
/// balanced supplies; lower bounds are removed by the usual transformation.
/// Ties between equal-cost paths break deterministically by node index and
/// arc insertion order.
FlowSolution solve_min_cost_flow(const FlowNetwork& net);

/// Checks the optimality certificate: flow is feasible and every residual arc
/// has nonnegative reduced cost under the solution's potentials.
bool verify_flow_optimality(const FlowNetwork& net, const FlowSolution& sol);

}  // namespace rio
