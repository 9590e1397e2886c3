#include "rio/min_cost_flow.hpp"

#include <algorithm>
#include <cassert>
#include <queue>
#include <stdexcept>

namespace rio {
namespace {

struct ResidualArc {
  int to = 0;
  std::int64_t residual = 0;
  std::int64_t cost = 0;
  int partner = 0;  // index of the reverse arc in the adjacency of `to`
  int orig = -1;    // original arc index, -1 for reverse arcs
};

struct ResidualGraph {
  std::vector<std::vector<ResidualArc>> adj;

  void add(int from, int to, std::int64_t residual, std::int64_t cost, int orig) {
    adj[from].push_back(ResidualArc{to, residual, cost, static_cast<int>(adj[to].size()), orig});
    adj[to].push_back(ResidualArc{from, 0, -cost, static_cast<int>(adj[from].size()) - 1, -1});
  }
};

constexpr std::int64_t kInfDist = std::numeric_limits<std::int64_t>::max() / 4;

}  // namespace

FlowSolution solve_min_cost_flow(const FlowNetwork& net) {
  const int n = net.node_count();
  FlowSolution sol;
  sol.flows.assign(net.arcs.size(), 0);
  sol.potentials.assign(n, 0);

  std::int64_t supply_sum = 0;
  for (std::int64_t b : net.supply) supply_sum += b;
  if (supply_sum != 0) {
    sol.status = FlowStatus::Infeasible;
    return sol;
  }
  for (const FlowArc& a : net.arcs) {
    if (a.cost < 0) throw std::invalid_argument("solve_min_cost_flow: negative arc cost");
    if (a.lower > a.capacity) throw std::invalid_argument("solve_min_cost_flow: lower > capacity");
    if (a.from < 0 || a.from >= n || a.to < 0 || a.to >= n) {
      throw std::invalid_argument("solve_min_cost_flow: arc endpoint out of range");
    }
  }

  // Remove lower bounds: routing l units up-front shifts the node balances.
  std::vector<std::int64_t> excess(net.supply.begin(), net.supply.end());
  ResidualGraph g;
  g.adj.assign(n, {});
  for (std::size_t i = 0; i < net.arcs.size(); ++i) {
    const FlowArc& a = net.arcs[i];
    excess[a.from] -= a.lower;
    excess[a.to] += a.lower;
    g.add(a.from, a.to, a.capacity - a.lower, a.cost, static_cast<int>(i));
  }

  std::vector<std::int64_t>& pi = sol.potentials;
  std::vector<std::int64_t> dist(n);
  std::vector<std::pair<int, int>> parent(n);  // (node, adjacency index)
  std::vector<char> settled(n);

  auto total_excess = [&]() {
    std::int64_t s = 0;
    for (std::int64_t e : excess) {
      if (e > 0) s += e;
    }
    return s;
  };

  while (total_excess() > 0) {
    // Multi-source Dijkstra over reduced costs from all excess nodes.
    std::fill(dist.begin(), dist.end(), kInfDist);
    std::fill(settled.begin(), settled.end(), 0);
    using Item = std::pair<std::int64_t, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    for (int v = 0; v < n; ++v) {
      if (excess[v] > 0) {
        dist[v] = 0;
        parent[v] = {-1, -1};
        pq.push({0, v});
      }
    }
    int reached_deficit = -1;
    while (!pq.empty()) {
      auto [d, v] = pq.top();
      pq.pop();
      if (settled[v]) continue;
      settled[v] = 1;
      if (excess[v] < 0 && reached_deficit < 0) {
        reached_deficit = v;
        break;
      }
      for (std::size_t k = 0; k < g.adj[v].size(); ++k) {
        const ResidualArc& ra = g.adj[v][k];
        if (ra.residual <= 0) continue;
        const std::int64_t rc = ra.cost + pi[v] - pi[ra.to];
        assert(rc >= 0);
        if (d + rc < dist[ra.to]) {
          dist[ra.to] = d + rc;
          parent[ra.to] = {v, static_cast<int>(k)};
          pq.push({dist[ra.to], ra.to});
        }
      }
    }
    if (reached_deficit < 0) {
      sol.status = FlowStatus::Infeasible;
      return sol;
    }

    // Make reduced costs of the shortest-path tree arcs zero. Unreached
    // nodes advance by the full deficit distance, which keeps the reduced
    // costs of their incident residual arcs nonnegative as well.
    for (int v = 0; v < n; ++v) {
      pi[v] += std::min(dist[v], dist[reached_deficit]);
    }

    // Augment along the path by the bottleneck amount.
    std::int64_t push = -excess[reached_deficit];
    for (int v = reached_deficit; parent[v].first >= 0;) {
      auto [u, k] = parent[v];
      push = std::min(push, g.adj[u][k].residual);
      v = u;
    }
    int path_root = reached_deficit;
    while (parent[path_root].first >= 0) path_root = parent[path_root].first;
    push = std::min(push, excess[path_root]);

    for (int v = reached_deficit; parent[v].first >= 0;) {
      auto [u, k] = parent[v];
      ResidualArc& fwd = g.adj[u][k];
      fwd.residual -= push;
      g.adj[v][fwd.partner].residual += push;
      v = u;
    }
    excess[path_root] -= push;
    excess[reached_deficit] += push;
  }

  // Recover flows: lower bound plus whatever the reverse arc accumulated.
  for (int v = 0; v < n; ++v) {
    for (const ResidualArc& ra : g.adj[v]) {
      if (ra.orig >= 0) {
        const FlowArc& a = net.arcs[ra.orig];
        const std::int64_t routed = (a.capacity - a.lower) - ra.residual;
        sol.flows[ra.orig] = a.lower + routed;
      }
    }
  }
  sol.objective = 0;
  for (std::size_t i = 0; i < net.arcs.size(); ++i) {
    sol.objective += net.arcs[i].cost * sol.flows[i];
  }
  sol.status = FlowStatus::Optimal;
  return sol;
}

bool verify_flow_optimality(const FlowNetwork& net, const FlowSolution& sol) {
  if (sol.status != FlowStatus::Optimal) return false;
  const int n = net.node_count();
  std::vector<std::int64_t> balance(n, 0);
  for (std::size_t i = 0; i < net.arcs.size(); ++i) {
    const FlowArc& a = net.arcs[i];
    const std::int64_t f = sol.flows[i];
    if (f < a.lower || f > a.capacity) return false;
    balance[a.from] += f;
    balance[a.to] -= f;
    // Reduced-cost optimality on both residual directions.
    const std::int64_t rc = a.cost + sol.potentials[a.from] - sol.potentials[a.to];
    if (f < a.capacity && rc < 0) return false;
    if (f > a.lower && -rc < 0) return false;
  }
  for (int v = 0; v < n; ++v) {
    if (balance[v] != net.supply[v]) return false;
  }
  return true;
}

}  // namespace rio
