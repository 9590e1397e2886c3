#pragma once

// Test-only exhaustive search over per-(lane, phase) served counts for small
// phase-time-allocation instances, mirroring the arc capacities and big-M
// reject pricing of the flow model but enumerating states directly.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "rio/signal_timing.hpp"

namespace rio::testing {

inline std::int64_t exhaustive_allocation_cost(const std::vector<std::int64_t>& demand,
                                               const PhaseSet& phases,
                                               const SignalParams& params) {
  const int L = static_cast<int>(demand.size());
  const int P = static_cast<int>(phases.phases.size());
  const std::int64_t cap = params.max_served_per_lane();
  std::int64_t max_size = 0;
  std::int64_t total = 0;
  for (const Phase& ph : phases.phases) {
    max_size = std::max<std::int64_t>(max_size, static_cast<std::int64_t>(ph.lanes.size()));
  }
  for (std::int64_t d : demand) total += d;
  const std::int64_t big_m = (max_size + 1) * std::max<std::int64_t>(total, 1) + 1;

  std::vector<std::pair<int, int>> cells;
  for (int l = 0; l < L; ++l) {
    for (int p = 0; p < P; ++p) {
      const auto& lanes = phases.phases[p].lanes;
      if (std::find(lanes.begin(), lanes.end(), l) != lanes.end()) cells.emplace_back(l, p);
    }
  }
  std::vector<std::int64_t> lane_used(L, 0), phase_used(P, 0);
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  auto rec = [&](auto&& self, std::size_t i, std::int64_t cost) -> void {
    if (i == cells.size()) {
      std::int64_t final_cost = cost;
      for (int l = 0; l < L; ++l) final_cost += big_m * (demand[l] - lane_used[l]);
      best = std::min(best, final_cost);
      return;
    }
    const auto [l, p] = cells[i];
    const std::int64_t unit = max_size - static_cast<std::int64_t>(phases.phases[p].lanes.size());
    const std::int64_t split_cap = cap * static_cast<std::int64_t>(phases.phases[p].lanes.size());
    for (std::int64_t f = 0; f <= cap; ++f) {
      if (lane_used[l] + f > demand[l]) break;
      if (phase_used[p] + f > split_cap) break;
      lane_used[l] += f;
      phase_used[p] += f;
      self(self, i + 1, cost + unit * f);
      lane_used[l] -= f;
      phase_used[p] -= f;
    }
  };
  rec(rec, 0, 0);
  return best;
}

}  // namespace rio::testing
