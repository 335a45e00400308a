#pragma once

#include <algorithm>
#include <set>
#include <vector>

#include "decoynet/config.hpp"
#include "decoynet/errors.hpp"

namespace decoynet::grid {

struct CriticalBus {
  int bus_id = 0;
  bool restored = true;
};

// Bus-status bookkeeping stands in for power flow: the physical reward only
// needs the unrestored count, so each critical bus is a boolean and each
// outage keeps a synthetic line (id == bus_id) in outage_lines.
struct GridState {
  std::vector<CriticalBus> critical_buses;
  int n_res = 0;
  std::set<int> outage_lines;
};

inline int recount(const GridState& g) {
  int n = 0;
  for (const auto& b : g.critical_buses)
    if (!b.restored) ++n;
  return n;
}

inline GridState init_grid(int n_critical, int n_initial_outages) {
  if (n_critical < 1) throw ConfigError("init_grid: n_critical must be >= 1");
  if (n_initial_outages < 0 || n_initial_outages > n_critical)
    throw ConfigError("init_grid: n_initial_outages must lie in [0, n_critical]");
  GridState g;
  for (int i = 0; i < n_critical; ++i)
    g.critical_buses.push_back({i, i >= n_initial_outages});
  for (int i = 0; i < n_initial_outages; ++i) g.outage_lines.insert(i);
  g.n_res = n_initial_outages;
  return g;
}

inline GridState init_grid(const GridConfig& cfg) {
  return init_grid(cfg.n_critical, cfg.n_initial_outages);
}

// Containment buys the operator time: one bus (lowest id) comes back per
// contained step. An uncontained step makes no progress.
inline GridState restoration_tick(GridState state, bool attacker_contained) {
  if (!attacker_contained) return state;
  for (auto& b : state.critical_buses) {
    if (!b.restored) {
      b.restored = true;
      state.outage_lines.erase(b.bus_id);
      --state.n_res;
      break;
    }
  }
  return state;
}

// Malicious commands that land on real devices trip restored buses, highest
// id first, capped at the bus count.
inline GridState apply_compromise(GridState state, int n_new_outages) {
  if (n_new_outages < 0) throw ConfigError("apply_compromise: n_new_outages must be >= 0");
  for (int k = 0; k < n_new_outages; ++k) {
    auto it = std::find_if(state.critical_buses.rbegin(), state.critical_buses.rend(),
                           [](const CriticalBus& b) { return b.restored; });
    if (it == state.critical_buses.rend()) break;
    it->restored = false;
    state.outage_lines.insert(it->bus_id);
    ++state.n_res;
  }
  return state;
}

}  // namespace decoynet::grid
