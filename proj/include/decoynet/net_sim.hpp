#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "decoynet/config.hpp"
#include "decoynet/errors.hpp"
#include "decoynet/rng.hpp"

namespace decoynet::net {

enum class NodeKind { router, master, rtu_real, rtu_pot, attacker };

inline std::string to_string(NodeKind k) {
  switch (k) {
    case NodeKind::router: return "router";
    case NodeKind::master: return "master";
    case NodeKind::rtu_real: return "rtu_real";
    case NodeKind::rtu_pot: return "rtu_pot";
    case NodeKind::attacker: return "attacker";
  }
  return "?";
}

struct Node {
  int id = 0;
  NodeKind kind = NodeKind::router;
};

struct Link {
  int from = 0;
  int to = 0;
  int interface_index = 0;  // meaningful when `from` is a router
};

// Router fabric: a directed router ring on interface 0 plus endpoint spokes on
// the remaining interfaces. Interfaces left without an endpoint alias the ring
// next-hop so every router exposes exactly n_interfaces choices.
struct Topology {
  std::vector<Node> nodes;
  std::vector<Link> links;
  int n_routers = 0;
  int n_interfaces = 0;

  // neighbor[r][i]: node reached from router r via interface i
  std::vector<std::vector<int>> neighbor;
  // access_router[node]: the router an endpoint hangs off (-1 for routers)
  std::vector<int> access_router;

  bool is_router(int id) const { return nodes[static_cast<size_t>(id)].kind == NodeKind::router; }
  NodeKind kind(int id) const { return nodes[static_cast<size_t>(id)].kind; }

  std::vector<int> nodes_of_kind(NodeKind k) const {
    std::vector<int> out;
    for (const auto& n : nodes)
      if (n.kind == k) out.push_back(n.id);
    return out;
  }
};

enum class PacketKind { recon_probe, dnp3_poll, dnp3_command, benign };
enum class PacketFate { delivered_real, delivered_pot, dropped, in_transit };

inline std::string to_string(PacketKind k) {
  switch (k) {
    case PacketKind::recon_probe: return "recon_probe";
    case PacketKind::dnp3_poll: return "dnp3_poll";
    case PacketKind::dnp3_command: return "dnp3_command";
    case PacketKind::benign: return "benign";
  }
  return "?";
}

inline std::string to_string(PacketFate f) {
  switch (f) {
    case PacketFate::delivered_real: return "delivered_real";
    case PacketFate::delivered_pot: return "delivered_pot";
    case PacketFate::dropped: return "dropped";
    case PacketFate::in_transit: return "in_transit";
  }
  return "?";
}

struct PacketRecord {
  int src = 0;
  int dst = 0;  // addressed destination; actual delivery follows the fabric
  PacketKind kind = PacketKind::benign;
  PacketFate fate = PacketFate::in_transit;
  int hop_count = 0;
  int final_node = -1;         // node the packet ended at, -1 if dropped mid-fabric
  bool loop_flag = false;      // dropped because the forwarding walk exceeded the hop cap
  std::vector<int> router_path;  // routers traversed, in order
};

struct RoutingState {
  std::vector<int> forwarding;                 // router -> interface index
  std::vector<double> drop_prob;               // per router, in [0,1]
  std::vector<std::vector<double>> utilization;  // router x interface, in [0,1]
  std::vector<std::vector<int>> traffic_counts;  // packets out of (router, interface) last step
  int traffic_total = 0;                         // packets injected last step
};

inline Topology build_topology(const TopologyConfig& config) {
  if (config.n_routers < 2)
    throw ConfigError("build_topology: n_routers below minimum (need >= 2)");
  if (config.n_interfaces < 2)
    throw ConfigError("build_topology: rerouting impossible with fewer than 2 interfaces");
  if (config.n_real_rtus < 1 || config.n_pot_rtus < 1)
    throw ConfigError("build_topology: need at least one real and one honeypot RTU");

  const int n_endpoints = 2 + config.n_real_rtus + config.n_pot_rtus;  // master + attacker + RTUs
  const int slots = config.n_routers * (config.n_interfaces - 1);
  if (slots < n_endpoints)
    throw ConfigError("build_topology: not enough router interfaces for the endpoints (topology would be disconnected)");

  Topology t;
  t.n_routers = config.n_routers;
  t.n_interfaces = config.n_interfaces;

  for (int r = 0; r < config.n_routers; ++r) t.nodes.push_back({r, NodeKind::router});
  const int master_id = config.n_routers;
  t.nodes.push_back({master_id, NodeKind::master});
  std::vector<int> real_ids, pot_ids;
  for (int i = 0; i < config.n_real_rtus; ++i) {
    real_ids.push_back(static_cast<int>(t.nodes.size()));
    t.nodes.push_back({real_ids.back(), NodeKind::rtu_real});
  }
  for (int i = 0; i < config.n_pot_rtus; ++i) {
    pot_ids.push_back(static_cast<int>(t.nodes.size()));
    t.nodes.push_back({pot_ids.back(), NodeKind::rtu_pot});
  }
  const int attacker_id = static_cast<int>(t.nodes.size());
  t.nodes.push_back({attacker_id, NodeKind::attacker});

  const int n_nodes = static_cast<int>(t.nodes.size());
  t.neighbor.assign(static_cast<size_t>(config.n_routers),
                    std::vector<int>(static_cast<size_t>(config.n_interfaces), -1));
  t.access_router.assign(static_cast<size_t>(n_nodes), -1);

  // interface 0: directed ring
  for (int r = 0; r < config.n_routers; ++r)
    t.neighbor[static_cast<size_t>(r)][0] = (r + 1) % config.n_routers;

  // endpoints hang off routers round-robin on interfaces 1..n_interfaces-1
  std::vector<int> endpoint_order;
  endpoint_order.push_back(master_id);
  for (int id : real_ids) endpoint_order.push_back(id);
  for (int id : pot_ids) endpoint_order.push_back(id);
  endpoint_order.push_back(attacker_id);

  std::vector<int> next_slot(static_cast<size_t>(config.n_routers), 1);
  for (size_t j = 0; j < endpoint_order.size(); ++j) {
    int r = static_cast<int>(j) % config.n_routers;
    // round-robin with overflow scan; capacity was checked above
    for (int probe = 0; probe < config.n_routers; ++probe) {
      int cand = (r + probe) % config.n_routers;
      if (next_slot[static_cast<size_t>(cand)] < config.n_interfaces) {
        r = cand;
        break;
      }
    }
    const int iface = next_slot[static_cast<size_t>(r)]++;
    t.neighbor[static_cast<size_t>(r)][static_cast<size_t>(iface)] = endpoint_order[j];
    t.access_router[static_cast<size_t>(endpoint_order[j])] = r;
  }

  // unused interfaces alias the ring next-hop
  for (int r = 0; r < config.n_routers; ++r)
    for (int i = 1; i < config.n_interfaces; ++i)
      if (t.neighbor[static_cast<size_t>(r)][static_cast<size_t>(i)] < 0)
        t.neighbor[static_cast<size_t>(r)][static_cast<size_t>(i)] = (r + 1) % config.n_routers;

  for (int r = 0; r < config.n_routers; ++r)
    for (int i = 0; i < config.n_interfaces; ++i)
      t.links.push_back({r, t.neighbor[static_cast<size_t>(r)][static_cast<size_t>(i)], i});
  for (int id : endpoint_order) t.links.push_back({id, t.access_router[static_cast<size_t>(id)], 0});

  return t;
}

// Undirected connectivity over the link list.
inline bool topology_connected(const Topology& t) {
  const size_t n = t.nodes.size();
  std::vector<std::vector<int>> adj(n);
  for (const auto& l : t.links) {
    adj[static_cast<size_t>(l.from)].push_back(l.to);
    adj[static_cast<size_t>(l.to)].push_back(l.from);
  }
  std::vector<bool> seen(n, false);
  std::deque<int> q{0};
  seen[0] = true;
  size_t visited = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    for (int v : adj[static_cast<size_t>(u)])
      if (!seen[static_cast<size_t>(v)]) {
        seen[static_cast<size_t>(v)] = true;
        ++visited;
        q.push_back(v);
      }
  }
  return visited == n;
}

inline RoutingState make_routing_state(const Topology& t) {
  RoutingState rs;
  rs.forwarding.assign(static_cast<size_t>(t.n_routers), 0);
  rs.drop_prob.assign(static_cast<size_t>(t.n_routers), 0.0);
  rs.utilization.assign(static_cast<size_t>(t.n_routers),
                        std::vector<double>(static_cast<size_t>(t.n_interfaces), 0.0));
  rs.traffic_counts.assign(static_cast<size_t>(t.n_routers),
                           std::vector<int>(static_cast<size_t>(t.n_interfaces), 0));
  return rs;
}

// Forwarding assignment that carries every router's traffic toward `target`
// along the fewest router hops. Distances run toward the target (reverse BFS;
// the ring is directed, so source-rooted distances would mislead).
inline std::vector<int> shortest_path_forwarding(const Topology& t, int target) {
  const int target_router =
      t.is_router(target) ? target : t.access_router[static_cast<size_t>(target)];
  const int nr = t.n_routers;

  std::vector<std::vector<int>> rev(static_cast<size_t>(nr));
  for (int u = 0; u < nr; ++u)
    for (int i = 0; i < t.n_interfaces; ++i) {
      int v = t.neighbor[static_cast<size_t>(u)][static_cast<size_t>(i)];
      if (v < nr) rev[static_cast<size_t>(v)].push_back(u);
    }
  std::vector<int> dist(static_cast<size_t>(nr), -1);
  std::deque<int> q{target_router};
  dist[static_cast<size_t>(target_router)] = 0;
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    for (int w : rev[static_cast<size_t>(u)])
      if (dist[static_cast<size_t>(w)] < 0) {
        dist[static_cast<size_t>(w)] = dist[static_cast<size_t>(u)] + 1;
        q.push_back(w);
      }
  }

  std::vector<int> fwd(static_cast<size_t>(nr), 0);
  for (int r = 0; r < nr; ++r) {
    if (!t.is_router(target) && r == target_router) {
      for (int i = 0; i < t.n_interfaces; ++i)
        if (t.neighbor[static_cast<size_t>(r)][static_cast<size_t>(i)] == target)
          fwd[static_cast<size_t>(r)] = i;
      continue;
    }
    int best_iface = 0, best = 1 << 20;
    for (int i = 0; i < t.n_interfaces; ++i) {
      int v = t.neighbor[static_cast<size_t>(r)][static_cast<size_t>(i)];
      if (v >= nr) continue;
      if (dist[static_cast<size_t>(v)] >= 0 && dist[static_cast<size_t>(v)] < best) {
        best = dist[static_cast<size_t>(v)];
        best_iface = i;
      }
    }
    fwd[static_cast<size_t>(r)] = best_iface;
  }
  return fwd;
}

// Resolve every injected packet hop-by-hop. Pure in (topology, routing,
// packets, seed); fills fate, hop_count, final_node and the router path.
// Also refreshes routing.traffic_counts/traffic_total for utilization.
inline std::vector<PacketRecord> route_step(const Topology& t, RoutingState& routing,
                                            std::vector<PacketRecord> injected,
                                            std::uint64_t rng_seed) {
  const int hop_cap = static_cast<int>(t.nodes.size());
  for (auto& row : routing.traffic_counts) std::fill(row.begin(), row.end(), 0);
  routing.traffic_total = static_cast<int>(injected.size());

  for (size_t p = 0; p < injected.size(); ++p) {
    auto& pkt = injected[p];
    if (pkt.src < 0 || pkt.src >= static_cast<int>(t.nodes.size()) || pkt.dst < 0 ||
        pkt.dst >= static_cast<int>(t.nodes.size()))
      throw ConfigError("route_step: packet references an unknown node");
    Rng rng(mix_seed(rng_seed, static_cast<std::uint64_t>(p)));
    pkt.hop_count = 0;
    pkt.loop_flag = false;
    pkt.router_path.clear();

    int at = pkt.src;
    if (!t.is_router(at)) {
      at = t.access_router[static_cast<size_t>(at)];
      ++pkt.hop_count;
    }
    while (true) {
      if (pkt.hop_count > hop_cap) {
        pkt.fate = PacketFate::dropped;
        pkt.loop_flag = true;
        pkt.final_node = -1;
        break;
      }
      pkt.router_path.push_back(at);
      if (rng.bernoulli(routing.drop_prob[static_cast<size_t>(at)])) {
        pkt.fate = PacketFate::dropped;
        pkt.final_node = -1;
        break;
      }
      const int iface = routing.forwarding[static_cast<size_t>(at)];
      if (iface < 0 || iface >= t.n_interfaces)
        throw ConfigError("route_step: forwarding entry out of range");
      ++routing.traffic_counts[static_cast<size_t>(at)][static_cast<size_t>(iface)];
      const int next = t.neighbor[static_cast<size_t>(at)][static_cast<size_t>(iface)];
      ++pkt.hop_count;
      if (!t.is_router(next)) {
        pkt.final_node = next;
        pkt.fate = t.kind(next) == NodeKind::rtu_pot ? PacketFate::delivered_pot
                                                     : PacketFate::delivered_real;
        break;
      }
      at = next;
    }
  }
  return injected;
}

// Recompute utilization from the last step's traffic counts.
inline void recompute_utilization(RoutingState& routing) {
  const double total = routing.traffic_total > 0 ? static_cast<double>(routing.traffic_total) : 1.0;
  for (size_t r = 0; r < routing.traffic_counts.size(); ++r)
    for (size_t i = 0; i < routing.traffic_counts[r].size(); ++i)
      routing.utilization[r][i] =
          std::min(1.0, static_cast<double>(routing.traffic_counts[r][i]) / total);
}

// scenario=none clears drops; congestion draws per-router drop probabilities
// from the configured range. Utilization is refreshed from the traffic counts
// already in `routing`.
inline RoutingState congestion_update(RoutingState routing, Scenario scenario,
                                      const CongestionConfig& cfg, std::uint64_t rng_seed) {
  if (scenario == Scenario::none) {
    std::fill(routing.drop_prob.begin(), routing.drop_prob.end(), 0.0);
  } else {
    Rng rng(mix_seed(rng_seed, 0x60c0ULL));
    for (auto& p : routing.drop_prob) p = rng.uniform(cfg.drop_min, cfg.drop_max);
  }
  recompute_utilization(routing);
  return routing;
}

inline json topology_to_json(const Topology& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes) nodes.push_back({{"id", n.id}, {"kind", to_string(n.kind)}});
  json links = json::array();
  for (const auto& l : t.links)
    links.push_back({{"from", l.from}, {"to", l.to}, {"interface", l.interface_index}});
  return json{{"n_routers", t.n_routers},
              {"n_interfaces", t.n_interfaces},
              {"nodes", nodes},
              {"links", links}};
}

}  // namespace decoynet::net
