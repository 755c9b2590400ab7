#pragma once

// Discrete-time drift simulation. Every tick each active node moves
// base_step toward the root plus one extra base_step with probability
// noise_p; nodes record a package every measurement interval and hand their
// buffer to the backend whenever a gateway hears them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gral/error.hpp"
#include "gral/graph.hpp"
#include "gral/localizer.hpp"
#include "gral/package.hpp"
#include "gral/position.hpp"
#include "gral/propagation.hpp"

namespace gral {

struct NodeInsertion {
  NodeId node = 0;
  GraphPosition start;
  std::uint64_t tick = 0;
  /// Per-node override of the scenario noise probability.
  std::optional<double> noise_p;
  /// Scripted noise draws (0 or 1) for the first ticks after insertion;
  /// random draws resume once it runs out.
  std::vector<int> noise_script;
};

struct ScenarioSpec {
  std::string name;
  EnvironmentGraph graph;
  std::vector<NodeInsertion> insertions;
  double base_step = 1.0;
  double noise_p = 2.0 / 3.0;
  /// Radius for gateways that do not declare their own.
  double gateway_radius = std::sqrt(10.0);
  double contact_radius = std::sqrt(10.0);
  std::uint64_t measurement_interval = 1;
  std::uint64_t max_ticks = 10000;

  void validate() const {
    if (!(base_step > 0.0)) throw InputError("base_step must be positive");
    if (!(noise_p >= 0.0 && noise_p <= 1.0)) throw InputError("noise_p must lie in [0, 1]");
    if (!(gateway_radius > 0.0)) throw InputError("gateway_radius must be positive");
    if (!(contact_radius > 0.0)) throw InputError("contact_radius must be positive");
    if (measurement_interval == 0) throw InputError("measurement_interval must be positive");
    if (insertions.empty()) throw InputError("scenario has no nodes");
    for (std::size_t i = 0; i < insertions.size(); ++i) {
      const auto& ins = insertions[i];
      if (!is_valid(graph, ins.start)) throw InputError("insertion of node " + std::to_string(ins.node) + " is off the graph");
      if (ins.noise_p && !(*ins.noise_p >= 0.0 && *ins.noise_p <= 1.0))
        throw InputError("node noise_p must lie in [0, 1]");
      for (int s : ins.noise_script)
        if (s != 0 && s != 1) throw InputError("noise_script entries must be 0 or 1");
      for (std::size_t j = 0; j < i; ++j)
        if (insertions[j].node == ins.node) throw InputError("duplicate node id " + std::to_string(ins.node));
    }
  }

  /// Mean distance from the insertion points to the root.
  double route_length() const {
    double total = 0.0;
    for (const auto& ins : insertions) total += distance_to_root(graph, ins.start);
    return total / static_cast<double>(insertions.size());
  }
};

struct GroundTruthRecord {
  NodeId node = 0;
  std::uint64_t seq = 0;
  std::uint64_t tick = 0;
  GraphPosition position;
};

struct SimNode {
  NodeId id = 0;
  GraphPosition position;
  double noise_p = 0.0;
  std::vector<int> noise_script;
  std::uint64_t insertion_tick = 0;
  std::uint64_t ticks_moved = 0;
  bool active = false;
  bool finished = false;
  std::uint64_t next_seq = 0;
  std::vector<Package> buffer;
};

struct WorldState {
  std::uint64_t tick = 0;
  std::vector<SimNode> nodes;  // ascending node id
  std::mt19937_64 motion_rng;
  std::mt19937_64 payload_rng;
};

namespace detail {

inline double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace detail

/// Moves p `distance` length units toward the root, continuing across
/// junctions; stops at the root.
inline GraphPosition advance_toward_root(const EnvironmentGraph& g, GraphPosition p, double distance) {
  while (distance > 0.0) {
    Vertex child;
    double offset;
    if (p.at_junction()) {
      if (p.from == g.root()) break;
      child = p.from;
      offset = 0.0;
    } else {
      child = p.from;
      offset = p.offset;
    }
    const Vertex parent = *g.parent(child);
    const double remaining = g.parent_link_length(child) - offset;
    if (distance < remaining) return position_on_link(g, child, parent, offset + distance);
    distance -= remaining;
    p = junction_position(parent);
  }
  return p;
}

inline WorldState make_world(const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  WorldState w;
  w.motion_rng.seed(seed);
  w.payload_rng.seed(seed ^ 0x9e3779b97f4a7c15ULL);
  for (const auto& ins : spec.insertions) {
    SimNode n;
    n.id = ins.node;
    n.position = ins.start;
    n.noise_p = ins.noise_p.value_or(spec.noise_p);
    n.noise_script = ins.noise_script;
    n.insertion_tick = ins.tick;
    w.nodes.push_back(std::move(n));
  }
  std::sort(w.nodes.begin(), w.nodes.end(), [](const SimNode& a, const SimNode& b) { return a.id < b.id; });
  return w;
}

/// Activates nodes whose insertion tick has come.
inline void activate_due(WorldState& w) {
  for (auto& n : w.nodes)
    if (!n.active && !n.finished && n.insertion_tick <= w.tick) n.active = true;
}

/// Advances all active nodes by one tick. A node already at the root leaves
/// the network instead of moving.
inline void step(WorldState& w, const ScenarioSpec& spec) {
  if (w.tick >= spec.max_ticks) throw InvariantError("step past max_ticks");
  for (auto& n : w.nodes) {
    if (!n.active) continue;
    if (n.position.at_junction() && n.position.from == spec.graph.root()) {
      n.active = false;
      n.finished = true;
      continue;
    }
    int noise;
    if (n.ticks_moved < n.noise_script.size())
      noise = n.noise_script[n.ticks_moved];
    else
      noise = detail::unit_draw(w.motion_rng) < n.noise_p ? 1 : 0;
    n.position = advance_toward_root(spec.graph, n.position, spec.base_step * (1.0 + noise));
    ++n.ticks_moved;
  }
  ++w.tick;
}

struct Observation {
  std::vector<GatewayObservation> gateways;
  std::vector<NodeContact> contacts;
};

/// What node `index` hears right now: gateways within their radius and
/// active peers within the contact radius.
inline Observation observe(const WorldState& w, const ScenarioSpec& spec, std::size_t index) {
  const auto& g = spec.graph;
  const auto& self = w.nodes.at(index);
  Observation o;
  for (const auto& gw : g.gateways()) {
    const double d = geodesic_distance(g, self.position, junction_position(gw.junction));
    if (auto s = LinearPropagation::strength(gw.radius, d)) o.gateways.push_back({gw.id, *s});
  }
  std::sort(o.gateways.begin(), o.gateways.end(), stronger);
  for (std::size_t j = 0; j < w.nodes.size(); ++j) {
    const auto& peer = w.nodes[j];
    if (j == index || !peer.active) continue;
    const double d = geodesic_distance(g, self.position, peer.position);
    if (auto s = LinearPropagation::strength(spec.contact_radius, d)) o.contacts.push_back({peer.id, *s});
  }
  return o;
}

/// Records one package per active node (on measurement ticks) and returns
/// the batches handed over to gateways this tick, ordered by node id.
inline std::vector<Batch> record_and_emit(WorldState& w, const ScenarioSpec& spec,
                                          std::vector<GroundTruthRecord>& truth) {
  std::vector<Batch> emitted;
  if (w.tick % spec.measurement_interval != 0) return emitted;
  std::vector<Observation> seen(w.nodes.size());
  for (std::size_t i = 0; i < w.nodes.size(); ++i)
    if (w.nodes[i].active) seen[i] = observe(w, spec, i);
  for (std::size_t i = 0; i < w.nodes.size(); ++i) {
    auto& n = w.nodes[i];
    if (!n.active) continue;
    Package p;
    p.node = n.id;
    p.seq = n.next_seq++;
    p.timestamp = static_cast<double>(w.tick);
    p.observations = std::move(seen[i].gateways);
    p.contacts = std::move(seen[i].contacts);
    const double reading = 10.0 + 5.0 * detail::unit_draw(w.payload_rng);
    p.payload = {{"temperature", std::round(reading * 1000.0) / 1000.0}};
    truth.push_back({n.id, p.seq, w.tick, n.position});
    const bool heard = p.sees_gateway();
    n.buffer.push_back(std::move(p));
    if (heard) emitted.push_back(std::exchange(n.buffer, {}));
  }
  return emitted;
}

struct Instance {
  std::uint64_t seed = 0;
  /// Transmitted batches in arrival order.
  std::vector<Batch> batches;
  std::vector<GroundTruthRecord> ground_truth;
  /// Some node had not reached the root when max_ticks ran out.
  bool truncated = false;
  /// Packages recorded but never handed to a gateway.
  std::size_t unsent = 0;

  std::vector<Package> packages() const {
    std::vector<Package> out;
    for (const auto& b : batches) out.insert(out.end(), b.begin(), b.end());
    return out;
  }
};

/// Runs one seeded instance until every node has left at the root or
/// max_ticks is reached. Deterministic in (spec, seed).
inline Instance run_instance(const ScenarioSpec& spec, std::uint64_t seed) {
  WorldState w = make_world(spec, seed);
  Instance out;
  out.seed = seed;
  while (true) {
    activate_due(w);
    const bool all_done = std::all_of(w.nodes.begin(), w.nodes.end(), [](const SimNode& n) { return n.finished; });
    if (all_done) break;
    for (auto& b : record_and_emit(w, spec, out.ground_truth)) out.batches.push_back(std::move(b));
    if (w.tick >= spec.max_ticks) break;
    step(w, spec);
  }
  for (const auto& n : w.nodes) {
    if (!n.finished) out.truncated = true;
    out.unsent += n.buffer.size();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Built-in scenarios

namespace detail {

inline JunctionSpec gated(std::string id, std::string gateway, double radius) {
  return {std::move(id), GatewaySpec{std::move(gateway), radius}};
}

inline JunctionSpec plain(std::string id) { return {std::move(id), std::nullopt}; }

}  // namespace detail

/// The four evaluation scenarios:
///  1. a 100-unit pipe with gateways at both ends and in the middle, 1 node;
///  2. the same pipe with 2 nodes deployed 5 ticks apart;
///  3. two 50-unit branches from gated sources joining at an ungated
///     junction, then 50 units to a gated sink, 2 nodes;
///  4. a larger tree with four merge points and 5 nodes.
/// Gateway and contact radius are sqrt(10).
inline ScenarioSpec make_scenario(int k) {
  using detail::gated;
  using detail::plain;
  const double r = std::sqrt(10.0);
  ScenarioSpec s;
  s.gateway_radius = r;
  s.contact_radius = r;
  auto at = [&](std::string_view id) { return junction_position(s.graph.vertex(id)); };
  switch (k) {
    case 1:
    case 2:
      s.name = "scenario" + std::to_string(k);
      s.graph = EnvironmentGraph::build({gated("a", "g1", r), gated("b", "g2", r), gated("c", "g3", r)},
                                        {{"a", "b", 50.0}, {"b", "c", 50.0}}, "c");
      s.insertions.push_back({1, at("a"), 0, std::nullopt, {}});
      if (k == 2) s.insertions.push_back({2, at("a"), 5, std::nullopt, {}});
      break;
    case 3:
      s.name = "scenario3";
      s.graph = EnvironmentGraph::build({gated("a", "g1", r), gated("b", "g2", r), plain("m"), gated("f", "g3", r)},
                                        {{"a", "m", 50.0}, {"b", "m", 50.0}, {"m", "f", 50.0}}, "f");
      s.insertions.push_back({1, at("a"), 0, std::nullopt, {}});
      s.insertions.push_back({2, at("b"), 2, std::nullopt, {}});
      break;
    case 4:
      s.name = "scenario4";
      s.graph = EnvironmentGraph::build(
          {gated("s1", "g1", r), gated("s2", "g2", r), gated("s3", "g3", r), gated("s4", "g4", r),
           gated("s5", "g5", r), plain("j1"), gated("h1", "g6", r), plain("j2"), gated("h2", "g7", r),
           gated("r", "g8", r)},
          {{"s1", "j1", 60.0},
           {"s2", "j1", 60.0},
           {"j1", "h1", 50.0},
           {"s3", "h1", 80.0},
           {"h1", "j2", 70.0},
           {"s4", "j2", 100.0},
           {"j2", "h2", 60.0},
           {"s5", "h2", 120.0},
           {"h2", "r", 50.0}},
          "r");
      s.insertions.push_back({1, at("s1"), 0, std::nullopt, {}});
      s.insertions.push_back({2, at("s2"), 4, std::nullopt, {}});
      s.insertions.push_back({3, at("s3"), 8, std::nullopt, {}});
      s.insertions.push_back({4, at("s4"), 2, std::nullopt, {}});
      s.insertions.push_back({5, at("s5"), 6, std::nullopt, {}});
      break;
    default:
      throw InputError("unknown scenario " + std::to_string(k) + " (expected 1..4)");
  }
  return s;
}

/// Scenario with one gateway out of service.
inline ScenarioSpec without_gateway(ScenarioSpec spec, std::string_view gateway) {
  spec.graph = spec.graph.without_gateway(gateway);
  return spec;
}

}  // namespace gral
