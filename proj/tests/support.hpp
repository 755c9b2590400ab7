#pragma once

// Shared fixtures and brute-force oracles for the test suites. The oracles
// work directly on the link list and never call into the graph's own path
// machinery.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gral/gral.hpp"

namespace gral::testing {

struct RandomTree {
  std::vector<JunctionSpec> junctions;
  std::vector<LinkSpec> links;
  std::string root;
  EnvironmentGraph graph;
};

/// Random tree on n vertices "v0".."v{n-1}": each vertex i > 0 hangs off a
/// uniformly chosen earlier vertex, link lengths uniform in [1, 100), root
/// chosen uniformly.
inline RandomTree random_tree(std::mt19937_64& rng, std::size_t n) {
  RandomTree t;
  std::uniform_real_distribution<double> len(1.0, 100.0);
  for (std::size_t i = 0; i < n; ++i) t.junctions.push_back({"v" + std::to_string(i), std::nullopt});
  for (std::size_t i = 1; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    t.links.push_back({"v" + std::to_string(pick(rng)), "v" + std::to_string(i), len(rng)});
  }
  t.root = "v" + std::to_string(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  t.graph = EnvironmentGraph::build(t.junctions, t.links, t.root);
  return t;
}

/// Every simple path between two named junctions, by exhaustive DFS over the
/// raw link list. Each path carries its total length.
struct NamedPath {
  std::vector<std::string> vertices;
  double length = 0.0;
};

inline std::vector<NamedPath> all_simple_paths(const std::vector<LinkSpec>& links, const std::string& from,
                                               const std::string& to) {
  std::map<std::string, std::vector<std::pair<std::string, double>>> adj;
  for (const auto& l : links) {
    adj[l.u].push_back({l.v, l.length});
    adj[l.v].push_back({l.u, l.length});
  }
  std::vector<NamedPath> out;
  NamedPath cur{{from}, 0.0};
  auto dfs = [&](auto&& self, const std::string& at) -> void {
    if (at == to) {
      out.push_back(cur);
      return;
    }
    for (const auto& [next, w] : adj[at]) {
      if (std::find(cur.vertices.begin(), cur.vertices.end(), next) != cur.vertices.end()) continue;
      cur.vertices.push_back(next);
      cur.length += w;
      self(self, next);
      cur.length -= w;
      cur.vertices.pop_back();
    }
  };
  dfs(dfs, from);
  return out;
}

/// Confluence by intersection: enumerate both vertex paths to the
/// destination, intersect them, and return the shared vertex farthest from
/// the destination.
inline std::string confluence_oracle(const std::vector<LinkSpec>& links, const std::string& a, const std::string& b,
                                     const std::string& dest) {
  const auto pa = all_simple_paths(links, a, dest).at(0).vertices;
  const auto pb = all_simple_paths(links, b, dest).at(0).vertices;
  std::string best;
  double best_dist = -1.0;
  for (const auto& v : pa) {
    if (std::find(pb.begin(), pb.end(), v) == pb.end()) continue;
    const double d = all_simple_paths(links, v, dest).at(0).length;
    if (d > best_dist) best_dist = d, best = v;
  }
  return best;
}

inline Package make_package(NodeId node, std::uint64_t seq, double t,
                            std::vector<GatewayObservation> obs = {}, std::vector<NodeContact> contacts = {}) {
  Package p;
  p.node = node;
  p.seq = seq;
  p.timestamp = t;
  p.observations = std::move(obs);
  p.contacts = std::move(contacts);
  sort_observations(p);
  return p;
}

/// Packages seq 0.. at t = 0.. that hear `gateway` with the given strengths
/// (a negative strength means "hears nothing").
inline std::vector<Package> strength_run(NodeId node, const std::string& gateway, const std::vector<double>& strengths,
                                         std::uint64_t seq0 = 0) {
  std::vector<Package> out;
  for (std::size_t i = 0; i < strengths.size(); ++i) {
    std::vector<GatewayObservation> obs;
    if (strengths[i] >= 0.0) obs.push_back({gateway, strengths[i]});
    out.push_back(make_package(node, seq0 + i, static_cast<double>(seq0 + i), std::move(obs)));
  }
  return out;
}

/// Chain a(gA) -- 50 -- b(gB) -- 50 -- c(gC), rooted at c, radius sqrt(10).
inline EnvironmentGraph chain_graph(double radius = std::sqrt(10.0)) {
  return EnvironmentGraph::build({{"a", GatewaySpec{"gA", radius}}, {"b", GatewaySpec{"gB", radius}},
                                  {"c", GatewaySpec{"gC", radius}}},
                                 {{"a", "b", 50.0}, {"b", "c", 50.0}}, "c");
}

/// Y-graph a -- 50 -- c, b -- 50 -- c, c -- 50 -- f, rooted at f; gateways at
/// a, b and f.
inline EnvironmentGraph y_graph(double radius = std::sqrt(10.0)) {
  return EnvironmentGraph::build({{"a", GatewaySpec{"gA", radius}}, {"b", GatewaySpec{"gB", radius}},
                                  {"c", std::nullopt}, {"f", GatewaySpec{"gF", radius}}},
                                 {{"a", "c", 50.0}, {"b", "c", 50.0}, {"c", "f", 50.0}}, "f");
}

/// Two nodes on the scenario-1 chain. Node 1 ("steady") drifts at exactly
/// one unit per tick from tick 0. Node 2 ("turbulent") starts at tick 10,
/// moves 2 units per tick until it meets node 1 at tick 20, keeps pace with
/// it for 10 ticks, then moves 2 units per tick again and reaches the middle
/// gateway first.
inline ScenarioSpec steady_turbulent_fixture() {
  auto spec = make_scenario(1);
  spec.name = "steady-turbulent";
  spec.insertions.clear();
  const auto a = junction_position(spec.graph.vertex("a"));
  NodeInsertion steady{1, a, 0, 0.0, {}};
  NodeInsertion turbulent{2, a, 10, 1.0, {}};
  turbulent.noise_script.assign(10, 1);
  turbulent.noise_script.insert(turbulent.noise_script.end(), 10, 0);
  spec.insertions = {steady, turbulent};
  return spec;
}

/// Per-node RMSE of localized packages against ground truth.
inline std::map<NodeId, double> node_rmse(const EnvironmentGraph& g, const Instance& inst,
                                          const LocalizationResult& result) {
  std::map<std::pair<NodeId, std::uint64_t>, GraphPosition> truth;
  for (const auto& r : inst.ground_truth) truth[{r.node, r.seq}] = r.position;
  std::map<NodeId, double> out;
  for (const auto& [node, ms] : result) {
    double sum = 0.0;
    for (const auto& m : ms) {
      const double e = geodesic_distance(g, truth.at({m.node, m.seq}), m.position);
      sum += e * e;
    }
    out[node] = ms.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(ms.size()));
  }
  return out;
}

}  // namespace gral::testing
