#pragma once

// Environment graph: a weighted tree of junctions (vertices) and links
// (edges). Water flows from the leaves toward the root, so every non-root
// junction has exactly one downstream neighbour (its parent).

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gral/error.hpp"

namespace gral {

using Vertex = std::size_t;

struct GatewaySpec {
  std::string id;
  double radius = 0.0;
};

struct JunctionSpec {
  std::string id;
  std::optional<GatewaySpec> gateway;
};

struct LinkSpec {
  std::string u;
  std::string v;
  double length = 0.0;
};

struct Gateway {
  std::string id;
  Vertex junction = 0;
  double radius = 0.0;
};

class EnvironmentGraph {
 public:
  /// Validates and builds the tree. Throws InputError on duplicate ids,
  /// nonpositive lengths or radii, self loops, unknown endpoints, a missing
  /// root, cycles, or a disconnected junction set.
  static EnvironmentGraph build(std::vector<JunctionSpec> junctions, std::vector<LinkSpec> links,
                                std::string root);

  std::size_t size() const { return names_.size(); }
  Vertex root() const { return root_; }
  const std::string& name(Vertex v) const { return names_.at(v); }

  std::optional<Vertex> find_vertex(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  Vertex vertex(std::string_view id) const {
    if (auto v = find_vertex(id)) return *v;
    throw InputError("unknown junction '" + std::string(id) + "'");
  }

  /// Downstream neighbour; empty for the root.
  std::optional<Vertex> parent(Vertex v) const {
    check(v);
    if (v == root_) return std::nullopt;
    return parent_[v];
  }
  /// Length of the link from v to its parent (0 for the root).
  double parent_link_length(Vertex v) const { return check(v), parent_len_[v]; }
  const std::vector<Vertex>& children(Vertex v) const { return check(v), children_[v]; }
  double distance_to_root(Vertex v) const { return check(v), root_dist_[v]; }
  std::size_t depth(Vertex v) const { return check(v), depth_[v]; }

  /// Length of the link joining u and v, if they are adjacent.
  std::optional<double> link_length(Vertex u, Vertex v) const {
    check(u), check(v);
    if (u != root_ && parent_[u] == v) return parent_len_[u];
    if (v != root_ && parent_[v] == u) return parent_len_[v];
    return std::nullopt;
  }

  /// Meeting vertex of u and v when both walk downstream.
  Vertex lowest_common_ancestor(Vertex u, Vertex v) const {
    check(u), check(v);
    while (depth_[u] > depth_[v]) u = parent_[u];
    while (depth_[v] > depth_[u]) v = parent_[v];
    while (u != v) {
      u = parent_[u];
      v = parent_[v];
    }
    return u;
  }

  /// The unique simple path from u to v, both endpoints included.
  std::vector<Vertex> shortest_path(Vertex u, Vertex v) const {
    const Vertex meet = lowest_common_ancestor(u, v);
    std::vector<Vertex> head;
    for (Vertex x = u; x != meet; x = parent_[x]) head.push_back(x);
    head.push_back(meet);
    std::vector<Vertex> tail;
    for (Vertex x = v; x != meet; x = parent_[x]) tail.push_back(x);
    head.insert(head.end(), tail.rbegin(), tail.rend());
    return head;
  }

  double path_length(Vertex u, Vertex v) const {
    const Vertex meet = lowest_common_ancestor(u, v);
    return root_dist_[u] + root_dist_[v] - 2.0 * root_dist_[meet];
  }

  /// True when walking from `up` toward the root passes through `down`.
  bool is_downstream_of(Vertex down, Vertex up) const {
    return lowest_common_ancestor(up, down) == down;
  }

  const std::vector<Gateway>& gateways() const { return gateways_; }

  const Gateway* find_gateway(std::string_view id) const {
    auto it = gateway_index_.find(std::string(id));
    return it == gateway_index_.end() ? nullptr : &gateways_[it->second];
  }

  const Gateway& gateway(std::string_view id) const {
    if (const auto* g = find_gateway(id)) return *g;
    throw InputError("unknown gateway '" + std::string(id) + "'");
  }

  const Gateway* gateway_at(Vertex v) const {
    check(v);
    return gateway_at_[v] ? &gateways_[*gateway_at_[v]] : nullptr;
  }

  /// Specs that rebuild this graph; used for serialization.
  std::vector<JunctionSpec> junction_specs() const {
    std::vector<JunctionSpec> out;
    out.reserve(size());
    for (Vertex v = 0; v < size(); ++v) {
      JunctionSpec j{names_[v], std::nullopt};
      if (const auto* g = gateway_at(v)) j.gateway = GatewaySpec{g->id, g->radius};
      out.push_back(std::move(j));
    }
    return out;
  }
  const std::vector<LinkSpec>& link_specs() const { return links_; }

  /// Copy of the graph with one gateway decommissioned.
  EnvironmentGraph without_gateway(std::string_view id) const {
    if (!find_gateway(id)) throw InputError("unknown gateway '" + std::string(id) + "'");
    auto js = junction_specs();
    for (auto& j : js)
      if (j.gateway && j.gateway->id == id) j.gateway.reset();
    return build(std::move(js), links_, names_[root_]);
  }

 private:
  void check(Vertex v) const {
    if (v >= names_.size()) throw InputError("vertex index out of range");
  }

  std::vector<std::string> names_;
  std::unordered_map<std::string, Vertex> index_;
  std::vector<LinkSpec> links_;
  Vertex root_ = 0;
  std::vector<Vertex> parent_;
  std::vector<double> parent_len_;
  std::vector<std::vector<Vertex>> children_;
  std::vector<double> root_dist_;
  std::vector<std::size_t> depth_;
  std::vector<Gateway> gateways_;
  std::unordered_map<std::string, std::size_t> gateway_index_;
  std::vector<std::optional<std::size_t>> gateway_at_;
};

inline EnvironmentGraph EnvironmentGraph::build(std::vector<JunctionSpec> junctions,
                                                std::vector<LinkSpec> links, std::string root) {
  if (junctions.empty()) throw InputError("graph has no junctions");
  EnvironmentGraph g;
  const std::size_t n = junctions.size();
  g.names_.reserve(n);
  g.gateway_at_.assign(n, std::nullopt);
  for (auto& j : junctions) {
    if (j.id.empty()) throw InputError("empty junction id");
    if (!g.index_.emplace(j.id, g.names_.size()).second)
      throw InputError("duplicate junction id '" + j.id + "'");
    if (j.gateway) {
      auto& gw = *j.gateway;
      if (gw.id.empty()) throw InputError("empty gateway id at junction '" + j.id + "'");
      if (!(gw.radius > 0.0)) throw InputError("gateway '" + gw.id + "' has nonpositive radius");
      if (!g.gateway_index_.emplace(gw.id, g.gateways_.size()).second)
        throw InputError("duplicate gateway id '" + gw.id + "'");
      g.gateway_at_[g.names_.size()] = g.gateways_.size();
      g.gateways_.push_back(Gateway{gw.id, g.names_.size(), gw.radius});
    }
    g.names_.push_back(j.id);
  }
  auto root_it = g.index_.find(root);
  if (root_it == g.index_.end()) throw InputError("root '" + root + "' missing");
  g.root_ = root_it->second;

  // Union-find flags the first link that closes a cycle.
  std::vector<std::size_t> uf(n);
  std::iota(uf.begin(), uf.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  std::vector<std::vector<std::pair<Vertex, double>>> adj(n);
  for (const auto& l : links) {
    auto iu = g.index_.find(l.u);
    auto iv = g.index_.find(l.v);
    if (iu == g.index_.end() || iv == g.index_.end())
      throw InputError("link " + l.u + "-" + l.v + " references an unknown junction");
    if (iu->second == iv->second) throw InputError("self loop at '" + l.u + "'");
    if (!(l.length > 0.0)) throw InputError("link " + l.u + "-" + l.v + " has nonpositive length");
    const auto ru = find(iu->second), rv = find(iv->second);
    if (ru == rv) throw InputError("cycle detected at link " + l.u + "-" + l.v);
    uf[ru] = rv;
    adj[iu->second].emplace_back(iv->second, l.length);
    adj[iv->second].emplace_back(iu->second, l.length);
  }
  if (links.size() + 1 != n) throw InputError("graph is disconnected");

  g.parent_.assign(n, g.root_);
  g.parent_len_.assign(n, 0.0);
  g.children_.assign(n, {});
  g.root_dist_.assign(n, 0.0);
  g.depth_.assign(n, 0);
  std::vector<bool> seen(n, false);
  std::queue<Vertex> bfs;
  bfs.push(g.root_);
  seen[g.root_] = true;
  while (!bfs.empty()) {
    const Vertex x = bfs.front();
    bfs.pop();
    // Sorted so that children order is independent of link order.
    std::sort(adj[x].begin(), adj[x].end());
    for (auto [y, len] : adj[x]) {
      if (seen[y]) continue;
      seen[y] = true;
      g.parent_[y] = x;
      g.parent_len_[y] = len;
      g.root_dist_[y] = g.root_dist_[x] + len;
      g.depth_[y] = g.depth_[x] + 1;
      g.children_[x].push_back(y);
      bfs.push(y);
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw InvariantError("tree with |V|-1 acyclic links is not connected");
  g.links_ = std::move(links);
  return g;
}

}  // namespace gral
