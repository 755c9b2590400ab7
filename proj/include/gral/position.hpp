#pragma once

// Points on the network and arclength arithmetic along tree routes.
//
// Canonical form: a point at a junction v is (v, v, 0, 0). A point strictly
// inside a link is (child, parent, offset, link length) with the offset
// measured from the upstream end, 0 < offset < span.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "gral/graph.hpp"

namespace gral {

inline constexpr double kPositionTolerance = 1e-9;

struct GraphPosition {
  Vertex from = 0;
  Vertex to = 0;
  double offset = 0.0;
  double span = 0.0;

  bool at_junction() const { return from == to; }
  friend bool operator==(const GraphPosition&, const GraphPosition&) = default;
};

inline GraphPosition junction_position(Vertex v) { return {v, v, 0.0, 0.0}; }

/// Point `offset` along the link u-v measured from u, in canonical form.
/// Offsets outside [0, length] are clamped to the link.
inline GraphPosition position_on_link(const EnvironmentGraph& g, Vertex u, Vertex v, double offset) {
  const auto len = g.link_length(u, v);
  if (!len) throw InputError("junctions '" + g.name(u) + "' and '" + g.name(v) + "' are not adjacent");
  if (offset <= 0.0) return junction_position(u);
  if (offset >= *len) return junction_position(v);
  if (g.parent(u) == v) return {u, v, offset, *len};
  return {v, u, *len - offset, *len};
}

/// Checks that p is a canonical position on g.
inline bool is_valid(const EnvironmentGraph& g, const GraphPosition& p) {
  if (p.from >= g.size() || p.to >= g.size()) return false;
  if (p.at_junction()) return p.offset == 0.0 && p.span == 0.0;
  return g.parent(p.from) == p.to && p.span == g.parent_link_length(p.from) && p.offset > 0.0 &&
         p.offset < p.span;
}

/// Canonical position `offset` length units along the junction path.
inline GraphPosition point_at(const EnvironmentGraph& g, std::span<const Vertex> path, double offset) {
  if (path.empty()) throw InputError("empty path");
  if (!(offset >= 0.0)) throw InputError("offset out of range");
  double walked = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const auto len = g.link_length(path[i], path[i + 1]);
    if (!len) throw InputError("path is not contiguous");
    if (offset < walked + *len) return position_on_link(g, path[i], path[i + 1], offset - walked);
    walked += *len;
  }
  // Tolerate rounding at the far end.
  if (offset > walked + kPositionTolerance) throw InputError("offset out of range");
  return junction_position(path.back());
}

/// Path-relative position (from, to, offset) converted to canonical form.
inline GraphPosition make_position(const EnvironmentGraph& g, Vertex from, Vertex to, double offset) {
  const auto path = g.shortest_path(from, to);
  return point_at(g, path, offset);
}

namespace detail {

struct EndpointDistance {
  Vertex vertex;
  double distance;
};

inline std::vector<EndpointDistance> endpoints(const GraphPosition& p) {
  if (p.at_junction()) return {{p.from, 0.0}};
  return {{p.from, p.offset}, {p.to, p.span - p.offset}};
}

inline bool same_link(const GraphPosition& a, const GraphPosition& b) {
  return !a.at_junction() && !b.at_junction() && a.from == b.from && a.to == b.to;
}

}  // namespace detail

/// Along-network distance between two positions.
inline double geodesic_distance(const EnvironmentGraph& g, const GraphPosition& a, const GraphPosition& b) {
  if (!is_valid(g, a) || !is_valid(g, b)) throw InputError("position does not belong to this graph");
  if (detail::same_link(a, b)) return std::abs(a.offset - b.offset);
  double best = INFINITY;
  for (auto [x, dx] : detail::endpoints(a))
    for (auto [y, dy] : detail::endpoints(b)) best = std::min(best, dx + g.path_length(x, y) + dy);
  return best;
}

inline bool same_position(const EnvironmentGraph& g, const GraphPosition& a, const GraphPosition& b) {
  return geodesic_distance(g, a, b) <= kPositionTolerance;
}

/// The unique route between two positions, as waypoints where consecutive
/// entries share a link.
class Route {
 public:
  Route(const EnvironmentGraph& g, const GraphPosition& a, const GraphPosition& b) : graph_(&g) {
    if (!is_valid(g, a) || !is_valid(g, b)) throw InputError("position does not belong to this graph");
    waypoints_.push_back(a);
    if (!detail::same_link(a, b)) {
      double best = INFINITY;
      Vertex bx = 0, by = 0;
      for (auto [x, dx] : detail::endpoints(a))
        for (auto [y, dy] : detail::endpoints(b)) {
          const double d = dx + g.path_length(x, y) + dy;
          if (d < best) best = d, bx = x, by = y;
        }
      for (Vertex v : g.shortest_path(bx, by)) push(junction_position(v));
    }
    push(b);
    cumulative_.push_back(0.0);
    for (std::size_t i = 0; i + 1 < waypoints_.size(); ++i)
      cumulative_.push_back(cumulative_.back() + segment_length(i));
  }

  double length() const { return cumulative_.back(); }
  const GraphPosition& start() const { return waypoints_.front(); }
  const GraphPosition& end() const { return waypoints_.back(); }
  const std::vector<GraphPosition>& waypoints() const { return waypoints_; }

  /// Position `s` length units from the start; clamped to [0, length].
  /// The endpoints are returned exactly.
  GraphPosition at(double s) const {
    if (!(s > 0.0)) return start();
    if (s >= length()) return end();
    std::size_t i = 0;
    while (i + 2 < cumulative_.size() && s >= cumulative_[i + 1]) ++i;
    const auto [child, parent] = segment_link(i);
    const double from_off = offset_from_child(waypoints_[i], child, parent);
    const double to_off = offset_from_child(waypoints_[i + 1], child, parent);
    const double d = s - cumulative_[i];
    const double off = to_off >= from_off ? from_off + d : from_off - d;
    return position_on_link(*graph_, child, parent, std::clamp(off, std::min(from_off, to_off),
                                                                std::max(from_off, to_off)));
  }

 private:
  void push(const GraphPosition& p) {
    if (!(waypoints_.back() == p)) waypoints_.push_back(p);
  }

  // Link (child, parent) carrying segment i.
  std::pair<Vertex, Vertex> segment_link(std::size_t i) const {
    const auto& a = waypoints_[i];
    const auto& b = waypoints_[i + 1];
    if (!a.at_junction()) return {a.from, a.to};
    if (!b.at_junction()) return {b.from, b.to};
    if (graph_->parent(a.from) == b.from) return {a.from, b.from};
    return {b.from, a.from};
  }

  double offset_from_child(const GraphPosition& p, Vertex child, Vertex parent) const {
    if (!p.at_junction()) return p.offset;
    if (p.from == child) return 0.0;
    if (p.from == parent) return graph_->parent_link_length(child);
    throw InvariantError("route waypoint is off its segment link");
  }

  double segment_length(std::size_t i) const {
    const auto [child, parent] = segment_link(i);
    return std::abs(offset_from_child(waypoints_[i + 1], child, parent) -
                    offset_from_child(waypoints_[i], child, parent));
  }

  const EnvironmentGraph* graph_;
  std::vector<GraphPosition> waypoints_;
  std::vector<double> cumulative_;
};

/// True when p lies on the route between a and b.
inline bool lies_between(const EnvironmentGraph& g, const GraphPosition& a, const GraphPosition& b,
                         const GraphPosition& p) {
  const double direct = geodesic_distance(g, a, b);
  return geodesic_distance(g, a, p) + geodesic_distance(g, p, b) <= direct + kPositionTolerance;
}

/// Remaining along-network distance from p to the root.
inline double distance_to_root(const EnvironmentGraph& g, const GraphPosition& p) {
  if (p.at_junction()) return g.distance_to_root(p.from);
  return g.distance_to_root(p.to) + (p.span - p.offset);
}

/// Earliest vertex shared by the paths from `a` and `b` to the common
/// destination `dest`: the first vertex on path(a, dest) that also lies on
/// path(b, dest).
inline Vertex confluence_vertex(const EnvironmentGraph& g, Vertex a, Vertex b, Vertex dest) {
  const auto path_a = g.shortest_path(a, dest);
  const auto path_b = g.shortest_path(b, dest);
  for (Vertex v : path_a)
    if (std::find(path_b.begin(), path_b.end(), v) != path_b.end()) return v;
  throw InvariantError("paths toward a common destination share no vertex");
}

}  // namespace gral
