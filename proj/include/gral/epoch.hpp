#pragma once

// Epoch engine. A node's package stream is cut into epochs:
//   nu    - no gateway heard in any package
//   alpha - strongest signal strictly rising, same strongest gateway
//   omega - strongest signal non-increasing, same strongest gateway
// Each epoch is later given boundary positions so that its packages can be
// interpolated between them.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gral/error.hpp"
#include "gral/graph.hpp"
#include "gral/package.hpp"
#include "gral/position.hpp"
#include "gral/propagation.hpp"

namespace gral {

enum class EpochType { nu, alpha, omega };

inline std::string_view to_string(EpochType t) {
  switch (t) {
    case EpochType::nu: return "nu";
    case EpochType::alpha: return "alpha";
    case EpochType::omega: return "omega";
  }
  throw InvariantError("bad epoch type");
}

struct Epoch {
  EpochType type = EpochType::nu;
  std::vector<Package> packages;
  std::optional<GraphPosition> start_pos;
  std::optional<GraphPosition> final_pos;
  std::optional<std::string> anchor_gateway;
  /// Built by coalescing or same-gateway merging; the package list then
  /// spans several monotone runs and its type names the last one.
  bool coalesced = false;

  double first_time() const { return packages.front().timestamp; }
  double last_time() const { return packages.back().timestamp; }
};

struct EpochSet {
  NodeId node = 0;
  std::vector<Epoch> epochs;
};

inline bool is_complete(const Epoch& e) { return e.start_pos.has_value() && e.final_pos.has_value(); }

/// Type of a package run, or nullopt when no type fits. A single package
/// with a gateway is vacuously both alpha and omega and reported as alpha.
inline std::optional<EpochType> classify(std::span<const Package> packages) {
  if (packages.empty()) return std::nullopt;
  std::size_t with_gateway = 0;
  for (const auto& p : packages) with_gateway += p.sees_gateway() ? 1 : 0;
  if (with_gateway == 0) return EpochType::nu;
  if (with_gateway != packages.size()) return std::nullopt;
  if (packages.size() == 1) return EpochType::alpha;
  bool rising = true, falling = true;
  for (std::size_t i = 1; i < packages.size(); ++i) {
    const auto prev = *strongest(packages[i - 1]);
    const auto cur = *strongest(packages[i]);
    if (prev.gateway != cur.gateway) return std::nullopt;
    if (!(cur.strength > prev.strength)) rising = false;
    if (!(cur.strength <= prev.strength)) falling = false;
  }
  if (rising) return EpochType::alpha;
  if (falling) return EpochType::omega;
  return std::nullopt;
}

namespace detail {

// classify(e.packages + p) for an epoch whose packages satisfy e.type.
inline std::optional<EpochType> extended_type(const Epoch& e, const Package& p) {
  if (e.coalesced) return std::nullopt;  // mixes nu and gateway packages
  if (e.type == EpochType::nu) return p.sees_gateway() ? std::nullopt : std::optional{EpochType::nu};
  if (!p.sees_gateway()) return std::nullopt;
  const auto prev = *strongest(e.packages.back());
  const auto cur = *strongest(p);
  if (prev.gateway != cur.gateway) return std::nullopt;
  const bool rises = cur.strength > prev.strength;
  if (e.packages.size() == 1) return rises ? EpochType::alpha : EpochType::omega;
  if (e.type == EpochType::alpha) return rises ? std::optional{EpochType::alpha} : std::nullopt;
  return rises ? std::nullopt : std::optional{EpochType::omega};
}

inline Epoch single_package_epoch(Package p, const Package* previous) {
  Epoch e;
  if (!p.sees_gateway()) {
    e.type = EpochType::nu;
  } else {
    const auto cur = *strongest(p);
    e.anchor_gateway = cur.gateway;
    e.type = EpochType::alpha;
    // A drop right after a package at the same gateway is a departure.
    if (previous && previous->sees_gateway()) {
      const auto prev = *strongest(*previous);
      if (prev.gateway == cur.gateway && cur.strength <= prev.strength) e.type = EpochType::omega;
    }
  }
  e.packages.push_back(std::move(p));
  return e;
}

// Type of a coalesced run: the gateway packages alone if they are monotone,
// otherwise the trend of the final step.
inline EpochType coalesced_type(const std::vector<Package>& packages) {
  std::vector<Package> heard;
  for (const auto& p : packages)
    if (p.sees_gateway()) heard.push_back(p);
  if (heard.size() < 2) return EpochType::alpha;
  if (auto t = classify(heard)) return *t;
  const double last = strongest(heard.back())->strength;
  const double before = strongest(heard[heard.size() - 2])->strength;
  return last > before ? EpochType::alpha : EpochType::omega;
}

}  // namespace detail

/// Integrates one package into a node's epoch set: extend the last epoch if
/// the type condition still holds, else coalesce with the most recent
/// gateway epoch when only nu epochs follow it and the same gateway is heard
/// again, else open a new epoch.
inline void integrate_into(EpochSet& set, Package p) {
  if (p.node != set.node) throw InputError("package of node " + std::to_string(p.node) + " integrated into epoch set of node " + std::to_string(set.node));
  auto& epochs = set.epochs;
  if (epochs.empty()) {
    epochs.push_back(detail::single_package_epoch(std::move(p), nullptr));
    return;
  }
  const Package& previous = epochs.back().packages.back();
  if (p.timestamp < previous.timestamp || p.seq <= previous.seq)
    throw InputError("out-of-order package seq " + std::to_string(p.seq) + " for node " + std::to_string(p.node));

  if (auto t = detail::extended_type(epochs.back(), p)) {
    epochs.back().type = *t;
    epochs.back().packages.push_back(std::move(p));
    return;
  }

  if (p.sees_gateway()) {
    std::optional<std::size_t> last_heard;
    for (std::size_t i = epochs.size(); i-- > 0;)
      if (epochs[i].type != EpochType::nu) {
        last_heard = i;
        break;
      }
    if (last_heard && *last_heard + 1 < epochs.size()) {
      const auto& head = epochs[*last_heard];
      if (strongest(head.packages.front())->gateway == strongest(p)->gateway) {
        Epoch merged;
        merged.anchor_gateway = head.anchor_gateway;
        merged.start_pos = head.start_pos;
        merged.coalesced = true;
        for (std::size_t i = *last_heard; i < epochs.size(); ++i)
          for (auto& q : epochs[i].packages) merged.packages.push_back(std::move(q));
        merged.packages.push_back(std::move(p));
        merged.type = detail::coalesced_type(merged.packages);
        epochs.resize(*last_heard);
        epochs.push_back(std::move(merged));
        return;
      }
    }
  }
  epochs.push_back(detail::single_package_epoch(std::move(p), &previous));
}

inline EpochSet integrate(EpochSet set, Package p) {
  integrate_into(set, std::move(p));
  return set;
}

/// Builds the epoch set of a whole package stream for one node.
inline EpochSet build_epochs(NodeId node, std::span<const Package> packages) {
  EpochSet set{node, {}};
  for (const auto& p : packages) integrate_into(set, p);
  return set;
}

namespace detail {

inline bool hears_only(const Epoch& e, const std::string& gateway) {
  for (const auto& p : e.packages)
    for (const auto& o : p.observations)
      if (o.gateway != gateway) return false;
  return true;
}

inline Epoch merge_run(std::span<Epoch> run) {
  Epoch merged;
  merged.type = run.back().type;
  merged.anchor_gateway = run.front().anchor_gateway;
  merged.start_pos = run.front().start_pos;
  merged.final_pos = run.back().final_pos;
  merged.coalesced = true;
  for (auto& e : run)
    for (auto& p : e.packages) merged.packages.push_back(std::move(p));
  return merged;
}

}  // namespace detail

/// Collapses every run of consecutive epochs at one gateway, starting at the
/// first alpha epoch of the run, as long as no other gateway is heard. The
/// merged epoch takes the type of the last epoch of the run.
inline EpochSet merge_same_gateway(EpochSet set) {
  auto& in = set.epochs;
  std::vector<Epoch> out;
  std::size_t i = 0;
  while (i < in.size()) {
    if (in[i].type == EpochType::nu || !in[i].anchor_gateway) {
      out.push_back(std::move(in[i++]));
      continue;
    }
    const std::string g = *in[i].anchor_gateway;
    std::size_t end = i;
    while (end < in.size() && in[end].type != EpochType::nu && in[end].anchor_gateway == g) ++end;
    std::size_t k = i;
    while (k < end && in[k].type != EpochType::alpha) out.push_back(std::move(in[k++]));
    std::size_t stop = k;
    while (stop < end && detail::hears_only(in[stop], g)) ++stop;
    if (stop - k > 1) {
      out.push_back(detail::merge_run(std::span(in).subspan(k, stop - k)));
    } else {
      for (std::size_t m = k; m < stop; ++m) out.push_back(std::move(in[m]));
    }
    for (std::size_t m = stop; m < end; ++m) out.push_back(std::move(in[m]));
    i = end;
  }
  set.epochs = std::move(out);
  return set;
}

// ---------------------------------------------------------------------------
// Boundary positions

/// Point at distance `radius` before gateway junction `target` on the route
/// from `origin`. Clamped to the far end of the incident link.
inline std::optional<GraphPosition> entry_border(const EnvironmentGraph& g, const std::optional<GraphPosition>& origin,
                                                 Vertex target, double radius) {
  const GraphPosition at_gateway = junction_position(target);
  if (!origin) {
    // Without history only an unambiguous approach link will do.
    const auto& up = g.children(target);
    if (up.size() != 1) return std::nullopt;
    const double len = g.parent_link_length(up.front());
    if (radius > len) diag::warn("gateway radius exceeds approach link at '" + g.name(target) + "'");
    return position_on_link(g, target, up.front(), std::min(radius, len));
  }
  const Route route(g, *origin, at_gateway);
  if (route.length() <= kPositionTolerance) return at_gateway;
  const auto& wps = route.waypoints();
  const auto& prev = wps[wps.size() - 2];
  const Vertex neighbour = prev.at_junction() ? prev.from : (prev.from == target ? prev.to : prev.from);
  const double incident = *g.link_length(neighbour, target);
  if (radius > incident) {
    diag::warn("gateway radius exceeds incident link at '" + g.name(target) + "', clamping");
    const double far = route.length() - incident;
    return route.at(std::max(0.0, far));
  }
  return route.at(std::max(0.0, route.length() - radius));
}

/// Point at distance `radius` downstream of gateway junction `source`.
inline GraphPosition exit_border(const EnvironmentGraph& g, Vertex source, double radius) {
  const auto down = g.parent(source);
  if (!down) return junction_position(source);
  const double len = g.parent_link_length(source);
  if (radius > len) diag::warn("gateway radius exceeds downstream link at '" + g.name(source) + "', clamping");
  return position_on_link(g, source, *down, std::min(radius, len));
}

struct ResolveOptions {
  /// Known deployment point of the node, if any.
  std::optional<GraphPosition> insertion;
};

namespace detail {

inline bool at_max_strength(const Package& p, const Gateway& gw) {
  const auto s = strongest(p);
  return s && s->gateway == gw.id &&
         s->strength >= LinearPropagation::max_strength(gw.radius) - kPositionTolerance;
}

}  // namespace detail

/// Assigns start and final positions where the completion rules allow:
///  (a) alpha epoch that is not the last one: the anchor gateway's junction;
///  (b) alpha epoch whose last package hears the anchor at maximum strength;
///  (c) next epoch is not nu: the border of the next anchor's range, on the
///      route from the last known position;
///  (e) omega epoch followed by nu: the downstream border of its own range;
///  (d) positions already set are kept.
/// Start positions chain from the previous epoch's final position; the first
/// epoch starts at the insertion point, or at its gateway when the first
/// package hears it at maximum strength.
inline EpochSet resolve_positions(EpochSet set, const EnvironmentGraph& g, const ResolveOptions& opts = {}) {
  auto& epochs = set.epochs;
  std::optional<GraphPosition> known;
  auto gateway_of = [&](const Epoch& e) -> const Gateway* {
    if (!e.anchor_gateway) return nullptr;
    const auto* gw = g.find_gateway(*e.anchor_gateway);
    if (!gw) diag::warn("package heard gateway '" + *e.anchor_gateway + "' absent from the graph");
    return gw;
  };
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    auto& e = epochs[i];
    const auto* gw = gateway_of(e);
    if (!e.start_pos) {
      if (i > 0) {
        e.start_pos = epochs[i - 1].final_pos;
      } else if (opts.insertion) {
        e.start_pos = opts.insertion;
      } else if (gw && detail::at_max_strength(e.packages.front(), *gw)) {
        e.start_pos = junction_position(gw->junction);
      }
    }
    if (e.start_pos) known = e.start_pos;
    const bool last = i + 1 == epochs.size();
    if (!e.final_pos && gw && e.type == EpochType::alpha) {
      if (!last || detail::at_max_strength(e.packages.back(), *gw)) e.final_pos = junction_position(gw->junction);
    }
    if (!e.final_pos && !last && epochs[i + 1].type != EpochType::nu) {
      const auto* next = gateway_of(epochs[i + 1]);
      if (next && next != gw) e.final_pos = entry_border(g, known, next->junction, next->radius);
    }
    if (!e.final_pos && !last && gw && e.type == EpochType::omega && epochs[i + 1].type == EpochType::nu)
      e.final_pos = exit_border(g, gw->junction, gw->radius);
    if (e.final_pos) known = e.final_pos;
  }
  return set;
}

// ---------------------------------------------------------------------------
// Debug dump

inline nlohmann::json position_json(const EnvironmentGraph& g, const GraphPosition& p) {
  return {{"from", g.name(p.from)}, {"to", g.name(p.to)}, {"offset", p.offset}, {"span", p.span}};
}

inline nlohmann::json dump_epochs(const EpochSet& set, const EnvironmentGraph& g) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : set.epochs) {
    nlohmann::json j;
    j["type"] = to_string(e.type);
    j["first_seq"] = e.packages.front().seq;
    j["last_seq"] = e.packages.back().seq;
    j["anchor"] = e.anchor_gateway ? nlohmann::json(*e.anchor_gateway) : nlohmann::json();
    j["start"] = e.start_pos ? position_json(g, *e.start_pos) : nlohmann::json();
    j["final"] = e.final_pos ? position_json(g, *e.final_pos) : nlohmann::json();
    epochs.push_back(std::move(j));
  }
  return {{"node", set.node}, {"epochs", std::move(epochs)}};
}

}  // namespace gral
