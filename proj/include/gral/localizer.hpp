#pragma once

// Backend localization: baseline interpolation between gateway contacts,
// epoch-based interpolation, and the two multi-node refinements
// (checkpoints exchanged between nodes that met, and path rectification at
// the confluence of their routes).

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "gral/epoch.hpp"
#include "gral/error.hpp"
#include "gral/graph.hpp"
#include "gral/package.hpp"
#include "gral/position.hpp"

namespace gral {

/// Interpolates the packages of a complete epoch by time between its start
/// and final positions along the route joining them.
inline std::vector<LocalizedMeasurement> interpolate_epoch(const EnvironmentGraph& g, const Epoch& e,
                                                           Variant method = Variant::gral) {
  if (!is_complete(e)) throw InputError("epoch is not complete");
  const Route route(g, *e.start_pos, *e.final_pos);
  const double t0 = e.first_time();
  const double t1 = e.last_time();
  std::vector<LocalizedMeasurement> out;
  out.reserve(e.packages.size());
  const bool degenerate = !(t1 > t0);
  if (degenerate && route.length() > kPositionTolerance)
    diag::warn("epoch of node " + std::to_string(e.packages.front().node) +
               " spans no time but distinct boundaries; using the final position");
  for (const auto& p : e.packages) {
    GraphPosition pos;
    if (degenerate)
      pos = route.end();
    else if (p.timestamp == t1)
      pos = route.end();
    else
      pos = route.at((p.timestamp - t0) / (t1 - t0) * route.length());
    out.push_back({p.node, p.seq, p.timestamp, pos, method});
  }
  return out;
}

/// Every package of every complete epoch, in stream order.
inline std::vector<LocalizedMeasurement> interpolate_epochs(const EnvironmentGraph& g, const EpochSet& set,
                                                            Variant method) {
  std::vector<LocalizedMeasurement> out;
  for (const auto& e : set.epochs) {
    if (!is_complete(e)) continue;
    auto part = interpolate_epoch(g, e, method);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

/// Naive reference method: a package that hears a gateway is placed at that
/// gateway's junction at the first and last contact of each contact run;
/// everything between two such anchors is interpolated by time along the
/// path joining them; packages outside the anchored span are pinned to the
/// nearest anchor. Returns nothing if the node never heard a gateway.
inline std::vector<LocalizedMeasurement> baseline_localize(const EnvironmentGraph& g,
                                                           std::span<const Package> packages) {
  struct Anchor {
    double t;
    Vertex junction;
  };
  std::vector<Anchor> anchors;
  std::optional<std::string> run_gateway;
  for (std::size_t i = 0; i < packages.size(); ++i) {
    const auto s = strongest(packages[i]);
    const Gateway* gw = s ? g.find_gateway(s->gateway) : nullptr;
    const std::optional<std::string> here = gw ? std::optional(gw->id) : std::nullopt;
    if (here && here != run_gateway) anchors.push_back({packages[i].timestamp, gw->junction});
    if (here) {
      const bool run_ends = i + 1 == packages.size() || [&] {
        const auto n = strongest(packages[i + 1]);
        return !n || n->gateway != *here;
      }();
      if (run_ends) anchors.push_back({packages[i].timestamp, gw->junction});
    }
    run_gateway = here;
  }
  std::vector<LocalizedMeasurement> out;
  if (anchors.empty()) {
    if (!packages.empty())
      diag::warn("node " + std::to_string(packages.front().node) + " never heard a gateway; baseline has no anchor");
    return out;
  }
  std::size_t k = 0;
  for (const auto& p : packages) {
    const double t = p.timestamp;
    GraphPosition pos;
    if (t <= anchors.front().t) {
      pos = junction_position(anchors.front().junction);
    } else if (t >= anchors.back().t) {
      pos = junction_position(anchors.back().junction);
    } else {
      while (k + 1 < anchors.size() && anchors[k + 1].t < t) ++k;
      const auto& a = anchors[k];
      const auto& b = anchors[k + 1];
      const Route route(g, junction_position(a.junction), junction_position(b.junction));
      pos = b.t > a.t ? route.at((t - a.t) / (b.t - a.t) * route.length()) : route.end();
    }
    out.push_back({p.node, p.seq, t, pos, Variant::baseline});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Backend state

struct AnchorVisit {
  double t = 0.0;
  Vertex junction = 0;
};

struct RectificationEvent {
  NodeId node = 0;
  NodeId peer = 0;
  /// Contact package placed on the confluence vertex; it ends the first fragment.
  std::uint64_t split_seq = 0;
  Vertex confluence = 0;
  Vertex destination = 0;
};

struct BackendState {
  explicit BackendState(EnvironmentGraph graph, Variant variant = Variant::gral)
      : graph(std::move(graph)), variant(variant) {}

  EnvironmentGraph graph;
  Variant variant;
  /// Integrated epochs, before merging and boundary resolution.
  std::map<NodeId, EpochSet> raw;
  /// Epochs used for the node's most recent localization.
  std::map<NodeId, EpochSet> resolved;
  std::map<NodeId, std::vector<LocalizedMeasurement>> localized;
  std::vector<Checkpoint> checkpoints;
  /// Gateway junctions heard by each node, in time order.
  std::map<NodeId, std::vector<AnchorVisit>> provenance;
  /// Latest timestamp each node has transmitted.
  std::map<NodeId, double> reported_until;
  std::map<NodeId, GraphPosition> insertions;
  std::map<NodeId, std::vector<RectificationEvent>> rectifications;
};

/// Last gateway junction `node` heard before (or, if `inclusive`, at) time t,
/// skipping `exclude`.
inline std::optional<Vertex> provenance_at(const BackendState& state, NodeId node, double t, bool inclusive,
                                           std::optional<Vertex> exclude = std::nullopt) {
  auto it = state.provenance.find(node);
  if (it == state.provenance.end()) return std::nullopt;
  const auto& visits = it->second;
  for (auto v = visits.rbegin(); v != visits.rend(); ++v) {
    if (v->t > t || (!inclusive && v->t == t)) continue;
    if (exclude && v->junction == *exclude) continue;
    return v->junction;
  }
  return std::nullopt;
}

namespace detail {

// Splits epoch k before package index `at`; the first fragment ends and the
// second starts at `boundary`.
inline void split_epoch(EpochSet& set, std::size_t k, std::size_t at, const GraphPosition& boundary) {
  auto& e = set.epochs[k];
  Epoch tail;
  tail.type = e.type;
  tail.anchor_gateway = e.anchor_gateway;
  tail.coalesced = e.coalesced;
  tail.start_pos = boundary;
  tail.final_pos = e.final_pos;
  tail.packages.assign(std::make_move_iterator(e.packages.begin() + static_cast<std::ptrdiff_t>(at)),
                       std::make_move_iterator(e.packages.end()));
  e.packages.resize(at);
  e.final_pos = boundary;
  set.epochs.insert(set.epochs.begin() + static_cast<std::ptrdiff_t>(k) + 1, std::move(tail));
}

inline const LocalizedMeasurement* find_seq(const std::vector<LocalizedMeasurement>& ms, std::uint64_t seq) {
  auto it = std::lower_bound(ms.begin(), ms.end(), seq,
                             [](const LocalizedMeasurement& m, std::uint64_t s) { return m.seq < s; });
  return it != ms.end() && it->seq == seq ? &*it : nullptr;
}

}  // namespace detail

/// Splits the node's epochs at every checkpoint addressed to it, in
/// timestamp order. The split falls before the first package later than the
/// checkpoint; checkpoints off the epoch's route are discarded.
inline EpochSet apply_checkpoints(const BackendState& state, EpochSet set) {
  std::vector<Checkpoint> mine;
  for (const auto& c : state.checkpoints)
    if (c.target == set.node) mine.push_back(c);
  std::stable_sort(mine.begin(), mine.end(), [](const Checkpoint& a, const Checkpoint& b) {
    return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.issuer < b.issuer;
  });
  const auto& g = state.graph;
  for (const auto& c : mine) {
    auto it = std::find_if(set.epochs.begin(), set.epochs.end(), [&](const Epoch& e) {
      return e.first_time() <= c.timestamp && c.timestamp < e.last_time();
    });
    if (it == set.epochs.end()) continue;
    const auto& e = *it;
    if (!e.start_pos) continue;
    const GraphPosition until = e.final_pos ? *e.final_pos : junction_position(g.root());
    if (!lies_between(g, *e.start_pos, until, c.position)) {
      diag::warn("checkpoint from node " + std::to_string(c.issuer) + " for node " + std::to_string(c.target) +
                 " lies off the epoch route; discarded");
      continue;
    }
    const auto first_later = std::find_if(e.packages.begin(), e.packages.end(),
                                          [&](const Package& p) { return p.timestamp > c.timestamp; });
    detail::split_epoch(set, static_cast<std::size_t>(it - set.epochs.begin()),
                        static_cast<std::size_t>(first_later - e.packages.begin()), c.position);
  }
  return set;
}

/// Moves contact packages that were placed upstream of the point where the
/// two nodes' routes join: the containing epoch is split after the earliest
/// such contact, which becomes the last package of the first fragment and is
/// placed on the confluence vertex.
/// Updates `set` and returns the re-interpolated packages.
inline std::vector<LocalizedMeasurement> rectify_paths(BackendState& state, EpochSet& set,
                                                       std::vector<LocalizedMeasurement> localized) {
  const auto& g = state.graph;
  auto& events = state.rectifications[set.node];
  events.clear();
  std::set<NodeId> peers;
  for (const auto& e : set.epochs)
    for (const auto& p : e.packages)
      for (const auto& c : p.contacts) peers.insert(c.peer);

  auto destination = [&](std::size_t k) -> std::optional<Vertex> {
    for (std::size_t m = k; m < set.epochs.size(); ++m) {
      const auto& e = set.epochs[m];
      if (m == k && e.type != EpochType::alpha) continue;
      if (!e.anchor_gateway || e.type == EpochType::nu) continue;
      if (const auto* gw = g.find_gateway(*e.anchor_gateway)) return gw->junction;
    }
    return std::nullopt;
  };

  for (NodeId peer : peers) {
    for (std::size_t k = 0; k < set.epochs.size(); ++k) {
      const auto& e = set.epochs[k];
      if (!is_complete(e)) continue;
      const auto q = std::find_if(e.packages.begin(), e.packages.end(), [&](const Package& p) {
        return std::any_of(p.contacts.begin(), p.contacts.end(), [&](const NodeContact& c) { return c.peer == peer; });
      });
      if (q == e.packages.end()) continue;
      const auto vf = destination(k);
      if (!vf) continue;
      const auto va = provenance_at(state, set.node, e.first_time(), false, vf);
      const auto vb = provenance_at(state, peer, q->timestamp, true, vf);
      if (!va || !vb) {
        if (!vb) diag::warn("no provenance for peer " + std::to_string(peer) + "; rectification skipped");
        continue;
      }
      const Vertex vc = confluence_vertex(g, *va, *vb, *vf);
      const auto* est = detail::find_seq(localized, q->seq);
      if (!est) continue;
      const GraphPosition at_vc = junction_position(vc);
      const double est_left = geodesic_distance(g, est->position, junction_position(*vf));
      if (!(est_left > g.path_length(vc, *vf) + kPositionTolerance)) continue;
      const auto at = static_cast<std::size_t>(q - e.packages.begin());
      if (at == 0 || at + 1 == e.packages.size()) {
        diag::warn("rectification for node " + std::to_string(set.node) + " skipped: contact at an epoch boundary");
        continue;
      }
      if (!lies_between(g, *e.start_pos, *e.final_pos, at_vc) || same_position(g, *e.start_pos, at_vc)) {
        diag::warn("rectification for node " + std::to_string(set.node) + " skipped: confluence off the epoch route");
        continue;
      }
      events.push_back({set.node, peer, q->seq, vc, *vf});
      detail::split_epoch(set, k, at + 1, at_vc);
      localized = interpolate_epochs(g, set, state.variant);
    }
  }
  return localized;
}

/// Re-runs localization of one node from its integrated epochs.
inline const std::vector<LocalizedMeasurement>& localize_node(BackendState& state, NodeId node) {
  auto raw = state.raw.find(node);
  if (raw == state.raw.end()) throw InputError("no packages for node " + std::to_string(node));
  ResolveOptions opts;
  if (auto ins = state.insertions.find(node); ins != state.insertions.end()) opts.insertion = ins->second;
  EpochSet set = resolve_positions(merge_same_gateway(raw->second), state.graph, opts);
  if (uses_checkpoints(state.variant)) set = apply_checkpoints(state, std::move(set));
  auto out = interpolate_epochs(state.graph, set, state.variant);
  if (uses_rectification(state.variant)) out = rectify_paths(state, set, std::move(out));
  state.resolved[node] = std::move(set);
  return state.localized[node] = std::move(out);
}

/// Issues at most one checkpoint per peer and epoch, at the contact with the
/// highest strength, carrying this node's estimate at that moment. Only peers
/// that have not yet transmitted past the contact receive one.
inline void issue_checkpoints(BackendState& state, NodeId node) {
  const auto& set = state.resolved.at(node);
  const auto& ms = state.localized.at(node);
  for (const auto& e : set.epochs) {
    if (!is_complete(e)) continue;
    std::map<NodeId, const Package*> best;
    std::map<NodeId, double> best_strength;
    for (const auto& p : e.packages)
      for (const auto& c : p.contacts) {
        auto it = best_strength.find(c.peer);
        if (it == best_strength.end() || c.strength > it->second) {
          best_strength[c.peer] = c.strength;
          best[c.peer] = &p;
        }
      }
    for (const auto& [peer, p] : best) {
      if (peer == node) continue;
      if (auto r = state.reported_until.find(peer); r != state.reported_until.end() && r->second >= p->timestamp)
        continue;
      const bool already = std::any_of(state.checkpoints.begin(), state.checkpoints.end(), [&](const Checkpoint& c) {
        return c.issuer == node && c.target == peer && c.timestamp >= e.first_time() && c.timestamp <= e.last_time();
      });
      if (already) continue;
      const auto* m = detail::find_seq(ms, p->seq);
      if (!m) continue;
      state.checkpoints.push_back({node, peer, p->timestamp, m->position});
    }
  }
}

/// Feeds one transmitted batch of a single node to the backend.
inline void receive_batch(BackendState& state, std::span<const Package> batch) {
  if (batch.empty()) return;
  const NodeId node = batch.front().node;
  auto [it, _] = state.raw.try_emplace(node, EpochSet{node, {}});
  for (const auto& p : batch) {
    if (p.node != node) throw InputError("batch mixes packages of several nodes");
    integrate_into(it->second, p);
    if (const auto s = strongest(p))
      if (const auto* gw = state.graph.find_gateway(s->gateway))
        state.provenance[node].push_back({p.timestamp, gw->junction});
    state.reported_until[node] = p.timestamp;
  }
  localize_node(state, node);
  if (uses_checkpoints(state.variant)) issue_checkpoints(state, node);
}

using Batch = std::vector<Package>;
using LocalizationResult = std::map<NodeId, std::vector<LocalizedMeasurement>>;

/// Localizes transmitted batches in arrival order with the given method.
inline LocalizationResult run_pipeline(BackendState& state, std::span<const Batch> batches) {
  LocalizationResult out;
  if (state.variant == Variant::baseline) {
    std::map<NodeId, std::vector<Package>> streams;
    for (const auto& b : batches)
      for (const auto& p : b) streams[p.node].push_back(p);
    for (const auto& [node, packages] : streams) out[node] = baseline_localize(state.graph, packages);
    return out;
  }
  for (const auto& b : batches) receive_batch(state, b);
  for (const auto& [node, ms] : state.localized) out[node] = ms;
  return out;
}

inline LocalizationResult run_pipeline(const EnvironmentGraph& g, std::span<const Batch> batches, Variant variant) {
  BackendState state(g, variant);
  return run_pipeline(state, batches);
}

/// Regroups a flat package stream into batches: maximal runs of consecutive
/// packages from the same node.
inline std::vector<Batch> batches_from_stream(std::span<const Package> packages) {
  std::vector<Batch> out;
  for (const auto& p : packages) {
    if (out.empty() || out.back().front().node != p.node) out.emplace_back();
    out.back().push_back(p);
  }
  return out;
}

}  // namespace gral
