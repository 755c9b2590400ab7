#pragma once

// Packages, checkpoints and localized outputs, plus the newline-delimited
// JSON package stream:
//
//   {"node":1,"seq":0,"t":0,"obs":[["g1",3.1]],"contacts":[[2,0.5]],"payload":{...}}

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gral/error.hpp"
#include "gral/position.hpp"

namespace gral {

using NodeId = std::uint32_t;

struct GatewayObservation {
  std::string gateway;
  double strength = 0.0;
  friend bool operator==(const GatewayObservation&, const GatewayObservation&) = default;
};

struct NodeContact {
  NodeId peer = 0;
  double strength = 0.0;
  friend bool operator==(const NodeContact&, const NodeContact&) = default;
};

struct Package {
  NodeId node = 0;
  std::uint64_t seq = 0;
  double timestamp = 0.0;
  /// Sorted by descending strength; ties broken by ascending gateway id.
  std::vector<GatewayObservation> observations;
  std::vector<NodeContact> contacts;
  nlohmann::json payload;

  bool sees_gateway() const { return !observations.empty(); }
  friend bool operator==(const Package&, const Package&) = default;
};

/// Strict "stronger than" order on observations.
inline bool stronger(const GatewayObservation& a, const GatewayObservation& b) {
  if (a.strength != b.strength) return a.strength > b.strength;
  return a.gateway < b.gateway;
}

inline void sort_observations(Package& p) {
  std::sort(p.observations.begin(), p.observations.end(), stronger);
}

/// The strongest observation, whatever order the observations are stored in.
inline std::optional<GatewayObservation> strongest(const Package& p) {
  if (p.observations.empty()) return std::nullopt;
  return *std::min_element(p.observations.begin(), p.observations.end(), stronger);
}

struct Checkpoint {
  NodeId issuer = 0;
  NodeId target = 0;
  double timestamp = 0.0;
  GraphPosition position;
};

enum class Variant { baseline, gral, gral_cp, gral_pr, gral_cp_pr };

inline constexpr Variant kAllVariants[] = {Variant::baseline, Variant::gral, Variant::gral_cp,
                                           Variant::gral_pr, Variant::gral_cp_pr};

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::baseline: return "baseline";
    case Variant::gral: return "gral";
    case Variant::gral_cp: return "gral+cp";
    case Variant::gral_pr: return "gral+pr";
    case Variant::gral_cp_pr: return "gral+cp+pr";
  }
  throw InvariantError("bad variant");
}

inline Variant parse_variant(std::string_view s) {
  for (auto v : kAllVariants)
    if (to_string(v) == s) return v;
  throw InputError("unknown variant '" + std::string(s) + "'");
}

inline bool uses_checkpoints(Variant v) { return v == Variant::gral_cp || v == Variant::gral_cp_pr; }
inline bool uses_rectification(Variant v) { return v == Variant::gral_pr || v == Variant::gral_cp_pr; }

struct LocalizedMeasurement {
  NodeId node = 0;
  std::uint64_t seq = 0;
  double timestamp = 0.0;
  GraphPosition position;
  Variant method = Variant::gral;
};

// ---------------------------------------------------------------------------
// Package stream

inline nlohmann::json to_json(const Package& p) {
  nlohmann::json obs = nlohmann::json::array();
  for (const auto& o : p.observations) obs.push_back({o.gateway, o.strength});
  nlohmann::json contacts = nlohmann::json::array();
  for (const auto& c : p.contacts) contacts.push_back({c.peer, c.strength});
  nlohmann::json j;
  j["node"] = p.node;
  j["seq"] = p.seq;
  j["t"] = p.timestamp;
  j["obs"] = std::move(obs);
  j["contacts"] = std::move(contacts);
  j["payload"] = p.payload;
  return j;
}

namespace detail {

inline double nonnegative_number(const nlohmann::json& j, const char* what) {
  if (!j.is_number()) throw InputError(std::string(what) + " is not a number");
  const double v = j.get<double>();
  if (!(v >= 0.0)) throw InputError(std::string("negative strength in ") + what);
  return v;
}

inline Package package_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("record is not a JSON object");
  for (const auto& [key, _] : j.items())
    if (key != "node" && key != "seq" && key != "t" && key != "obs" && key != "contacts" && key != "payload")
      throw InputError("unknown field '" + key + "'");
  for (const char* key : {"node", "seq", "t"})
    if (!j.contains(key)) throw InputError(std::string("missing field '") + key + "'");
  if (!j["node"].is_number_unsigned()) throw InputError("node must be an unsigned integer");
  if (!j["seq"].is_number_unsigned()) throw InputError("seq must be an unsigned integer");
  if (!j["t"].is_number()) throw InputError("t must be a number");
  Package p;
  p.node = j["node"].get<NodeId>();
  p.seq = j["seq"].get<std::uint64_t>();
  p.timestamp = j["t"].get<double>();
  if (j.contains("obs")) {
    if (!j["obs"].is_array()) throw InputError("obs must be an array");
    for (const auto& o : j["obs"]) {
      if (!o.is_array() || o.size() != 2 || !o[0].is_string())
        throw InputError("obs entries must be [gateway, strength]");
      p.observations.push_back({o[0].get<std::string>(), nonnegative_number(o[1], "obs")});
    }
  }
  if (j.contains("contacts")) {
    if (!j["contacts"].is_array()) throw InputError("contacts must be an array");
    for (const auto& c : j["contacts"]) {
      if (!c.is_array() || c.size() != 2 || !c[0].is_number_unsigned())
        throw InputError("contacts entries must be [peer, strength]");
      p.contacts.push_back({c[0].get<NodeId>(), nonnegative_number(c[1], "contacts")});
    }
  }
  if (j.contains("payload")) p.payload = j["payload"];
  sort_observations(p);
  return p;
}

}  // namespace detail

/// Parses newline-delimited package records. Blank lines are skipped.
/// Throws InputError naming the offending line.
inline std::vector<Package> parse_package_stream(std::string_view text) {
  std::vector<Package> out;
  std::map<NodeId, std::pair<std::uint64_t, double>> last;  // seq, timestamp
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto eol = text.find('\n', pos);
    const auto line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const auto where = "line " + std::to_string(line_no) + ": ";
    Package p;
    try {
      p = detail::package_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(where + "malformed record: " + e.what());
    } catch (const InputError& e) {
      throw InputError(where + e.what());
    }
    if (auto it = last.find(p.node); it != last.end()) {
      if (p.seq <= it->second.first) throw InputError(where + "seq regression for node " + std::to_string(p.node));
      if (p.timestamp < it->second.second)
        throw InputError(where + "timestamp regression for node " + std::to_string(p.node));
    }
    last[p.node] = {p.seq, p.timestamp};
    out.push_back(std::move(p));
  }
  return out;
}

inline std::string serialize_package_stream(std::span<const Package> packages) {
  std::string out;
  for (const auto& p : packages) {
    out += to_json(p).dump();
    out += '\n';
  }
  return out;
}

}  // namespace gral
