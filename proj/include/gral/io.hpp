#pragma once

// File formats: graph and scenario JSON, ground-truth and localized CSV.

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "gral/error.hpp"
#include "gral/graph.hpp"
#include "gral/localizer.hpp"
#include "gral/package.hpp"
#include "gral/position.hpp"
#include "gral/simulator.hpp"

namespace gral {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << content;
}

namespace detail {

inline void allow_only(const nlohmann::json& j, std::initializer_list<std::string_view> keys, std::string_view what) {
  if (!j.is_object()) throw InputError(std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw InputError("unknown field '" + key + "' in " + std::string(what));
}

template <typename T>
T require(const nlohmann::json& j, const char* key, std::string_view what) {
  if (!j.contains(key)) throw InputError("missing field '" + std::string(key) + "' in " + std::string(what));
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InputError("field '" + std::string(key) + "' in " + std::string(what) + " has the wrong type");
  }
}

template <typename T>
T optional_field(const nlohmann::json& j, const char* key, T fallback, std::string_view what) {
  return j.contains(key) ? require<T>(j, key, what) : fallback;
}

}  // namespace detail

inline std::string format_number(double x) { return fmt::format("{}", x); }

// ---------------------------------------------------------------------------
// Graph

/// Parses a graph document. Gateways without a "radius" take
/// `default_radius`; without one they are rejected.
inline EnvironmentGraph graph_from_json(const nlohmann::json& j, std::optional<double> default_radius = std::nullopt) {
  detail::allow_only(j, {"junctions", "links", "root"}, "graph");
  if (!j.contains("junctions") || !j["junctions"].is_array()) throw InputError("graph needs a 'junctions' array");
  if (!j.contains("links") || !j["links"].is_array()) throw InputError("graph needs a 'links' array");
  std::vector<JunctionSpec> junctions;
  for (const auto& jj : j["junctions"]) {
    detail::allow_only(jj, {"id", "gateway"}, "junction");
    JunctionSpec spec{detail::require<std::string>(jj, "id", "junction"), std::nullopt};
    if (jj.contains("gateway")) {
      const auto& gj = jj["gateway"];
      detail::allow_only(gj, {"id", "radius"}, "gateway");
      GatewaySpec gw{detail::require<std::string>(gj, "id", "gateway"), 0.0};
      if (gj.contains("radius"))
        gw.radius = detail::require<double>(gj, "radius", "gateway");
      else if (default_radius)
        gw.radius = *default_radius;
      else
        throw InputError("gateway '" + gw.id + "' has no radius");
      spec.gateway = std::move(gw);
    }
    junctions.push_back(std::move(spec));
  }
  std::vector<LinkSpec> links;
  for (const auto& lj : j["links"]) {
    detail::allow_only(lj, {"u", "v", "length"}, "link");
    links.push_back({detail::require<std::string>(lj, "u", "link"), detail::require<std::string>(lj, "v", "link"),
                     detail::require<double>(lj, "length", "link")});
  }
  return EnvironmentGraph::build(std::move(junctions), std::move(links),
                                 detail::require<std::string>(j, "root", "graph"));
}

inline nlohmann::json graph_to_json(const EnvironmentGraph& g) {
  nlohmann::json junctions = nlohmann::json::array();
  for (const auto& js : g.junction_specs()) {
    nlohmann::json jj{{"id", js.id}};
    if (js.gateway) jj["gateway"] = {{"id", js.gateway->id}, {"radius", js.gateway->radius}};
    junctions.push_back(std::move(jj));
  }
  nlohmann::json links = nlohmann::json::array();
  for (const auto& l : g.link_specs()) links.push_back({{"u", l.u}, {"v", l.v}, {"length", l.length}});
  return {{"junctions", std::move(junctions)}, {"links", std::move(links)}, {"root", g.name(g.root())}};
}

inline EnvironmentGraph load_graph(const std::string& path) {
  try {
    return graph_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Positions

/// {"from", "to", "offset"} with the offset measured along the path from
/// "from" to "to"; an optional "span" must match that path's length.
inline GraphPosition position_from_json(const EnvironmentGraph& g, const nlohmann::json& j) {
  detail::allow_only(j, {"from", "to", "offset", "span"}, "position");
  const Vertex from = g.vertex(detail::require<std::string>(j, "from", "position"));
  const Vertex to = g.vertex(detail::require<std::string>(j, "to", "position"));
  const double offset = detail::require<double>(j, "offset", "position");
  const double span = g.path_length(from, to);
  if (j.contains("span") && std::abs(detail::require<double>(j, "span", "position") - span) > kPositionTolerance)
    throw InputError("position span does not match the path length");
  if (offset < 0.0 || offset > span + kPositionTolerance) throw InputError("position offset out of range");
  return make_position(g, from, to, offset);
}

// ---------------------------------------------------------------------------
// Scenario

inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  detail::allow_only(j,
                     {"name", "graph", "insertions", "base_step", "noise_p", "gateway_radius", "contact_radius",
                      "measurement_interval", "max_ticks"},
                     "scenario");
  ScenarioSpec s;
  s.name = detail::optional_field<std::string>(j, "name", "custom", "scenario");
  s.base_step = detail::optional_field<double>(j, "base_step", s.base_step, "scenario");
  s.noise_p = detail::optional_field<double>(j, "noise_p", s.noise_p, "scenario");
  s.gateway_radius = detail::optional_field<double>(j, "gateway_radius", s.gateway_radius, "scenario");
  s.contact_radius = detail::optional_field<double>(j, "contact_radius", s.contact_radius, "scenario");
  s.measurement_interval =
      detail::optional_field<std::uint64_t>(j, "measurement_interval", s.measurement_interval, "scenario");
  s.max_ticks = detail::optional_field<std::uint64_t>(j, "max_ticks", s.max_ticks, "scenario");
  if (!j.contains("graph")) throw InputError("scenario needs a 'graph'");
  s.graph = graph_from_json(j["graph"], s.gateway_radius);
  if (!j.contains("insertions") || !j["insertions"].is_array()) throw InputError("scenario needs an 'insertions' array");
  for (const auto& ij : j["insertions"]) {
    detail::allow_only(ij, {"node", "position", "tick", "noise_p", "noise_script"}, "insertion");
    NodeInsertion ins;
    ins.node = detail::require<NodeId>(ij, "node", "insertion");
    if (!ij.contains("position")) throw InputError("insertion needs a 'position'");
    ins.start = position_from_json(s.graph, ij["position"]);
    ins.tick = detail::optional_field<std::uint64_t>(ij, "tick", 0, "insertion");
    if (ij.contains("noise_p")) ins.noise_p = detail::require<double>(ij, "noise_p", "insertion");
    ins.noise_script = detail::optional_field<std::vector<int>>(ij, "noise_script", {}, "insertion");
    s.insertions.push_back(std::move(ins));
  }
  s.validate();
  return s;
}

inline nlohmann::json scenario_to_json(const ScenarioSpec& s) {
  nlohmann::json insertions = nlohmann::json::array();
  for (const auto& ins : s.insertions) {
    nlohmann::json ij{{"node", ins.node}, {"position", position_json(s.graph, ins.start)}, {"tick", ins.tick}};
    if (ins.noise_p) ij["noise_p"] = *ins.noise_p;
    if (!ins.noise_script.empty()) ij["noise_script"] = ins.noise_script;
    insertions.push_back(std::move(ij));
  }
  return {{"name", s.name},
          {"graph", graph_to_json(s.graph)},
          {"insertions", std::move(insertions)},
          {"base_step", s.base_step},
          {"noise_p", s.noise_p},
          {"gateway_radius", s.gateway_radius},
          {"contact_radius", s.contact_radius},
          {"measurement_interval", s.measurement_interval},
          {"max_ticks", s.max_ticks}};
}

/// "1".."4" selects a built-in scenario; anything else is a scenario file.
inline ScenarioSpec load_scenario(const std::string& which) {
  if (which.size() == 1 && which[0] >= '1' && which[0] <= '4') return make_scenario(which[0] - '0');
  try {
    return scenario_from_json(nlohmann::json::parse(read_file(which)));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(which + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// CSV

inline std::string ground_truth_csv(const EnvironmentGraph& g, std::span<const GroundTruthRecord> records) {
  std::string out = "node,seq,t,from,to,offset,span\n";
  for (const auto& r : records)
    out += fmt::format("{},{},{},{},{},{},{}\n", r.node, r.seq, r.tick, g.name(r.position.from),
                       g.name(r.position.to), format_number(r.position.offset), format_number(r.position.span));
  return out;
}

inline std::string localized_csv(const EnvironmentGraph& g, const LocalizationResult& result) {
  std::string out = "node,seq,t,from,to,offset,span,method\n";
  for (const auto& [node, ms] : result)
    for (const auto& m : ms)
      out += fmt::format("{},{},{},{},{},{},{},{}\n", m.node, m.seq, format_number(m.timestamp),
                         g.name(m.position.from), g.name(m.position.to), format_number(m.position.offset),
                         format_number(m.position.span), to_string(m.method));
  return out;
}

}  // namespace gral
