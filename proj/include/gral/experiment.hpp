#pragma once

// Multi-instance evaluation: simulate seeded instances, localize them with
// each method, and score estimates against ground truth by along-network
// distance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "gral/io.hpp"
#include "gral/localizer.hpp"
#include "gral/metrics.hpp"
#include "gral/simulator.hpp"

namespace gral {

struct ErrorSample {
  NodeId node = 0;
  std::uint64_t seq = 0;
  double error = 0.0;
};

struct InstanceScore {
  std::vector<ErrorSample> errors;
  /// Transmitted packages that received no position.
  std::size_t unlocalized = 0;
};

/// Scores the localized packages of one instance against its ground truth.
inline InstanceScore score_instance(const EnvironmentGraph& g, const Instance& inst, const LocalizationResult& result) {
  std::map<std::pair<NodeId, std::uint64_t>, const GroundTruthRecord*> truth;
  for (const auto& r : inst.ground_truth) truth[{r.node, r.seq}] = &r;
  InstanceScore score;
  std::size_t sent = 0;
  for (const auto& b : inst.batches) sent += b.size();
  for (const auto& [node, ms] : result)
    for (const auto& m : ms) {
      auto it = truth.find({m.node, m.seq});
      if (it == truth.end()) throw InvariantError("localized package without ground truth");
      score.errors.push_back({m.node, m.seq, geodesic_distance(g, it->second->position, m.position)});
    }
  if (score.errors.size() > sent) throw InvariantError("more localized packages than transmitted");
  score.unlocalized = sent - score.errors.size();
  return score;
}

struct VariantResult {
  Variant variant = Variant::gral;
  /// Per-instance RMSE; NaN for an instance with no localized package.
  std::vector<double> irmse;
  double drmse = 0.0;
  double mae = 0.0;
  double mae_percent = 0.0;
  std::size_t localized = 0;
  std::size_t unlocalized = 0;

  double coverage() const {
    const auto total = localized + unlocalized;
    return total ? static_cast<double>(localized) / static_cast<double>(total) : 0.0;
  }
};

struct ExperimentResult {
  std::string scenario;
  std::size_t instances = 0;
  std::uint64_t seed0 = 0;
  double route_length = 0.0;
  std::size_t truncated = 0;
  std::vector<VariantResult> rows;

  const VariantResult& row(Variant v) const {
    for (const auto& r : rows)
      if (r.variant == v) return r;
    throw InputError("variant '" + std::string(to_string(v)) + "' was not evaluated");
  }
};

/// Runs instances seed0 .. seed0+n-1 and evaluates every variant on the same
/// simulated instances. dRMSE and MAE pool all package errors.
inline ExperimentResult run_experiment(const ScenarioSpec& spec, std::span<const Variant> variants,
                                       std::size_t n_instances, std::uint64_t seed0) {
  if (n_instances == 0) throw InputError("need at least one instance");
  if (variants.empty()) throw InputError("need at least one variant");
  ExperimentResult res;
  res.scenario = spec.name;
  res.instances = n_instances;
  res.seed0 = seed0;
  res.route_length = spec.route_length();
  std::vector<std::vector<double>> pooled(variants.size());
  for (auto v : variants) res.rows.push_back(VariantResult{v, {}, 0.0, 0.0, 0.0, 0, 0});
  for (std::size_t i = 0; i < n_instances; ++i) {
    const auto inst = run_instance(spec, seed0 + i);
    if (inst.truncated) ++res.truncated;
    for (std::size_t k = 0; k < variants.size(); ++k) {
      BackendState state(spec.graph, variants[k]);
      for (const auto& ins : spec.insertions) state.insertions[ins.node] = ins.start;
      const auto result = run_pipeline(state, inst.batches);
      const auto score = score_instance(spec.graph, inst, result);
      auto& row = res.rows[k];
      std::vector<double> errs;
      errs.reserve(score.errors.size());
      for (const auto& e : score.errors) errs.push_back(e.error);
      row.irmse.push_back(errs.empty() ? std::numeric_limits<double>::quiet_NaN() : rmse(errs));
      row.localized += errs.size();
      row.unlocalized += score.unlocalized;
      pooled[k].insert(pooled[k].end(), errs.begin(), errs.end());
    }
  }
  for (std::size_t k = 0; k < variants.size(); ++k) {
    auto& row = res.rows[k];
    if (pooled[k].empty()) {
      row.drmse = row.mae = row.mae_percent = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    row.drmse = rmse(pooled[k]);
    row.mae = mae(pooled[k]);
    row.mae_percent = normalized_mae(row.mae, res.route_length);
  }
  return res;
}

inline std::string experiment_csv(const ExperimentResult& r) {
  std::string out =
      "scenario,variant,instances,seed0,drmse,mae,mae_pct,min_irmse,max_irmse,localized,unlocalized,coverage\n";
  for (const auto& row : r.rows) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double x : row.irmse)
      if (!std::isnan(x)) lo = std::min(lo, x), hi = std::max(hi, x);
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", r.scenario, to_string(row.variant), r.instances,
                       r.seed0, format_number(row.drmse), format_number(row.mae), format_number(row.mae_percent),
                       format_number(lo), format_number(hi), row.localized, row.unlocalized,
                       format_number(row.coverage()));
  }
  return out;
}

/// One line per instance and variant: the raw iRMSE values.
inline std::string irmse_csv(const ExperimentResult& r) {
  std::string out = "scenario,variant,instance,seed,irmse\n";
  for (const auto& row : r.rows)
    for (std::size_t i = 0; i < row.irmse.size(); ++i)
      out += fmt::format("{},{},{},{},{}\n", r.scenario, to_string(row.variant), i, r.seed0 + i,
                         format_number(row.irmse[i]));
  return out;
}

/// Human-readable results table: one row per scenario, one column per method.
inline std::string format_table(std::span<const ExperimentResult> results) {
  std::string out = fmt::format("{:<12}", "");
  for (auto v : kAllVariants) out += fmt::format("{:>12}", to_string(v));
  out += '\n';
  for (const auto& r : results) {
    out += fmt::format("{:<12}", r.scenario);
    for (auto v : kAllVariants) {
      auto it = std::find_if(r.rows.begin(), r.rows.end(), [&](const VariantResult& row) { return row.variant == v; });
      out += it == r.rows.end() ? fmt::format("{:>12}", "-") : fmt::format("{:>12.2f}", it->drmse);
    }
    out += '\n';
  }
  return out;
}

}  // namespace gral
