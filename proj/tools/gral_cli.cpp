// Command-line front end: simulate instances, localize package streams and
// run multi-instance evaluations.
//
// Exit codes: 0 success, 1 input error, 2 internal invariant violation.

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gral/gral.hpp"

namespace {

std::vector<gral::Variant> parse_variant_list(const std::string& list) {
  std::vector<gral::Variant> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(gral::parse_variant(item));
  if (out.empty()) throw gral::InputError("empty variant list");
  return out;
}

void simulate(const std::string& scenario, std::uint64_t seed, const std::string& out_dir) {
  const auto spec = gral::load_scenario(scenario);
  const auto inst = gral::run_instance(spec, seed);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  gral::write_file((dir / "packages.jsonl").string(), gral::serialize_package_stream(inst.packages()));
  gral::write_file((dir / "ground_truth.csv").string(), gral::ground_truth_csv(spec.graph, inst.ground_truth));
  gral::write_file((dir / "graph.json").string(), gral::graph_to_json(spec.graph).dump(2) + "\n");
  gral::write_file((dir / "scenario.json").string(), gral::scenario_to_json(spec).dump(2) + "\n");
  std::cout << spec.name << " seed " << seed << ": " << inst.batches.size() << " batches, "
            << inst.ground_truth.size() << " packages recorded, " << inst.unsent << " unsent"
            << (inst.truncated ? " (truncated at max_ticks)" : "") << '\n';
}

void localize(const std::string& variant, const std::string& graph_path, const std::string& packages_path,
              const std::string& out_path, const std::string& epochs_path, const std::string& scenario) {
  const auto v = gral::parse_variant(variant);
  const auto graph = gral::load_graph(graph_path);
  const auto packages = gral::parse_package_stream(gral::read_file(packages_path));
  const auto batches = gral::batches_from_stream(packages);
  gral::BackendState state(graph, v);
  if (!scenario.empty()) {
    const auto spec = gral::load_scenario(scenario);
    const auto& sg = spec.graph;
    for (const auto& ins : spec.insertions)
      state.insertions[ins.node] = gral::make_position(graph, graph.vertex(sg.name(ins.start.from)),
                                                       graph.vertex(sg.name(ins.start.to)), ins.start.offset);
  }
  const auto result = gral::run_pipeline(state, batches);
  gral::write_file(out_path, gral::localized_csv(graph, result));
  if (!epochs_path.empty()) {
    nlohmann::json dump = nlohmann::json::array();
    for (const auto& [node, set] : state.resolved) dump.push_back(gral::dump_epochs(set, graph));
    gral::write_file(epochs_path, dump.dump(2) + "\n");
  }
  std::size_t n = 0;
  for (const auto& [node, ms] : result) n += ms.size();
  std::cout << "localized " << n << " of " << packages.size() << " packages\n";
}

void evaluate(const std::string& scenario, std::size_t instances, std::uint64_t seed0, const std::string& variants,
              const std::string& out_path, const std::string& irmse_path) {
  const auto spec = gral::load_scenario(scenario);
  const auto vs = parse_variant_list(variants);
  const auto result = gral::run_experiment(spec, vs, instances, seed0);
  gral::write_file(out_path, gral::experiment_csv(result));
  if (!irmse_path.empty()) gral::write_file(irmse_path, gral::irmse_csv(result));
  std::cout << "dRMSE over " << instances << " instances (route length " << result.route_length << ")\n"
            << gral::format_table(std::span(&result, 1));
  for (const auto& row : result.rows)
    std::cout << gral::to_string(row.variant) << ": MAE " << row.mae << " (" << row.mae_percent << "% of route), coverage "
              << row.coverage() * 100.0 << "%\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Range-free localization of drifting sensor nodes in tree-shaped pipe networks"};
  app.set_version_flag("--version", std::string(gral::kVersion));
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Print warnings to stderr");

  std::string scenario, out, variant, graph, packages, epochs, variants = "baseline,gral", irmse_out;
  std::uint64_t seed = 0, seed0 = 0;
  std::size_t instances = 200;

  auto* sim = app.add_subcommand("simulate", "Simulate one seeded instance");
  sim->add_option("--scenario", scenario, "Scenario 1..4 or a scenario JSON file")->required();
  sim->add_option("--seed", seed, "RNG seed")->required();
  sim->add_option("--out", out, "Output directory")->required();

  auto* loc = app.add_subcommand("localize", "Localize a package stream");
  loc->add_option("--variant", variant, "baseline, gral, gral+cp, gral+pr or gral+cp+pr")->required();
  loc->add_option("--graph", graph, "Graph JSON file")->required();
  loc->add_option("--packages", packages, "Package stream (JSON lines)")->required();
  loc->add_option("--out", out, "Localized CSV output")->required();
  loc->add_option("--dump-epochs", epochs, "Write the resolved epochs as JSON");
  loc->add_option("--scenario", scenario, "Scenario 1..4 or file; supplies the node insertion points");

  auto* eval = app.add_subcommand("evaluate", "Compare localization methods over many instances");
  eval->add_option("--scenario", scenario, "Scenario 1..4 or a scenario JSON file")->required();
  eval->add_option("--instances", instances, "Number of instances")->check(CLI::PositiveNumber);
  eval->add_option("--seed0", seed0, "Seed of the first instance");
  eval->add_option("--variants", variants, "Comma-separated methods");
  eval->add_option("--out", out, "Summary CSV output")->required();
  eval->add_option("--irmse-out", irmse_out, "Per-instance iRMSE CSV output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  gral::diag::set_verbose(verbose);
  try {
    if (*sim) simulate(scenario, seed, out);
    if (*loc) localize(variant, graph, packages, out, epochs, scenario);
    if (*eval) evaluate(scenario, instances, seed0, variants, out, irmse_out);
  } catch (const gral::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::logic_error& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
