#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "support.hpp"

using namespace gral;
using gral::testing::make_package;
using gral::testing::strength_run;

namespace {

constexpr double kNone = -1.0;

std::vector<EpochType> types(const EpochSet& set) {
  std::vector<EpochType> out;
  for (const auto& e : set.epochs) out.push_back(e.type);
  return out;
}

std::vector<Package> flatten(const EpochSet& set) {
  std::vector<Package> out;
  for (const auto& e : set.epochs) out.insert(out.end(), e.packages.begin(), e.packages.end());
  return out;
}

Epoch epoch_of(EpochType type, std::vector<Package> ps, std::optional<std::string> anchor) {
  Epoch e;
  e.type = type;
  e.packages = std::move(ps);
  e.anchor_gateway = std::move(anchor);
  return e;
}

// Small chain with integer geometry: a(gA) -- 10 -- b(gB) -- 10 -- c(gC), radius 3.
EnvironmentGraph small_chain() {
  return EnvironmentGraph::build(
      {{"a", GatewaySpec{"gA", 3.0}}, {"b", GatewaySpec{"gB", 3.0}}, {"c", GatewaySpec{"gC", 3.0}}},
      {{"a", "b", 10.0}, {"b", "c", 10.0}}, "c");
}

// A node moving exactly 2 units per tick from a to c on small_chain().
std::vector<Package> small_chain_stream() {
  const std::vector<std::pair<std::string, double>> heard = {
      {"gA", 3}, {"gA", 1}, {"", 0}, {"", 0}, {"gB", 1}, {"gB", 3}, {"gB", 1}, {"", 0}, {"", 0}, {"gC", 1}, {"gC", 3}};
  std::vector<Package> out;
  for (std::size_t i = 0; i < heard.size(); ++i) {
    std::vector<GatewayObservation> obs;
    if (!heard[i].first.empty()) obs.push_back({heard[i].first, heard[i].second});
    out.push_back(make_package(1, i, static_cast<double>(i), obs));
  }
  return out;
}

// Random stream over gateways gA..gC: stretches of silence and of one
// gateway with random strengths, occasionally a second weaker gateway.
std::vector<Package> random_stream(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> pick(0, 3);
  std::uniform_int_distribution<int> level(0, 4);
  std::uniform_int_distribution<int> run(1, 6);
  std::vector<Package> out;
  std::uint64_t seq = 0;
  while (out.size() < n) {
    const int g = pick(rng);
    const int len = run(rng);
    for (int k = 0; k < len && out.size() < n; ++k, ++seq) {
      std::vector<GatewayObservation> obs;
      if (g > 0) {
        obs.push_back({"g" + std::string(1, static_cast<char>('A' + g - 1)), 1.0 + level(rng)});
        if (level(rng) == 0) obs.push_back({"gZ", 0.5});
      }
      out.push_back(make_package(1, seq, static_cast<double>(seq), obs));
    }
  }
  return out;
}

}  // namespace

TEST(Classify, Cases) {
  EXPECT_EQ(classify(strength_run(1, "gA", {kNone, kNone, kNone})), EpochType::nu);
  EXPECT_EQ(classify(strength_run(1, "gA", {1.0})), EpochType::alpha);
  EXPECT_EQ(classify(strength_run(1, "gA", {1.0, 2.0, 3.0})), EpochType::alpha);
  EXPECT_EQ(classify(strength_run(1, "gA", {3.0, 2.0, 2.0, 1.0})), EpochType::omega);
  EXPECT_EQ(classify(strength_run(1, "gA", {2.0, 2.0})), EpochType::omega);
  EXPECT_EQ(classify(strength_run(1, "gA", {1.0, 3.0, 2.0})), std::nullopt);
  EXPECT_EQ(classify(strength_run(1, "gA", {1.0, kNone, 2.0})), std::nullopt);
  auto mixed = strength_run(1, "gA", {1.0, 2.0});
  mixed[1].observations = {{"gB", 3.0}};
  EXPECT_EQ(classify(mixed), std::nullopt);
  EXPECT_EQ(classify(std::vector<Package>{}), std::nullopt);
}

TEST(Integrate, FirstPackageOpensAlpha) {
  const auto set = integrate(EpochSet{1, {}}, make_package(1, 0, 0.0, {{"gA", 1.0}}));
  ASSERT_EQ(set.epochs.size(), 1u);
  EXPECT_EQ(set.epochs[0].type, EpochType::alpha);
  EXPECT_EQ(set.epochs[0].anchor_gateway, "gA");
}

TEST(Integrate, DropAfterRiseOpensOmega) {
  const auto set = build_epochs(1, strength_run(1, "gA", {1.0, 2.0, 3.0, 1.5, 1.0}));
  EXPECT_EQ(types(set), (std::vector<EpochType>{EpochType::alpha, EpochType::omega}));
  EXPECT_EQ(set.epochs[0].packages.size(), 3u);
  EXPECT_EQ(set.epochs[1].packages.size(), 2u);
  EXPECT_EQ(set.epochs[1].anchor_gateway, "gA");
}

TEST(Integrate, CoalescesWhenGatewayReappearsAfterSilence) {
  const auto set = build_epochs(1, strength_run(1, "gA", {2.0, 1.0, kNone, kNone, 0.5}));
  ASSERT_EQ(set.epochs.size(), 1u);
  EXPECT_TRUE(set.epochs[0].coalesced);
  EXPECT_EQ(set.epochs[0].anchor_gateway, "gA");
  EXPECT_EQ(set.epochs[0].packages.size(), 5u);
  EXPECT_EQ(set.epochs[0].type, EpochType::omega);
}

TEST(Integrate, DifferentGatewayAfterSilenceDoesNotCoalesce) {
  auto ps = strength_run(1, "gA", {2.0, 1.0, kNone, kNone, 0.5});
  ps[4].observations = {{"gB", 0.5}};
  const auto set = build_epochs(1, ps);
  EXPECT_EQ(types(set), (std::vector<EpochType>{EpochType::omega, EpochType::nu, EpochType::alpha}));
  EXPECT_EQ(set.epochs[2].anchor_gateway, "gB");
}

TEST(Integrate, RejectsOutOfOrderPackages) {
  auto set = build_epochs(1, strength_run(1, "gA", {1.0, 2.0}));
  EXPECT_THROW(integrate_into(set, make_package(1, 1, 5.0)), InputError);
  EXPECT_THROW(integrate_into(set, make_package(1, 9, 0.5)), InputError);
  EXPECT_THROW(integrate_into(set, make_package(2, 9, 9.0)), InputError);
}

TEST(MergeSameGateway, CollapsesJitterUnderOneGateway) {
  const auto ps = strength_run(1, "gA", {1.0, 2.0, 1.0, 2.0, 1.0});
  // Integration re-labels the lone omega package as alpha once the next one rises.
  const auto raw = build_epochs(1, ps);
  ASSERT_EQ(types(raw), (std::vector<EpochType>{EpochType::alpha, EpochType::alpha, EpochType::omega}));
  const auto merged = merge_same_gateway(raw);
  ASSERT_EQ(merged.epochs.size(), 1u);
  EXPECT_EQ(merged.epochs[0].anchor_gateway, "gA");
  EXPECT_EQ(merged.epochs[0].packages, ps);
  EXPECT_EQ(merged.epochs[0].type, EpochType::omega);

  EpochSet jitter{1,
                  {epoch_of(EpochType::alpha, {ps[0], ps[1]}, "gA"), epoch_of(EpochType::omega, {ps[2]}, "gA"),
                   epoch_of(EpochType::alpha, {ps[3]}, "gA"), epoch_of(EpochType::omega, {ps[4]}, "gA")}};
  const auto single = merge_same_gateway(jitter);
  ASSERT_EQ(single.epochs.size(), 1u);
  EXPECT_EQ(single.epochs[0].packages, ps);
  EXPECT_TRUE(single.epochs[0].coalesced);
}

TEST(MergeSameGateway, StopsAtAnotherGateway) {
  const auto ps = strength_run(1, "gA", {1.0, 2.0, 1.0, 1.0, 2.0});
  EpochSet set{1,
               {epoch_of(EpochType::alpha, {ps[0], ps[1]}, "gA"), epoch_of(EpochType::omega, {ps[2]}, "gA"),
                epoch_of(EpochType::alpha, {make_package(1, 3, 3.0, {{"gB", 1.0}}), make_package(1, 4, 4.0, {{"gB", 2.0}})},
                         "gB")}};
  const auto merged = merge_same_gateway(set);
  ASSERT_EQ(merged.epochs.size(), 2u);
  EXPECT_EQ(merged.epochs[0].packages.size(), 3u);
  EXPECT_EQ(merged.epochs[1].anchor_gateway, "gB");
}

TEST(MergeSameGateway, RunEndsWhereASecondGatewayIsHeard) {
  auto ps = strength_run(1, "gA", {1.0, 2.0, 1.0, 2.0});
  ps[2].observations.push_back({"gB", 0.5});
  sort_observations(ps[2]);
  EpochSet set{1,
               {epoch_of(EpochType::alpha, {ps[0], ps[1]}, "gA"), epoch_of(EpochType::omega, {ps[2]}, "gA"),
                epoch_of(EpochType::alpha, {ps[3]}, "gA")}};
  EXPECT_EQ(merge_same_gateway(set).epochs.size(), 3u);
}

TEST(MergeSameGateway, LeavesNuAlone) {
  const auto set = build_epochs(1, strength_run(1, "gA", {kNone, kNone}));
  const auto merged = merge_same_gateway(set);
  EXPECT_EQ(types(merged), (std::vector<EpochType>{EpochType::nu}));
  EXPECT_EQ(merged.epochs[0].packages.size(), 2u);
}

TEST(IsComplete, Cases) {
  Epoch e = epoch_of(EpochType::nu, strength_run(1, "gA", {kNone}), std::nullopt);
  EXPECT_FALSE(is_complete(e));
  e.final_pos = junction_position(0);
  EXPECT_FALSE(is_complete(e));
  e.start_pos = junction_position(0);
  EXPECT_TRUE(is_complete(e));
}

TEST(Resolve, AlphaFollowedByNuEndsAtGateway) {
  const auto g = gral::testing::chain_graph();
  const auto set = resolve_positions(build_epochs(1, strength_run(1, "gA", {1.0, 2.0, kNone})), g);
  ASSERT_EQ(set.epochs.size(), 2u);
  EXPECT_EQ(set.epochs[0].final_pos, junction_position(g.vertex("a")));
  EXPECT_EQ(set.epochs[1].start_pos, junction_position(g.vertex("a")));
}

TEST(Resolve, NuBeforeAlphaEndsAtEntryBorder) {
  const auto g = gral::testing::chain_graph();
  const double r = std::sqrt(10.0);
  auto ps = strength_run(1, "gA", {r, 1.0, kNone, kNone, 0.5, 1.5});
  ps[4].observations = {{"gB", 0.5}};
  ps[5].observations = {{"gB", 1.5}};
  const auto set = resolve_positions(merge_same_gateway(build_epochs(1, ps)), g);
  ASSERT_EQ(set.epochs.size(), 3u);
  ASSERT_TRUE(set.epochs[1].final_pos);
  const auto& border = *set.epochs[1].final_pos;
  EXPECT_EQ(border.from, g.vertex("a"));
  EXPECT_EQ(border.to, g.vertex("b"));
  EXPECT_NEAR(border.offset, 50.0 - r, 1e-12);
  EXPECT_NEAR(geodesic_distance(g, border, junction_position(g.vertex("b"))), r, 1e-12);
  // The gateway at the start was heard at full strength: the node starts on it.
  EXPECT_EQ(set.epochs[0].start_pos, junction_position(g.vertex("a")));
}

TEST(Resolve, LastAlphaCompletesOnlyAtMaximumStrength) {
  const auto g = gral::testing::chain_graph();
  const double r = std::sqrt(10.0);
  auto rising = resolve_positions(build_epochs(1, strength_run(1, "gC", {0.5, 1.5})), g);
  EXPECT_FALSE(rising.epochs.back().final_pos.has_value());
  auto arrived = resolve_positions(build_epochs(1, strength_run(1, "gC", {0.5, r})), g);
  EXPECT_EQ(arrived.epochs.back().final_pos, junction_position(g.vertex("c")));
}

TEST(Resolve, KeepsPresetPositions) {
  const auto g = gral::testing::chain_graph();
  auto set = build_epochs(1, strength_run(1, "gA", {1.0, 2.0, kNone}));
  const auto preset = position_on_link(g, g.vertex("a"), g.vertex("b"), 1.0);
  set.epochs[0].final_pos = preset;
  const auto resolved = resolve_positions(set, g);
  EXPECT_EQ(resolved.epochs[0].final_pos, preset);
  EXPECT_EQ(resolved.epochs[1].start_pos, preset);
}

TEST(Resolve, OmegaFollowedByNuEndsAtExitBorder) {
  const auto g = gral::testing::chain_graph();
  const double r = std::sqrt(10.0);
  const auto set = resolve_positions(build_epochs(1, strength_run(1, "gB", {r, 1.0, kNone})), g);
  ASSERT_TRUE(set.epochs[0].final_pos);
  EXPECT_NEAR(geodesic_distance(g, *set.epochs[0].final_pos, junction_position(g.vertex("b"))), r, 1e-12);
  EXPECT_LT(distance_to_root(g, *set.epochs[0].final_pos), 50.0);
}

TEST(Resolve, InsertionPointStartsTheFirstEpoch) {
  const auto g = gral::testing::chain_graph();
  const auto start = position_on_link(g, g.vertex("a"), g.vertex("b"), 10.0);
  ResolveOptions opts;
  opts.insertion = start;
  const auto set = resolve_positions(build_epochs(1, strength_run(1, "gA", {kNone, kNone})), g, opts);
  EXPECT_EQ(set.epochs[0].start_pos, start);
  EXPECT_FALSE(set.epochs[0].final_pos.has_value());
}

TEST(EpochDump, MatchesHandDerivedGolden) {
  std::ifstream in(std::string(GRAL_TEST_DATA) + "/chain_epochs.json");
  ASSERT_TRUE(in) << "missing golden file";
  const auto expected = nlohmann::json::parse(in);
  const auto g = small_chain();
  const auto set = resolve_positions(merge_same_gateway(build_epochs(1, small_chain_stream())), g);
  EXPECT_EQ(dump_epochs(set, g), expected);
}

TEST(EpochProperties, PartitionTypeSoundnessAndDeterminism) {
  std::mt19937_64 rng(31);
  const auto g = EnvironmentGraph::build({{"a", GatewaySpec{"gA", 5.0}}, {"b", GatewaySpec{"gB", 5.0}},
                                          {"c", GatewaySpec{"gC", 5.0}}, {"z", GatewaySpec{"gZ", 5.0}}},
                                         {{"a", "b", 20.0}, {"b", "c", 20.0}, {"z", "b", 20.0}}, "c");
  for (int trial = 0; trial < 300; ++trial) {
    const auto stream = random_stream(rng, 1 + trial % 60);
    EpochSet incremental{1, {}};
    for (std::size_t i = 0; i < stream.size(); ++i) {
      integrate_into(incremental, stream[i]);
      ASSERT_EQ(flatten(incremental), std::vector<Package>(stream.begin(), stream.begin() + static_cast<std::ptrdiff_t>(i + 1)));
    }
    const auto replay = build_epochs(1, stream);
    EXPECT_EQ(flatten(incremental), stream);
    EXPECT_EQ(dump_epochs(incremental, g), dump_epochs(replay, g));
    for (const auto& set : {incremental, merge_same_gateway(incremental)}) {
      EXPECT_EQ(flatten(set), stream);
      for (std::size_t k = 0; k < set.epochs.size(); ++k) {
        const auto& e = set.epochs[k];
        ASSERT_FALSE(e.packages.empty());
        if (k > 0) {
          EXPECT_LT(set.epochs[k - 1].first_time(), e.first_time());
        }
        if (e.type == EpochType::nu) {
          EXPECT_FALSE(e.anchor_gateway.has_value());
          if (!e.coalesced) {
            EXPECT_EQ(classify(e.packages), EpochType::nu);
          }
          continue;
        }
        ASSERT_TRUE(e.anchor_gateway.has_value());
        if (!e.coalesced) {
          const auto t = classify(e.packages);
          ASSERT_TRUE(t.has_value());
          // A lone package is vacuously both; integration may call it omega.
          if (e.packages.size() > 1) {
            EXPECT_EQ(*t, e.type);
          }
        }
        for (const auto& p : e.packages) {
          if (p.sees_gateway()) {
            EXPECT_EQ(strongest(p)->gateway, *e.anchor_gateway);
          }
        }
      }
    }
    const auto resolved = resolve_positions(merge_same_gateway(replay), g);
    for (std::size_t k = 0; k + 1 < resolved.epochs.size(); ++k) {
      const auto& cur = resolved.epochs[k];
      const auto& next = resolved.epochs[k + 1];
      if (cur.final_pos && next.start_pos) {
        EXPECT_EQ(*cur.final_pos, *next.start_pos);
      }
    }
  }
}

TEST(EpochProperties, MissingGatewayStillCompletesEndToEnd) {
  const auto spec = without_gateway(make_scenario(1), "g2");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = run_instance(spec, seed);
    const auto packages = inst.packages();
    const auto set = resolve_positions(merge_same_gateway(build_epochs(1, packages)), spec.graph);
    for (const auto& e : set.epochs) EXPECT_TRUE(is_complete(e)) << "seed " << seed;
    for (const auto& e : set.epochs) {
      if (e.anchor_gateway) {
        EXPECT_NE(*e.anchor_gateway, "g2");
      }
    }
  }
}
