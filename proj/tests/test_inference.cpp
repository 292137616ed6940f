#include <gtest/gtest.h>

#include <random>

#include "cora/inference.hpp"
#include "oracles.hpp"

using namespace cora;

namespace {

CausalModel load(const std::string& name) {
    auto parsed = parse_model(cora::testing::read_text(cora::testing::data_dir() / "models" / (name + ".cora")));
    EXPECT_TRUE(parsed.ok()) << name;
    return *parsed.model;
}

bool contains(const std::string& text, const std::string& needle) { return text.find(needle) != std::string::npos; }

}  // namespace

TEST(Netting, ThresholdsOnShares) {
    EXPECT_EQ(net_pressures(0, 0, 0.05, false), Trend::steady);
    EXPECT_EQ(net_pressures(0, 0, 0.05, true), Trend::ambiguous);
    EXPECT_EQ(net_pressures(1, 0, 0.05, false), Trend::increasing);
    EXPECT_EQ(net_pressures(0, 2, 0.05, false), Trend::decreasing);
    EXPECT_EQ(net_pressures(0.52, 0.48, 0.05, false), Trend::ambiguous);
    EXPECT_EQ(net_pressures(0.56, 0.44, 0.05, false), Trend::increasing);
    // scale free
    EXPECT_EQ(net_pressures(5.6, 4.4, 0.05, false), Trend::increasing);
    EXPECT_EQ(net_pressures(0.1, 0.9, 0.05, true), Trend::decreasing);
}

TEST(Inference, DiamondNetsDownward) {
    auto r = infer(load("diamond"));
    ASSERT_EQ(r.paths.size(), 2u);
    EXPECT_EQ(r.paths[0].sign, Sign::negative);
    EXPECT_NEAR(r.paths[0].strength, 0.81, 1e-12);
    EXPECT_EQ(r.paths[0].hops, (std::vector<EdgeId>{"e3", "e4"}));
    EXPECT_EQ(r.paths[1].sign, Sign::positive);
    EXPECT_NEAR(r.paths[1].strength, 0.40, 1e-12);
    EXPECT_NEAR(r.verdict.upward_mass, 0.40, 1e-12);
    EXPECT_NEAR(r.verdict.downward_mass, 0.81, 1e-12);
    EXPECT_NEAR(r.verdict.upward_mass / (r.verdict.upward_mass + r.verdict.downward_mass), 0.331, 1e-3);
    EXPECT_EQ(r.verdict.direction, Trend::decreasing);
    EXPECT_TRUE(contains(r.explanation, "likely decreasing"));
    EXPECT_TRUE(contains(r.explanation, "Upward pressures:"));
    EXPECT_TRUE(contains(r.explanation, "Downward pressures:"));
}

TEST(Inference, DecreasingSourceFlipsSigns) {
    // decreasing rates through an inverse hop push investment up
    auto m = load("decreasing_source");
    auto r = infer(m);
    ASSERT_EQ(r.paths.size(), 1u);
    EXPECT_EQ(r.paths[0].sign, Sign::positive);
    m.scenario->assumptions[0].value = AssumedValue::increasing;
    EXPECT_EQ(infer(m).paths[0].sign, Sign::negative);
}

TEST(Inference, PathLengthBoundAndCycles) {
    auto m = load("long_chain");
    InferenceParams p;
    p.max_path_len = 2;
    auto short_only = infer(m, p);
    ASSERT_EQ(short_only.paths.size(), 1u);
    EXPECT_EQ(short_only.paths[0].hops.size(), 1u);
    EXPECT_EQ(short_only.verdict.direction, Trend::decreasing);
    p.max_path_len = 6;
    EXPECT_EQ(infer(m, p).paths.size(), 1u);
    p.max_path_len = 7;
    auto full = infer(m, p);
    ASSERT_EQ(full.paths.size(), 2u);
    EXPECT_EQ(full.verdict.direction, Trend::increasing);
    auto cyc = infer(load("cycle"));
    for (const auto& path : cyc.paths) {
        std::set<EdgeId> unique(path.hops.begin(), path.hops.end());
        EXPECT_EQ(unique.size(), path.hops.size());
    }
}

TEST(Inference, AssumedNodesBlockInteriorHops) {
    auto m = load("clamped_blocker");
    auto r = infer(m);
    auto want = cora::testing::oracle_infer(m, 0.05, 6);
    EXPECT_EQ(cora::testing::compare_with_oracle(r, want), "");
    for (const auto& path : r.paths)
        for (std::size_t i = 0; i + 1 < path.hops.size(); ++i) {
            const auto& interior = m.find_edge(path.hops[i])->target;
            EXPECT_EQ(m.scenario->find(interior), nullptr) << interior;
        }
}

TEST(Inference, NoPathsIsSteadyWithNote) {
    auto r = infer(load("no_paths"));
    EXPECT_TRUE(r.paths.empty());
    EXPECT_EQ(r.verdict.direction, Trend::steady);
    EXPECT_TRUE(contains(r.explanation, "No causal paths"));
}

TEST(Inference, MissingScenarioAndBadParamsThrow) {
    EXPECT_THROW(infer(load("no_scenario")), InvalidArgument);
    InferenceParams p;
    p.tau = -0.1;
    EXPECT_THROW(infer(load("diamond"), p), InvalidArgument);
    p.tau = 0.05;
    p.max_path_len = 0;
    EXPECT_THROW(infer(load("diamond"), p), InvalidArgument);
    auto broken = load("diamond");
    broken.edges[0].weight = 2.0;
    EXPECT_THROW(infer(broken), InvalidArgument);
}

TEST(Inference, MutexConflictIsReportedAndNotSteady) {
    auto m = load("mutex_conflict");
    auto r = infer(m);
    ASSERT_EQ(r.contradictions.size(), 1u);
    EXPECT_EQ(r.contradictions[0].members, (std::vector<NodeId>{"s2", "s3"}));
    EXPECT_NE(r.verdict.direction, Trend::steady);
    EXPECT_TRUE(contains(r.explanation, "Contradiction:"));
    EXPECT_EQ(cora::testing::compare_with_oracle(r, cora::testing::oracle_infer(m, 0.05, 6)), "");
    EXPECT_EQ(check_consistency(m), r.contradictions);
}

TEST(Inference, ThreeWayMutexMatchesOracle) {
    auto m = load("three_way_mutex");
    EXPECT_EQ(cora::testing::compare_with_oracle(infer(m), cora::testing::oracle_infer(m, 0.05, 6)), "");
}

TEST(Inference, FixturesMatchOracle) {
    for (const char* name : {"diamond", "single_edge", "parallel_edges", "bond_yields", "cycle", "trigger_chain",
                             "decreasing_source", "irak4", "target_assumed", "state_target", "long_chain",
                             "steady_assumption", "mixed", "custom_ids", "unevidenced"}) {
        auto m = load(name);
        EXPECT_EQ(cora::testing::compare_with_oracle(infer(m), cora::testing::oracle_infer(m, 0.05, 6)), "") << name;
    }
}

TEST(Inference, RandomModelsMatchOracle) {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 150; ++i) {
        auto m = cora::testing::random_model(rng);
        EXPECT_EQ(cora::testing::compare_with_oracle(infer(m), cora::testing::oracle_infer(m, 0.05, 6)), "") << serialize_model(m);
    }
}

TEST(Inference, DeterministicAndJsonRoundTrip) {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 50; ++i) {
        auto m = cora::testing::random_model(rng);
        auto a = infer(m);
        auto b = infer(m);
        EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
        EXPECT_EQ(inference_result_from_json(to_json(a)), a);
    }
}

TEST(Explain, TopKTruncates) {
    auto m = load("diamond");
    auto r = infer(m);
    auto none = explain(m, r, 0);
    EXPECT_TRUE(contains(none, "... and 1 more"));
    auto text = explain(m, r, 1);
    EXPECT_FALSE(contains(text, "more"));
    EXPECT_TRUE(contains(text, "\"A\" --[e3: direct, w=0.90; no evidence]--> \"C\""));
}

TEST(Inference, SingleEdge) {
    auto r = infer(load("single_edge"));
    ASSERT_EQ(r.paths.size(), 1u);
    EXPECT_NEAR(r.paths[0].strength, 0.7, 1e-12);
    EXPECT_NEAR(r.verdict.upward_mass, 0.7, 1e-12);
    EXPECT_EQ(r.verdict.downward_mass, 0.0);
    EXPECT_EQ(r.verdict.direction, Trend::increasing);
}

TEST(Inference, ParallelOpposingEdgesAreAmbiguous) {
    auto r = infer(load("parallel_edges"));
    EXPECT_NEAR(r.verdict.upward_mass, 0.6, 1e-12);
    EXPECT_NEAR(r.verdict.downward_mass, 0.6, 1e-12);
    EXPECT_EQ(r.verdict.direction, Trend::ambiguous);
}

TEST(Inference, NoPathsExplanationIsOneSentence) {
    auto r = infer(load("no_paths"));
    EXPECT_EQ(r.explanation, "No causal paths found from the assumed factors to the target.");
    bool noted = false;
    for (const auto& n : r.notes) noted |= contains(n, "no connecting paths");
    EXPECT_TRUE(noted);
}

TEST(Inference, AssumedStatesInMutexCarryAssumptionChains) {
    auto m = load("mutex_conflict");
    auto c = check_consistency(m);
    ASSERT_EQ(c.size(), 1u);
    ASSERT_EQ(c[0].chains.size(), 2u);
    const auto& s2 = c[0].chains[0];
    const auto& s3 = c[0].chains[1];
    EXPECT_EQ(s2.member, "s2");
    EXPECT_TRUE(s2.assumed);
    EXPECT_EQ(s3.member, "s3");
    EXPECT_EQ(s3.origin, "s1");
    ASSERT_EQ(s3.triggers.size(), 1u);
    EXPECT_EQ(m.find_edge(s3.triggers[0])->source, "s1");

    CausalModel both = m;
    both.scenario->assumptions = {{"s2", AssumedValue::active}, {"s3", AssumedValue::active}};
    auto direct = check_consistency(both);
    ASSERT_EQ(direct.size(), 1u);
    EXPECT_TRUE(direct[0].chains[0].assumed && direct[0].chains[1].assumed);
    both.mutexes.clear();
    EXPECT_TRUE(check_consistency(both).empty());
}

TEST(Explain, DiamondListsBothGroups) {
    auto m = load("diamond");
    auto text = explain(m, infer(m), 2);
    const auto up = text.find("Upward pressures:");
    const auto down = text.find("Downward pressures:");
    ASSERT_NE(up, std::string::npos);
    ASSERT_NE(down, std::string::npos);
    EXPECT_NE(text.find("--[e4: inverse, w=0.90; no evidence]--> \"T\" (strength 0.810)", down), std::string::npos);
    EXPECT_NE(text.find("--[e2: direct, w=0.50; no evidence]--> \"T\" (strength 0.400)", up), std::string::npos);
    EXPECT_LT(text.find("e2:"), down);
}
