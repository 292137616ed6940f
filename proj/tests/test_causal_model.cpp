#include <gtest/gtest.h>

#include <random>

#include "cora/causal_model.hpp"
#include "cora/errors.hpp"
#include "oracles.hpp"

using namespace cora;
using nlohmann::json;

namespace {

CausalModel load(const std::string& name) {
    auto parsed = parse_model(cora::testing::read_text(cora::testing::data_dir() / "models" / (name + ".cora")));
    EXPECT_TRUE(parsed.ok()) << name;
    return *parsed.model;
}

bool has_issue(const std::vector<Issue>& issues, const std::string& element, const std::string& message) {
    for (const auto& i : issues)
        if (i.element == element && i.message == message) return true;
    return false;
}

}  // namespace

TEST(Validate, FixturesAreValid) {
    for (const char* name : {"diamond", "bond_yields", "mutex_conflict", "irak4", "mixed"})
        EXPECT_TRUE(validate(load(name)).empty()) << name;
}

TEST(Validate, ReportsEachBrokenInvariant) {
    auto m = load("diamond");
    m.edges[0].weight = 0.0;
    m.edges[1].target = "missing";
    m.nodes.push_back(Node{"s", "S", NodeKind::state});
    m.edges.push_back(Edge{"e9", "s", "a", EdgeKind::influence});
    m.mutexes.push_back({{"s"}});
    auto issues = validate(m);
    EXPECT_TRUE(has_issue(issues, "edge e1", "weight out of range (0,1]"));
    EXPECT_TRUE(has_issue(issues, "edge e2", "unknown target node \"missing\""));
    EXPECT_TRUE(has_issue(issues, "edge e9", "influence endpoints must be quantities"));
    EXPECT_EQ(issues.size(), 4u);
}

TEST(Validate, TriggerEffectMustMatchTargetKind) {
    auto m = load("trigger_chain");
    ASSERT_TRUE(validate(m).empty());
    for (auto& e : m.edges)
        if (e.kind == EdgeKind::trigger && e.effect == TriggerEffect::activate) {
            e.effect = TriggerEffect::increase;
            break;
        }
    auto issues = validate(m);
    ASSERT_FALSE(issues.empty());
    EXPECT_EQ(issues[0].message, "effect/target kind mismatch");
}

TEST(Validate, DuplicateIdsAndBadAssumptions) {
    auto m = load("diamond");
    m.edges[1].id = "e1";
    m.scenario->assumptions.push_back({"a", AssumedValue::active});
    auto issues = validate(m);
    EXPECT_TRUE(has_issue(issues, "edge e1", "duplicate edge id"));
    bool value_issue = false;
    for (const auto& i : issues) value_issue |= i.message.find("does not fit a quantity") != std::string::npos;
    EXPECT_TRUE(value_issue);
}

TEST(Json, SchemaErrorNamesThePath) {
    try {
        from_json(json{{"nodes", 3}, {"edges", json::array()}});
        FAIL() << "expected a schema error";
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("$.nodes"), std::string::npos) << e.what();
    }
    try {
        from_json(json{{"nodes", json::array({json{{"label", "A"}, {"kind", "liquid"}}})}, {"edges", json::array()}});
        FAIL() << "expected a schema error";
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("$.nodes[0]"), std::string::npos) << e.what();
    }
}

TEST(Json, RoundTripIsStructurallyEqual) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        auto m = cora::testing::random_model(rng);
        auto back = from_json(json::parse(to_json(m).dump()));
        EXPECT_TRUE(structurally_equal(m, back));
        EXPECT_EQ(to_json(back), to_json(m));
    }
}

TEST(Canonical, OrderDoesNotMatter) {
    auto m = load("bond_yields");
    auto shuffled = m;
    std::mt19937_64 rng(3);
    std::shuffle(shuffled.nodes.begin(), shuffled.nodes.end(), rng);
    std::shuffle(shuffled.edges.begin(), shuffled.edges.end(), rng);
    shuffled.provenance = json{{"origin", "elsewhere"}};
    EXPECT_TRUE(structurally_equal(m, shuffled));
    auto a = canonicalize(m);
    auto b = canonicalize(canonicalize(shuffled));
    EXPECT_EQ(a.nodes, b.nodes);
    EXPECT_EQ(a.edges, b.edges);
    shuffled.edges[0].weight = shuffled.edges[0].weight == 0.5 ? 0.6 : 0.5;
    EXPECT_FALSE(structurally_equal(m, shuffled));
}

TEST(Canonical, EdgeIdsSortNaturally) {
    CausalModel m;
    m.nodes = {{"a", "a"}, {"b", "b"}};
    m.edges = {{"e10", "a", "b"}, {"e2", "a", "b"}, {"e1", "b", "a"}};
    auto c = canonicalize(m);
    EXPECT_EQ(c.edges[0].id, "e1");
    EXPECT_EQ(c.edges[1].id, "e2");
    EXPECT_EQ(c.edges[2].id, "e10");
}

TEST(Json, NoScenarioIsNullAndRoundTrips) {
    auto m = load("no_scenario");
    auto doc = to_json(m);
    EXPECT_TRUE(doc["scenario"].is_null());
    EXPECT_TRUE(structurally_equal(from_json(doc), m));
    EXPECT_TRUE(to_json(CausalModel{})["nodes"].empty());
    try {
        from_json(json{{"edges", json::array()}});
        FAIL();
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.detail(), "$.nodes");
    }
}
