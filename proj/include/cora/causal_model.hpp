#pragma once
// The executable causal model: Quantities and States joined by Influences
// and Triggers, mutual-exclusion constraints over States, and an optional
// Scenario (assumptions plus a query target).

#include <optional>
#include <string>
#include <vector>

#include "cora/lexicon.hpp"
#include "json.hpp"

namespace cora {

using NodeId = std::string;  // always the normalized node label
using EdgeId = std::string;

enum class NodeKind { quantity, state };

struct Node {
    NodeId id;
    std::string label;
    NodeKind kind = NodeKind::quantity;
    std::optional<std::string> concept_type;
    std::optional<NodeId> linked_quantity;  // states only; metadata

    friend bool operator==(const Node&, const Node&) = default;
};

struct Evidence {
    std::string doc_id;
    std::string passage;

    friend bool operator==(const Evidence&, const Evidence&) = default;
    friend auto operator<=>(const Evidence&, const Evidence&) = default;
};

struct Edge {
    EdgeId id;
    NodeId source;
    NodeId target;
    EdgeKind kind = EdgeKind::influence;
    Polarity polarity = Polarity::direct;           // influences
    TriggerEffect effect = TriggerEffect::activate;  // triggers
    double weight = 0.5;
    std::vector<Evidence> evidence;
    // Kept from a template without supporting KB events.
    bool unevidenced = false;

    friend bool operator==(const Edge&, const Edge&) = default;
};

struct MutexConstraint {
    std::vector<NodeId> members;

    friend bool operator==(const MutexConstraint&, const MutexConstraint&) = default;
};

enum class AssumedValue { active, increasing, decreasing, steady };

struct Assumption {
    NodeId node;
    AssumedValue value = AssumedValue::active;

    friend bool operator==(const Assumption&, const Assumption&) = default;
};

struct Scenario {
    std::vector<Assumption> assumptions;
    NodeId target;

    const Assumption* find(const NodeId& node) const;
    friend bool operator==(const Scenario&, const Scenario&) = default;
};

inline constexpr double kDefaultEdgeWeight = 0.5;

struct CausalModel {
    std::vector<Node> nodes;
    std::vector<Edge> edges;
    std::vector<MutexConstraint> mutexes;
    std::optional<Scenario> scenario;
    nlohmann::json provenance = nlohmann::json::object();

    const Node* find_node(const NodeId& id) const;
    const Edge* find_edge(const EdgeId& id) const;
    Edge* find_edge(const EdgeId& id);
    bool empty() const { return nodes.empty() && edges.empty() && mutexes.empty() && !scenario; }
};

struct Issue {
    std::string element;  // offending node/edge/constraint, e.g. "edge e3"
    std::string message;

    std::string to_string() const { return element + ": " + message; }
    friend bool operator==(const Issue&, const Issue&) = default;
};

// Empty iff every type invariant holds.
std::vector<Issue> validate(const CausalModel& model);

// Sorted nodes (by id), edges (natural edge-id order), mutex members and
// mutexes, and assumptions (by node).
CausalModel canonicalize(CausalModel model);

// Equality of canonical forms; provenance metadata is not compared.
bool structurally_equal(const CausalModel& a, const CausalModel& b);

std::string to_string(NodeKind kind);
std::string to_string(AssumedValue value);
NodeKind node_kind_from_string(std::string_view text);
AssumedValue assumed_value_from_string(std::string_view text);

// ---- MapDocument JSON

nlohmann::json to_json(const CausalModel& model);
// Throws SchemaError naming the JSON path of the first violation. Performs
// schema checks only; run validate() for referential integrity.
CausalModel from_json(const nlohmann::json& doc);

nlohmann::json edge_to_json(const Edge& edge);
Edge edge_from_json(const nlohmann::json& doc, const std::string& path);
nlohmann::json node_to_json(const Node& node);
Node node_from_json(const nlohmann::json& doc, const std::string& path);

// ---- structured-English DSL

struct ParseError {
    std::size_t line = 0;
    std::size_t column = 0;
    std::string message;

    std::string to_string() const;
};

struct ParseResult {
    std::optional<CausalModel> model;
    std::vector<ParseError> errors;

    bool ok() const { return model.has_value(); }
};

// Total over arbitrary input: never throws.
ParseResult parse_model(std::string_view text);

// Deterministic text; parse_model(serialize_model(m)) is structurally equal to m.
std::string serialize_model(const CausalModel& model);

}  // namespace cora
