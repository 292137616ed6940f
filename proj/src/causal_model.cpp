#include "cora/causal_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "cora/errors.hpp"
#include "cora/text.hpp"

namespace cora {

using nlohmann::json;

const Assumption* Scenario::find(const NodeId& node) const {
    for (const auto& a : assumptions)
        if (a.node == node) return &a;
    return nullptr;
}

const Node* CausalModel::find_node(const NodeId& id) const {
    for (const auto& n : nodes)
        if (n.id == id) return &n;
    return nullptr;
}

const Edge* CausalModel::find_edge(const EdgeId& id) const {
    for (const auto& e : edges)
        if (e.id == id) return &e;
    return nullptr;
}

Edge* CausalModel::find_edge(const EdgeId& id) {
    for (auto& e : edges)
        if (e.id == id) return &e;
    return nullptr;
}

std::string to_string(NodeKind kind) { return kind == NodeKind::quantity ? "quantity" : "state"; }

std::string to_string(AssumedValue value) {
    switch (value) {
        case AssumedValue::active: return "active";
        case AssumedValue::increasing: return "increasing";
        case AssumedValue::decreasing: return "decreasing";
        case AssumedValue::steady: return "steady";
    }
    return "active";
}

NodeKind node_kind_from_string(std::string_view text) {
    if (text == "quantity") return NodeKind::quantity;
    if (text == "state") return NodeKind::state;
    throw InvalidArgument("unknown node kind '" + std::string(text) + "'");
}

AssumedValue assumed_value_from_string(std::string_view text) {
    if (text == "active") return AssumedValue::active;
    if (text == "increasing") return AssumedValue::increasing;
    if (text == "decreasing") return AssumedValue::decreasing;
    if (text == "steady") return AssumedValue::steady;
    throw InvalidArgument("unknown assumed value '" + std::string(text) + "'");
}

std::vector<Issue> validate(const CausalModel& model) {
    std::vector<Issue> issues;
    std::map<NodeId, const Node*> nodes;
    for (const auto& n : model.nodes) {
        const std::string element = "node \"" + n.id + "\"";
        if (n.id.empty()) issues.push_back({element, "empty node id"});
        if (normalize_label(n.label) != n.id)
            issues.push_back({element, "node id must equal the normalized label"});
        if (!nodes.emplace(n.id, &n).second) issues.push_back({element, "duplicate node id"});
    }
    auto kind_of = [&](const NodeId& id) -> std::optional<NodeKind> {
        auto it = nodes.find(id);
        if (it == nodes.end()) return std::nullopt;
        return it->second->kind;
    };
    for (const auto& n : model.nodes) {
        if (!n.linked_quantity) continue;
        const std::string element = "node \"" + n.id + "\"";
        if (n.kind != NodeKind::state)
            issues.push_back({element, "only states may link a quantity"});
        else if (kind_of(*n.linked_quantity) != NodeKind::quantity)
            issues.push_back({element, "linked quantity \"" + *n.linked_quantity + "\" is not a quantity"});
    }

    std::set<EdgeId> edge_ids;
    for (const auto& e : model.edges) {
        const std::string element = "edge " + e.id;
        if (e.id.empty()) issues.push_back({element, "empty edge id"});
        if (!edge_ids.insert(e.id).second) issues.push_back({element, "duplicate edge id"});
        if (!(e.weight > 0.0 && e.weight <= 1.0)) issues.push_back({element, "weight out of range (0,1]"});
        auto src = kind_of(e.source);
        auto dst = kind_of(e.target);
        if (!src) issues.push_back({element, "unknown source node \"" + e.source + "\""});
        if (!dst) issues.push_back({element, "unknown target node \"" + e.target + "\""});
        if (!src || !dst) continue;
        if (e.kind == EdgeKind::influence) {
            if (*src != NodeKind::quantity || *dst != NodeKind::quantity)
                issues.push_back({element, "influence endpoints must be quantities"});
        } else {
            if (*src != NodeKind::state) issues.push_back({element, "trigger source must be a state"});
            const bool wants_state = e.effect == TriggerEffect::activate;
            if (wants_state != (*dst == NodeKind::state))
                issues.push_back({element, "effect/target kind mismatch"});
        }
    }

    for (std::size_t i = 0; i < model.mutexes.size(); ++i) {
        const auto& m = model.mutexes[i];
        const std::string element = "mutex " + std::to_string(i + 1);
        std::set<NodeId> seen(m.members.begin(), m.members.end());
        if (seen.size() != m.members.size()) issues.push_back({element, "repeated member"});
        if (seen.size() < 2) issues.push_back({element, "needs at least two states"});
        for (const auto& id : seen) {
            auto k = kind_of(id);
            if (!k)
                issues.push_back({element, "unknown state \"" + id + "\""});
            else if (*k != NodeKind::state)
                issues.push_back({element, "member \"" + id + "\" is not a state"});
        }
    }

    if (model.scenario) {
        std::set<NodeId> assumed;
        for (const auto& a : model.scenario->assumptions) {
            const std::string element = "assumption \"" + a.node + "\"";
            if (!assumed.insert(a.node).second) issues.push_back({element, "node assumed twice"});
            auto k = kind_of(a.node);
            if (!k) {
                issues.push_back({element, "unknown node"});
                continue;
            }
            const bool state_value = a.value == AssumedValue::active;
            if (state_value != (*k == NodeKind::state))
                issues.push_back({element, "value '" + to_string(a.value) + "' does not fit a " + to_string(*k)});
        }
        if (!kind_of(model.scenario->target))
            issues.push_back({"query \"" + model.scenario->target + "\"", "unknown target node"});
    }
    return issues;
}

CausalModel canonicalize(CausalModel m) {
    std::sort(m.nodes.begin(), m.nodes.end(), [](const Node& a, const Node& b) { return a.id < b.id; });
    for (auto& e : m.edges) {
        // fields that carry no meaning for the kind are pinned
        if (e.kind == EdgeKind::influence)
            e.effect = TriggerEffect::activate;
        else
            e.polarity = Polarity::direct;
    }
    std::sort(m.edges.begin(), m.edges.end(), [](const Edge& a, const Edge& b) { return natural_less(a.id, b.id); });
    for (auto& mx : m.mutexes) std::sort(mx.members.begin(), mx.members.end());
    std::sort(m.mutexes.begin(), m.mutexes.end(),
              [](const MutexConstraint& a, const MutexConstraint& b) { return a.members < b.members; });
    if (m.scenario)
        std::sort(m.scenario->assumptions.begin(), m.scenario->assumptions.end(),
                  [](const Assumption& a, const Assumption& b) { return a.node < b.node; });
    return m;
}

bool structurally_equal(const CausalModel& a, const CausalModel& b) {
    auto ca = canonicalize(a);
    auto cb = canonicalize(b);
    return ca.nodes == cb.nodes && ca.edges == cb.edges && ca.mutexes == cb.mutexes && ca.scenario == cb.scenario;
}

// ---------------------------------------------------------------- JSON

json node_to_json(const Node& n) {
    json doc{{"id", n.id}, {"label", n.label}, {"kind", to_string(n.kind)}};
    if (n.concept_type) doc["type"] = *n.concept_type;
    if (n.linked_quantity) doc["linked_quantity"] = *n.linked_quantity;
    return doc;
}

json edge_to_json(const Edge& e) {
    json evidence = json::array();
    for (const auto& ev : e.evidence) evidence.push_back({{"doc_id", ev.doc_id}, {"passage", ev.passage}});
    json doc{{"id", e.id},
             {"source", e.source},
             {"target", e.target},
             {"kind", to_string(e.kind)},
             {"weight", e.weight},
             {"evidence", std::move(evidence)}};
    if (e.kind == EdgeKind::influence)
        doc["polarity"] = to_string(e.polarity);
    else
        doc["effect"] = to_string(e.effect);
    if (e.unevidenced) doc["unevidenced"] = true;
    return doc;
}

json to_json(const CausalModel& model) {
    const auto m = canonicalize(model);
    json nodes = json::array();
    for (const auto& n : m.nodes) nodes.push_back(node_to_json(n));
    json edges = json::array();
    for (const auto& e : m.edges) edges.push_back(edge_to_json(e));
    json mutexes = json::array();
    for (const auto& mx : m.mutexes) mutexes.push_back(mx.members);
    json scenario = nullptr;
    if (m.scenario) {
        json assumptions = json::array();
        for (const auto& a : m.scenario->assumptions)
            assumptions.push_back({{"node", a.node}, {"value", to_string(a.value)}});
        scenario = {{"assumptions", std::move(assumptions)}, {"target", m.scenario->target}};
    }
    return json{{"version", 1},
                {"nodes", std::move(nodes)},
                {"edges", std::move(edges)},
                {"mutexes", std::move(mutexes)},
                {"scenario", std::move(scenario)},
                {"provenance", m.provenance.is_object() ? m.provenance : json::object()}};
}

namespace {

const json& member(const json& doc, const std::string& path, const char* key) {
    if (!doc.is_object()) throw SchemaError(path, "expected an object");
    if (!doc.contains(key)) throw SchemaError(path + "." + key, "missing required field");
    return doc[key];
}

std::string text_field(const json& doc, const std::string& path, const char* key) {
    const auto& v = member(doc, path, key);
    if (!v.is_string()) throw SchemaError(path + "." + key, "expected a string");
    return v.get<std::string>();
}

std::optional<std::string> optional_text(const json& doc, const std::string& path, const char* key) {
    if (!doc.contains(key) || doc[key].is_null()) return std::nullopt;
    if (!doc[key].is_string()) throw SchemaError(path + "." + key, "expected a string or null");
    return doc[key].get<std::string>();
}

const json& array_field(const json& doc, const std::string& path, const char* key) {
    const auto& v = member(doc, path, key);
    if (!v.is_array()) throw SchemaError(path + "." + key, "expected an array");
    return v;
}

template <typename F>
auto enum_field(const json& doc, const std::string& path, const char* key, F convert) {
    auto text = text_field(doc, path, key);
    try {
        return convert(text);
    } catch (const InvalidArgument& e) {
        throw SchemaError(path + "." + key, e.what());
    }
}

std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

}  // namespace

Node node_from_json(const json& doc, const std::string& path) {
    Node n;
    n.id = text_field(doc, path, "id");
    n.label = text_field(doc, path, "label");
    n.kind = enum_field(doc, path, "kind", node_kind_from_string);
    n.concept_type = optional_text(doc, path, "type");
    n.linked_quantity = optional_text(doc, path, "linked_quantity");
    return n;
}

Edge edge_from_json(const json& doc, const std::string& path) {
    Edge e;
    e.id = text_field(doc, path, "id");
    e.source = text_field(doc, path, "source");
    e.target = text_field(doc, path, "target");
    e.kind = enum_field(doc, path, "kind", edge_kind_from_string);
    const auto& w = member(doc, path, "weight");
    if (!w.is_number()) throw SchemaError(path + ".weight", "expected a number");
    e.weight = w.get<double>();
    if (e.kind == EdgeKind::influence)
        e.polarity = enum_field(doc, path, "polarity", polarity_from_string);
    else
        e.effect = enum_field(doc, path, "effect", trigger_effect_from_string);
    if (doc.contains("evidence")) {
        const auto& evidence = array_field(doc, path, "evidence");
        for (std::size_t i = 0; i < evidence.size(); ++i) {
            const auto p = at(path + ".evidence", i);
            e.evidence.push_back({text_field(evidence[i], p, "doc_id"), text_field(evidence[i], p, "passage")});
        }
    }
    if (doc.contains("unevidenced")) {
        if (!doc["unevidenced"].is_boolean()) throw SchemaError(path + ".unevidenced", "expected a boolean");
        e.unevidenced = doc["unevidenced"].get<bool>();
    }
    return e;
}

CausalModel from_json(const json& doc) {
    if (!doc.is_object()) throw SchemaError("$", "map document must be an object");
    if (doc.contains("version") && doc["version"] != 1) throw SchemaError("$.version", "unsupported version");
    CausalModel m;
    const auto& nodes = array_field(doc, "$", "nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) m.nodes.push_back(node_from_json(nodes[i], at("$.nodes", i)));
    const auto& edges = array_field(doc, "$", "edges");
    for (std::size_t i = 0; i < edges.size(); ++i) m.edges.push_back(edge_from_json(edges[i], at("$.edges", i)));
    if (doc.contains("mutexes")) {
        const auto& mutexes = array_field(doc, "$", "mutexes");
        for (std::size_t i = 0; i < mutexes.size(); ++i) {
            const auto p = at("$.mutexes", i);
            if (!mutexes[i].is_array()) throw SchemaError(p, "expected an array of node ids");
            MutexConstraint mx;
            for (std::size_t j = 0; j < mutexes[i].size(); ++j) {
                if (!mutexes[i][j].is_string()) throw SchemaError(at(p, j), "expected a string");
                mx.members.push_back(mutexes[i][j].get<std::string>());
            }
            m.mutexes.push_back(std::move(mx));
        }
    }
    if (doc.contains("scenario") && !doc["scenario"].is_null()) {
        const auto& s = doc["scenario"];
        Scenario scenario;
        scenario.target = text_field(s, "$.scenario", "target");
        const auto& assumptions = array_field(s, "$.scenario", "assumptions");
        for (std::size_t i = 0; i < assumptions.size(); ++i) {
            const auto p = at("$.scenario.assumptions", i);
            scenario.assumptions.push_back(
                {text_field(assumptions[i], p, "node"), enum_field(assumptions[i], p, "value", assumed_value_from_string)});
        }
        m.scenario = std::move(scenario);
    }
    if (doc.contains("provenance")) {
        if (!doc["provenance"].is_object()) throw SchemaError("$.provenance", "expected an object");
        m.provenance = doc["provenance"];
    }
    return m;
}

}  // namespace cora
