#include <algorithm>
#include <set>

#include "cora/inference.hpp"
#include "cora/text.hpp"

namespace cora {

using nlohmann::json;

namespace {

std::string summarize(const std::vector<RejectedEdit>& rejected) {
    std::string out;
    for (const auto& r : rejected) out += "edit " + std::to_string(r.index) + ": " + r.reason + "\n";
    return out;
}

}  // namespace

EditRejected::EditRejected(std::vector<RejectedEdit> rejected)
    : CoraError("edit_rejected",
                rejected.empty() ? "edit set rejected"
                                 : "edit set rejected: edit " + std::to_string(rejected.front().index) + ": " +
                                       rejected.front().reason,
                summarize(rejected)),
      rejected_(std::move(rejected)) {}

EditSet edits_from_json(const json& doc) {
    const json& list = doc.is_object() && doc.contains("edits") ? doc["edits"] : doc;
    if (!list.is_array()) throw SchemaError("$", "edits must be an array");
    EditSet edits;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string path = "$[" + std::to_string(i) + "]";
        const auto& e = list[i];
        if (!e.is_object() || !e.contains("op") || !e["op"].is_string())
            throw SchemaError(path + ".op", "each edit needs a string 'op'");
        const auto op = e["op"].get<std::string>();
        auto text = [&](const char* key) {
            if (!e.contains(key) || !e[key].is_string()) throw SchemaError(path + "." + key, "expected a string");
            return e[key].get<std::string>();
        };
        if (op == "set_weight") {
            if (!e.contains("weight") || !e["weight"].is_number())
                throw SchemaError(path + ".weight", "expected a number");
            edits.push_back(SetWeight{text("edge"), e["weight"].get<double>()});
        } else if (op == "remove_edge") {
            edits.push_back(RemoveEdge{text("edge")});
        } else if (op == "add_edge") {
            if (!e.contains("edge")) throw SchemaError(path + ".edge", "missing required field");
            json edge = e["edge"];
            if (edge.is_object() && !edge.contains("id")) edge["id"] = "";
            edits.push_back(AddEdge{edge_from_json(edge, path + ".edge")});
        } else if (op == "add_node") {
            if (!e.contains("node")) throw SchemaError(path + ".node", "missing required field");
            json node = e["node"];
            if (node.is_object() && !node.contains("id")) node["id"] = "";
            edits.push_back(AddNode{node_from_json(node, path + ".node")});
        } else if (op == "remove_node") {
            edits.push_back(RemoveNode{text("node")});
        } else if (op == "clamp") {
            try {
                edits.push_back(Clamp{text("node"), assumed_value_from_string(text("value"))});
            } catch (const InvalidArgument& ex) {
                throw SchemaError(path + ".value", ex.what());
            }
        } else if (op == "unclamp") {
            edits.push_back(Unclamp{text("node")});
        } else {
            throw SchemaError(path + ".op", "unknown edit '" + op + "'");
        }
    }
    return edits;
}

json to_json(const EditSet& edits) {
    json out = json::array();
    for (const auto& edit : edits) {
        std::visit(
            [&](const auto& e) {
                using T = std::decay_t<decltype(e)>;
                if constexpr (std::is_same_v<T, SetWeight>)
                    out.push_back({{"op", "set_weight"}, {"edge", e.edge}, {"weight", e.weight}});
                else if constexpr (std::is_same_v<T, RemoveEdge>)
                    out.push_back({{"op", "remove_edge"}, {"edge", e.edge}});
                else if constexpr (std::is_same_v<T, AddEdge>)
                    out.push_back({{"op", "add_edge"}, {"edge", edge_to_json(e.edge)}});
                else if constexpr (std::is_same_v<T, AddNode>)
                    out.push_back({{"op", "add_node"}, {"node", node_to_json(e.node)}});
                else if constexpr (std::is_same_v<T, RemoveNode>)
                    out.push_back({{"op", "remove_node"}, {"node", e.node}});
                else if constexpr (std::is_same_v<T, Clamp>)
                    out.push_back({{"op", "clamp"}, {"node", e.node}, {"value", to_string(e.value)}});
                else
                    out.push_back({{"op", "unclamp"}, {"node", e.node}});
            },
            edit);
    }
    return out;
}

namespace {

// Applies one edit to `m`; returns a reason when the edit cannot apply.
struct Applier {
    CausalModel& m;

    std::optional<std::string> operator()(const SetWeight& e) {
        Edge* edge = m.find_edge(e.edge);
        if (!edge) return "unknown edge " + e.edge;
        if (!(e.weight > 0.0 && e.weight <= 1.0)) return "weight out of range (0,1]";
        edge->weight = e.weight;
        return std::nullopt;
    }

    std::optional<std::string> operator()(const RemoveEdge& e) {
        auto it = std::find_if(m.edges.begin(), m.edges.end(), [&](const Edge& x) { return x.id == e.edge; });
        if (it == m.edges.end()) return "unknown edge " + e.edge;
        m.edges.erase(it);
        return std::nullopt;
    }

    std::optional<std::string> operator()(const AddEdge& e) {
        Edge edge = e.edge;
        edge.source = normalize_label(edge.source);
        edge.target = normalize_label(edge.target);
        if (edge.id.empty()) {
            std::set<EdgeId> used;
            for (const auto& x : m.edges) used.insert(x.id);
            for (std::size_t k = m.edges.size() + 1;; ++k)
                if (!used.count("e" + std::to_string(k))) {
                    edge.id = "e" + std::to_string(k);
                    break;
                }
        }
        if (m.find_edge(edge.id)) return "edge id " + edge.id + " already exists";
        if (!m.find_node(edge.source)) return "unknown node \"" + edge.source + "\"";
        if (!m.find_node(edge.target)) return "unknown node \"" + edge.target + "\"";
        m.edges.push_back(std::move(edge));
        return std::nullopt;
    }

    std::optional<std::string> operator()(const AddNode& e) {
        Node node = e.node;
        if (node.id.empty()) node.id = normalize_label(node.label);
        if (node.id.empty()) return "node needs a label";
        if (m.find_node(node.id)) return "node \"" + node.id + "\" already exists";
        m.nodes.push_back(std::move(node));
        return std::nullopt;
    }

    std::optional<std::string> operator()(const RemoveNode& e) {
        auto it = std::find_if(m.nodes.begin(), m.nodes.end(), [&](const Node& n) { return n.id == e.node; });
        if (it == m.nodes.end()) return "unknown node \"" + e.node + "\"";
        if (m.scenario && m.scenario->target == e.node) return "cannot remove the query target \"" + e.node + "\"";
        m.nodes.erase(it);
        std::erase_if(m.edges, [&](const Edge& x) { return x.source == e.node || x.target == e.node; });
        for (auto& n : m.nodes)
            if (n.linked_quantity == e.node) n.linked_quantity.reset();
        for (auto& mx : m.mutexes) std::erase(mx.members, e.node);
        std::erase_if(m.mutexes, [](const MutexConstraint& mx) { return mx.members.size() < 2; });
        if (m.scenario)
            std::erase_if(m.scenario->assumptions, [&](const Assumption& a) { return a.node == e.node; });
        return std::nullopt;
    }

    std::optional<std::string> operator()(const Clamp& e) {
        if (!m.scenario) return "model has no scenario to clamp into";
        const Node* n = m.find_node(e.node);
        if (!n) return "unknown node \"" + e.node + "\"";
        if ((e.value == AssumedValue::active) != (n->kind == NodeKind::state))
            return "value '" + to_string(e.value) + "' does not fit " + to_string(n->kind) + " \"" + e.node + "\"";
        auto& list = m.scenario->assumptions;
        auto it = std::find_if(list.begin(), list.end(), [&](const Assumption& a) { return a.node == e.node; });
        if (it != list.end())
            it->value = e.value;
        else
            list.push_back({e.node, e.value});
        return std::nullopt;
    }

    std::optional<std::string> operator()(const Unclamp& e) {
        if (!m.scenario) return "model has no scenario";
        auto& list = m.scenario->assumptions;
        auto it = std::find_if(list.begin(), list.end(), [&](const Assumption& a) { return a.node == e.node; });
        if (it == list.end()) return "node \"" + e.node + "\" is not clamped";
        list.erase(it);
        return std::nullopt;
    }
};

}  // namespace

CausalModel apply_edits(const CausalModel& model, const EditSet& edits) {
    CausalModel edited = model;
    std::vector<RejectedEdit> rejected;
    Applier apply{edited};
    auto known = validate(edited);
    for (std::size_t i = 0; i < edits.size(); ++i) {
        if (auto reason = std::visit(apply, edits[i])) {
            rejected.push_back({i, *reason});
            continue;
        }
        // model-level breakage is charged to the edit that introduced it
        auto issues = validate(edited);
        for (const auto& issue : issues)
            if (std::find(known.begin(), known.end(), issue) == known.end()) rejected.push_back({i, issue.to_string()});
        known = std::move(issues);
    }
    if (rejected.empty() && !known.empty())
        rejected.push_back({0, "model is invalid after editing: " + known.front().to_string()});
    if (!rejected.empty()) throw EditRejected(std::move(rejected));
    return edited;
}

InferenceResult whatif(const CausalModel& model, const EditSet& edits, const InferenceParams& params) {
    if (edits.empty()) return infer(model, params);
    return infer(apply_edits(model, edits), params);
}

}  // namespace cora
