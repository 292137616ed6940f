#include "cora/inference.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <set>

#include "cora/text.hpp"

namespace cora {

using nlohmann::json;

std::string to_string(Trend trend) {
    switch (trend) {
        case Trend::increasing: return "increasing";
        case Trend::decreasing: return "decreasing";
        case Trend::steady: return "steady";
        case Trend::ambiguous: return "ambiguous";
    }
    return "steady";
}

Trend trend_from_string(std::string_view text) {
    if (text == "increasing") return Trend::increasing;
    if (text == "decreasing") return Trend::decreasing;
    if (text == "steady") return Trend::steady;
    if (text == "ambiguous") return Trend::ambiguous;
    throw InvalidArgument("unknown direction '" + std::string(text) + "'");
}

void check_params(const InferenceParams& params) {
    if (!(params.tau >= 0.0) || !std::isfinite(params.tau)) throw InvalidArgument("tau must be a finite number >= 0");
    if (params.max_path_len < 1) throw InvalidArgument("max_path_len must be >= 1");
}

Trend net_pressures(double upward_mass, double downward_mass, double tau, bool has_contradiction) {
    const double total = upward_mass + downward_mass;
    if (total > 0.0) {
        const double up = upward_mass / total;
        const double down = downward_mass / total;
        if (up - down > tau) return Trend::increasing;
        if (down - up > tau) return Trend::decreasing;
        return Trend::ambiguous;
    }
    return has_contradiction ? Trend::ambiguous : Trend::steady;
}

namespace {

// Read-only view of the model with adjacency lists in edge-id order.
struct Graph {
    explicit Graph(const CausalModel& m) : model(m) {
        for (const auto& n : m.nodes) kind[n.id] = n.kind;
        std::vector<const Edge*> sorted;
        for (const auto& e : m.edges) sorted.push_back(&e);
        std::sort(sorted.begin(), sorted.end(), [](const Edge* a, const Edge* b) { return a->id < b->id; });
        for (const Edge* e : sorted) {
            out[e->source].push_back(e);
            in[e->target].push_back(e);
        }
    }

    const std::vector<const Edge*>& out_edges(const NodeId& id) const {
        static const std::vector<const Edge*> none;
        auto it = out.find(id);
        return it == out.end() ? none : it->second;
    }

    const CausalModel& model;
    std::map<NodeId, NodeKind> kind;
    std::map<NodeId, std::vector<const Edge*>> out;
    std::map<NodeId, std::vector<const Edge*>> in;
};

// Hops from each node to the target ignoring edge kinds and blocking; a
// lower bound used to prune the path search.
std::map<NodeId, int> distance_to(const Graph& g, const NodeId& target) {
    std::map<NodeId, int> dist{{target, 0}};
    std::deque<NodeId> queue{target};
    while (!queue.empty()) {
        NodeId n = queue.front();
        queue.pop_front();
        auto it = g.in.find(n);
        if (it == g.in.end()) continue;
        for (const Edge* e : it->second)
            if (dist.emplace(e->source, dist[n] + 1).second) queue.push_back(e->source);
    }
    return dist;
}

class PathSearch {
public:
    PathSearch(const Graph& g, const Scenario& s, int max_len)
        : g_(g), target_(s.target), max_len_(max_len), dist_(distance_to(g, s.target)) {
        for (const auto& a : s.assumptions) fixed_.insert(a.node);
    }

    std::vector<ProofPath> from(const Assumption& source) {
        found_.clear();
        if (source.node == target_ || source.value == AssumedValue::steady) return {};
        if (!reachable(source.node, 0)) return {};
        source_ = source.node;
        visited_ = {source.node};
        hops_.clear();
        int sign = 0;  // undetermined until a direction is set
        if (source.value == AssumedValue::increasing) sign = 1;
        if (source.value == AssumedValue::decreasing) sign = -1;
        extend(source.node, sign, 1.0);
        return std::move(found_);
    }

private:
    bool reachable(const NodeId& n, int used) const {
        auto it = dist_.find(n);
        return it != dist_.end() && used + it->second <= max_len_;
    }

    void extend(const NodeId& at, int sign, double strength) {
        const bool at_state = g_.kind.at(at) == NodeKind::state;
        for (const Edge* e : g_.out_edges(at)) {
            int next_sign = sign;
            if (at_state) {
                if (e->kind != EdgeKind::trigger) continue;
                if (e->effect == TriggerEffect::increase) next_sign = 1;
                if (e->effect == TriggerEffect::decrease) next_sign = -1;
            } else {
                if (e->kind != EdgeKind::influence) continue;
                if (e->polarity == Polarity::inverse) next_sign = -sign;
            }
            const NodeId& next = e->target;
            if (visited_.count(next)) continue;
            const double s = strength * e->weight;
            hops_.push_back(e);
            if (next == target_) {
                // a state target is reached by activation, which presses upward
                record(next_sign == 0 ? 1 : next_sign, s);
            } else if (!fixed_.count(next) && reachable(next, static_cast<int>(hops_.size()))) {
                visited_.insert(next);
                extend(next, next_sign, s);
                visited_.erase(next);
            }
            hops_.pop_back();
        }
    }

    void record(int sign, double strength) {
        ProofPath p;
        p.source = source_;
        p.sign = sign > 0 ? Sign::positive : Sign::negative;
        p.strength = strength;
        for (const Edge* e : hops_) {
            p.hops.push_back(e->id);
            p.evidence.insert(p.evidence.end(), e->evidence.begin(), e->evidence.end());
        }
        found_.push_back(std::move(p));
    }

    const Graph& g_;
    NodeId target_;
    int max_len_;
    std::map<NodeId, int> dist_;
    std::set<NodeId> fixed_;
    NodeId source_;
    std::set<NodeId> visited_;
    std::vector<const Edge*> hops_;
    std::vector<ProofPath> found_;
};

struct ChainKey {
    NodeId origin;
    std::vector<EdgeId> triggers;
};

// Activation closure over `activate` triggers. Each active state keeps its
// shortest chain; ties go to the smaller (origin, edge ids) key.
std::map<NodeId, ChainKey> activation_closure(const Graph& g, const Scenario& s) {
    std::map<NodeId, ChainKey> active;
    std::vector<NodeId> level;
    for (const auto& a : s.assumptions) {
        if (a.value != AssumedValue::active) continue;
        active[a.node] = {a.node, {}};
        level.push_back(a.node);
    }
    std::sort(level.begin(), level.end());
    while (!level.empty()) {
        std::sort(level.begin(), level.end(), [&](const NodeId& a, const NodeId& b) {
            const auto& ka = active.at(a);
            const auto& kb = active.at(b);
            return std::tie(ka.origin, ka.triggers) < std::tie(kb.origin, kb.triggers);
        });
        std::vector<NodeId> next_level;
        for (const auto& n : level) {
            for (const Edge* e : g.out_edges(n)) {
                if (e->kind != EdgeKind::trigger || e->effect != TriggerEffect::activate) continue;
                if (active.count(e->target)) continue;
                ChainKey key = active.at(n);
                key.triggers.push_back(e->id);
                active.emplace(e->target, std::move(key));
                next_level.push_back(e->target);
            }
        }
        level = std::move(next_level);
    }
    return active;
}

std::vector<Contradiction> contradictions_of(const CausalModel& model, const std::map<NodeId, ChainKey>& active) {
    std::vector<Contradiction> out;
    for (const auto& mx : canonicalize(model).mutexes) {
        Contradiction c;
        for (const auto& member : mx.members) {
            auto it = active.find(member);
            if (it == active.end()) continue;
            c.members.push_back(member);
            const bool assumed = it->second.triggers.empty();
            c.chains.push_back({member, it->second.origin, assumed, it->second.triggers});
        }
        if (c.members.size() >= 2) out.push_back(std::move(c));
    }
    return out;
}

void require_runnable(const CausalModel& model) {
    if (!model.scenario) throw InvalidArgument("model has no scenario");
    if (model.scenario->target.empty()) throw InvalidArgument("scenario has no target");
    auto issues = validate(model);
    if (!issues.empty()) {
        std::string detail;
        for (const auto& i : issues) detail += i.to_string() + "\n";
        throw InvalidArgument("model is not valid: " + issues.front().to_string(), detail);
    }
}

}  // namespace

std::vector<Contradiction> check_consistency(const CausalModel& model, const InferenceParams& params) {
    check_params(params);
    require_runnable(model);
    Graph g(model);
    return contradictions_of(model, activation_closure(g, *model.scenario));
}

InferenceResult infer(const CausalModel& model, const InferenceParams& params) {
    check_params(params);
    require_runnable(model);
    const Scenario& scenario = *model.scenario;
    Graph g(model);

    InferenceResult result;
    result.target = scenario.target;

    auto assumptions = scenario.assumptions;
    std::sort(assumptions.begin(), assumptions.end(),
              [](const Assumption& a, const Assumption& b) { return a.node < b.node; });
    PathSearch search(g, scenario, params.max_path_len);
    for (const auto& a : assumptions) {
        auto found = search.from(a);
        result.paths.insert(result.paths.end(), std::make_move_iterator(found.begin()),
                            std::make_move_iterator(found.end()));
    }
    std::sort(result.paths.begin(), result.paths.end(), [](const ProofPath& a, const ProofPath& b) {
        if (a.strength != b.strength) return a.strength > b.strength;
        return std::tie(a.source, a.hops) < std::tie(b.source, b.hops);
    });

    const auto active = activation_closure(g, scenario);
    result.contradictions = contradictions_of(model, active);

    double up = 0.0, down = 0.0;
    for (const auto& p : result.paths) (p.sign == Sign::positive ? up : down) += p.strength;
    result.verdict = {net_pressures(up, down, params.tau, !result.contradictions.empty()), up, down, params.tau};

    if (const Assumption* fixed_target = scenario.find(scenario.target))
        result.notes.push_back("target \"" + scenario.target + "\" is fixed by the scenario as " +
                               to_string(fixed_target->value));
    for (const auto& e : model.edges) {
        if (e.kind != EdgeKind::trigger || e.effect == TriggerEffect::activate) continue;
        if (!active.count(e.source) || !scenario.find(e.target)) continue;
        result.notes.push_back("fixed value of \"" + e.target + "\" overrides the direction derived through " + e.id);
    }
    if (up + down == 0.0 && !scenario.assumptions.empty())
        result.notes.push_back("no connecting paths from the assumed factors to the target");
    std::sort(result.notes.begin(), result.notes.end());

    result.provenance = {{"netting", "normalized mass shares against tau"},
                         {"path_semantics", "simple paths, strength = product of hop weights"},
                         {"tau", params.tau},
                         {"max_path_len", params.max_path_len}};
    result.explanation = explain(model, result, params.explain_top_k);
    return result;
}

// ---------------------------------------------------------------- JSON

namespace {

json evidence_json(const std::vector<Evidence>& evidence) {
    json out = json::array();
    for (const auto& ev : evidence) out.push_back({{"doc_id", ev.doc_id}, {"passage", ev.passage}});
    return out;
}

}  // namespace

json to_json(const InferenceResult& r) {
    json paths = json::array();
    for (const auto& p : r.paths)
        paths.push_back({{"source", p.source},
                         {"hops", p.hops},
                         {"sign", p.sign == Sign::positive ? "+" : "-"},
                         {"strength", p.strength},
                         {"evidence", evidence_json(p.evidence)}});
    json contradictions = json::array();
    for (const auto& c : r.contradictions) {
        json chains = json::array();
        for (const auto& ch : c.chains)
            chains.push_back(
                {{"member", ch.member}, {"origin", ch.origin}, {"assumed", ch.assumed}, {"triggers", ch.triggers}});
        contradictions.push_back({{"members", c.members}, {"chains", std::move(chains)}});
    }
    return json{{"target", r.target},
                {"verdict",
                 {{"direction", to_string(r.verdict.direction)},
                  {"U", r.verdict.upward_mass},
                  {"D", r.verdict.downward_mass},
                  {"tau", r.verdict.tau}}},
                {"paths", std::move(paths)},
                {"contradictions", std::move(contradictions)},
                {"notes", r.notes},
                {"explanation", r.explanation},
                {"provenance", r.provenance}};
}

InferenceResult inference_result_from_json(const json& doc) {
    try {
        InferenceResult r;
        r.target = doc.at("target").get<std::string>();
        const auto& v = doc.at("verdict");
        r.verdict = {trend_from_string(v.at("direction").get<std::string>()), v.at("U").get<double>(),
                     v.at("D").get<double>(), v.at("tau").get<double>()};
        for (const auto& p : doc.at("paths")) {
            ProofPath path;
            path.source = p.at("source").get<std::string>();
            path.hops = p.at("hops").get<std::vector<std::string>>();
            const auto sign = p.at("sign").get<std::string>();
            if (sign != "+" && sign != "-") throw InvalidArgument("bad path sign '" + sign + "'");
            path.sign = sign == "+" ? Sign::positive : Sign::negative;
            path.strength = p.at("strength").get<double>();
            for (const auto& ev : p.at("evidence"))
                path.evidence.push_back({ev.at("doc_id").get<std::string>(), ev.at("passage").get<std::string>()});
            r.paths.push_back(std::move(path));
        }
        for (const auto& c : doc.at("contradictions")) {
            Contradiction con;
            con.members = c.at("members").get<std::vector<std::string>>();
            for (const auto& ch : c.at("chains"))
                con.chains.push_back({ch.at("member").get<std::string>(), ch.at("origin").get<std::string>(),
                                      ch.at("assumed").get<bool>(), ch.at("triggers").get<std::vector<std::string>>()});
            r.contradictions.push_back(std::move(con));
        }
        r.notes = doc.at("notes").get<std::vector<std::string>>();
        r.explanation = doc.at("explanation").get<std::string>();
        r.provenance = doc.at("provenance");
        return r;
    } catch (const json::exception& e) {
        throw SchemaError("$", std::string("invalid inference result: ") + e.what());
    }
}

}  // namespace cora
