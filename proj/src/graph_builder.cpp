#include "cora/graph_builder.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <limits>
#include <tuple>

#include "cora/errors.hpp"
#include "cora/text.hpp"

namespace cora {

using nlohmann::json;

// ---------------------------------------------------------------- heuristics

namespace {

std::set<std::string> trigrams(const std::string& label) {
    const std::string padded = "  " + normalize_label(label) + " ";
    std::set<std::string> out;
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) out.insert(padded.substr(i, 3));
    return out;
}

}  // namespace

double TrigramHeuristic::estimate(const ConceptId& a, const ConceptId& b) const {
    if (a == b) return 0.0;
    const auto ta = trigrams(a);
    const auto tb = trigrams(b);
    std::size_t shared = 0;
    for (const auto& t : ta) shared += tb.count(t);
    const std::size_t total = ta.size() + tb.size() - shared;
    return total == 0 ? 0.0 : 1.0 - static_cast<double>(shared) / static_cast<double>(total);
}

std::unique_ptr<Heuristic> make_heuristic(const std::string& name) {
    if (name == "lexical" || name == "trigram") return std::make_unique<TrigramHeuristic>();
    if (name == "null" || name == "none") return std::make_unique<NullHeuristic>();
    throw InvalidArgument("unknown heuristic '" + name + "'");
}

json SearchParams::to_json() const {
    return json{{"max_hops", max_hops},
                {"beam_width", beam_width},
                {"top_k", top_k ? json(*top_k) : json(nullptr)},
                {"heuristic", heuristic},
                {"min_confidence", min_confidence}};
}

json BuildDiagnostics::to_json() const {
    return json{{"events_considered", events_considered},
                {"unmapped_events", unmapped_events},
                {"low_confidence_events", low_confidence_events},
                {"kind_conflicts", kind_conflicts},
                {"expansions", expansions},
                {"paths_found", paths_found},
                {"paths_retained", paths_retained},
                {"messages", messages}};
}

PredicateLookup map_predicate(const EventRecord& event, const Lexicon& lexicon) {
    PredicateLookup out;
    out.mapping = lexicon.lookup(event.predicate);
    if (!out.mapping) out.warning = "unmapped predicate '" + event.predicate + "' in event " + event.event_id;
    return out;
}

double evidence_weight(std::size_t distinct_events, double mean_confidence) {
    if (distinct_events == 0) return 0.1;
    const double w = 1.0 - std::pow(1.0 - mean_confidence, static_cast<double>(distinct_events));
    return std::clamp(w, 0.1, 0.99);
}

// ---------------------------------------------------------------- KB graph

namespace {

using MappingKey = std::tuple<int, int, int>;

MappingKey key_of(const PredicateMapping& m) {
    if (m.kind == EdgeKind::influence) return {0, static_cast<int>(m.polarity), 0};
    return {1, 0, static_cast<int>(m.effect)};
}

struct SearchEdge {
    ConceptId source;
    ConceptId target;
    PredicateMapping mapping;
    std::vector<const EventRecord*> events;  // distinct (doc_id, passage), event_id order
    double weight = 0.1;
    double cost = 0.0;  // -ln(weight)
};

// Distinct supporting evidence and the resulting weight.
void settle(SearchEdge& e) {
    std::set<std::pair<std::string, std::string>> seen;
    std::vector<const EventRecord*> distinct;
    for (const EventRecord* ev : e.events)
        if (seen.emplace(ev->doc_id, ev->passage).second) distinct.push_back(ev);
    e.events = std::move(distinct);
    double sum = 0.0;
    for (const EventRecord* ev : e.events) sum += ev->confidence;
    e.weight = evidence_weight(e.events.size(), e.events.empty() ? 0.0 : sum / static_cast<double>(e.events.size()));
    e.cost = -std::log(e.weight);
}

std::vector<Evidence> evidence_of(const SearchEdge& e) {
    std::vector<Evidence> out;
    for (const EventRecord* ev : e.events) out.push_back({ev->doc_id, ev->passage});
    return out;
}

struct KbGraph {
    std::vector<SearchEdge> edges;  // ordered by (source, target, mapping)
    std::map<ConceptId, std::vector<int>> out;
    std::map<ConceptId, std::vector<int>> in;
    std::set<ConceptId> states;
};

KbGraph kb_graph(const KnowledgeBase& kb, double min_confidence, BuildDiagnostics& diag) {
    struct Mapped {
        const EventRecord* event;
        ConceptId subject, object;
        PredicateMapping mapping;
    };
    std::vector<const EventRecord*> events;
    for (const auto& e : kb.events()) events.push_back(&e);
    std::sort(events.begin(), events.end(),
              [](const EventRecord* a, const EventRecord* b) { return a->event_id < b->event_id; });

    std::vector<Mapped> mapped;
    std::map<std::string, std::size_t> unmapped;
    for (const EventRecord* e : events) {
        ++diag.events_considered;
        auto lookup = map_predicate(*e, kb.lexicon());
        if (!lookup.mapping) {
            ++diag.unmapped_events;
            ++unmapped[e->predicate];
            continue;
        }
        if (e->confidence < min_confidence) {
            ++diag.low_confidence_events;
            continue;
        }
        auto subject = kb.canonical_subject(*e);
        auto object = kb.canonical_object(*e);
        if (subject == object) continue;
        mapped.push_back({e, std::move(subject), std::move(object), *lookup.mapping});
    }
    for (const auto& [predicate, count] : unmapped)
        diag.messages.push_back("skipped " + std::to_string(count) + " event(s) with unmapped predicate '" + predicate +
                                "'");

    KbGraph g;
    for (const auto& m : mapped) {
        if (m.mapping.kind != EdgeKind::trigger) continue;
        g.states.insert(m.subject);
        if (m.mapping.effect == TriggerEffect::activate) g.states.insert(m.object);
    }

    std::map<std::tuple<ConceptId, ConceptId, MappingKey>, std::size_t> slot;
    for (const auto& m : mapped) {
        const bool subject_state = g.states.count(m.subject) > 0;
        const bool object_state = g.states.count(m.object) > 0;
        bool consistent;
        if (m.mapping.kind == EdgeKind::influence)
            consistent = !subject_state && !object_state;
        else
            consistent = subject_state && (m.mapping.effect == TriggerEffect::activate) == object_state;
        if (!consistent) {
            ++diag.kind_conflicts;
            continue;
        }
        auto key = std::make_tuple(m.subject, m.object, key_of(m.mapping));
        auto [it, fresh] = slot.emplace(key, 0);
        if (fresh) {
            it->second = g.edges.size();
            g.edges.push_back({m.subject, m.object, m.mapping, {}, 0.1, 0.0});
        }
        g.edges[it->second].events.push_back(m.event);
    }
    if (diag.kind_conflicts)
        diag.messages.push_back("skipped " + std::to_string(diag.kind_conflicts) +
                                " event(s) whose mapping conflicts with the state/quantity role of a concept");

    // canonical edge order: by (source, target, mapping)
    std::vector<std::size_t> order(g.edges.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ea = g.edges[a];
        const auto& eb = g.edges[b];
        return std::tie(ea.source, ea.target) < std::tie(eb.source, eb.target) ||
               (std::tie(ea.source, ea.target) == std::tie(eb.source, eb.target) &&
                key_of(ea.mapping) < key_of(eb.mapping));
    });
    std::vector<SearchEdge> sorted;
    for (auto i : order) sorted.push_back(std::move(g.edges[i]));
    g.edges = std::move(sorted);
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        settle(g.edges[i]);
        g.out[g.edges[i].source].push_back(static_cast<int>(i));
        g.in[g.edges[i].target].push_back(static_cast<int>(i));
    }
    return g;
}

// ---------------------------------------------------------------- search

struct Partial {
    std::vector<ConceptId> nodes;  // forward: source..end; backward: target..end
    std::vector<int> edges;        // in walk order
    double g = 0.0;
    double f = 0.0;
    std::size_t seq = 0;
};

struct ByPriority {
    bool operator()(const Partial& a, const Partial& b) const {
        if (a.f != b.f) return a.f > b.f;
        return a.seq > b.seq;
    }
};

struct FullPath {
    std::vector<ConceptId> nodes;
    std::vector<int> edges;
    double strength = 1.0;
};

class BidirectionalSearch {
public:
    BidirectionalSearch(const KbGraph& g, const Heuristic& h, const ConceptId& target, int max_hops,
                        std::size_t beam)
        : g_(g), h_(h), target_(target), beam_(beam) {
        forward_limit_ = (max_hops + 1) / 2;
        backward_limit_ = max_hops - forward_limit_;
    }

    std::vector<FullPath> run(const std::vector<ConceptId>& sources, std::size_t& expansions) {
        Partial seed_back{{target_}, {}, 0.0, 0.0, seq_++};
        backward_.push(seed_back);
        for (const auto& s : sources) {
            Partial p{{s}, {}, 0.0, 0.0, seq_++};
            p.f = estimate_forward(s);
            forward_.push(std::move(p));
        }
        std::size_t forward_pops = 0, backward_pops = 0;
        auto forward_open = [&] { return !forward_.empty() && (beam_ == 0 || forward_pops < beam_); };
        auto backward_open = [&] { return !backward_.empty() && (beam_ == 0 || backward_pops < beam_); };
        while (forward_open() || backward_open()) {
            if (forward_open()) {
                ++forward_pops;
                ++expansions;
                Partial p = forward_.top();
                forward_.pop();
                expand_forward(std::move(p));
            }
            if (backward_open()) {
                ++backward_pops;
                ++expansions;
                Partial p = backward_.top();
                backward_.pop();
                expand_backward(std::move(p));
            }
        }
        std::vector<FullPath> out;
        for (auto& [edges, path] : found_) out.push_back(std::move(path));
        return out;
    }

private:
    double cached(const ConceptId& a, const ConceptId& b) {
        auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        return cache_[key] = h_.estimate(a, b);
    }

    // nearest node of the opposite frontier
    double estimate_forward(const ConceptId& n) {
        if (backward_seen_.empty()) return cached(n, target_);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& x : backward_seen_) best = std::min(best, cached(n, x));
        return best;
    }

    double estimate_backward(const ConceptId& n) {
        if (forward_seen_.empty()) return 0.0;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& x : forward_seen_) best = std::min(best, cached(n, x));
        return best;
    }

    void expand_forward(Partial p) {
        const ConceptId& end = p.nodes.back();
        forward_seen_.insert(end);
        const int len = static_cast<int>(p.edges.size());
        if (end == target_ && len > 0) {
            if (len < forward_limit_) emit(p, Partial{{target_}, {}, 0.0, 0.0, 0});
        }
        if (len == forward_limit_ || (end == target_ && len > 0)) {
            if (len == forward_limit_) {
                for (const auto& b : backward_at_[end]) emit(p, b);
                forward_at_[end].push_back(p);
            }
            return;
        }
        auto it = g_.out.find(end);
        if (it == g_.out.end()) return;
        for (int ei : it->second) {
            const auto& e = g_.edges[ei];
            if (std::find(p.nodes.begin(), p.nodes.end(), e.target) != p.nodes.end()) continue;
            Partial child = p;
            child.nodes.push_back(e.target);
            child.edges.push_back(ei);
            child.g += e.cost;
            child.f = child.g + estimate_forward(e.target);
            child.seq = seq_++;
            forward_.push(std::move(child));
        }
    }

    void expand_backward(Partial p) {
        const ConceptId& end = p.nodes.back();
        backward_seen_.insert(end);
        for (const auto& f : forward_at_[end]) emit(f, p);
        backward_at_[end].push_back(p);
        if (static_cast<int>(p.edges.size()) == backward_limit_) return;
        auto it = g_.in.find(end);
        if (it == g_.in.end()) return;
        for (int ei : it->second) {
            const auto& e = g_.edges[ei];
            if (std::find(p.nodes.begin(), p.nodes.end(), e.source) != p.nodes.end()) continue;
            Partial child = p;
            child.nodes.push_back(e.source);
            child.edges.push_back(ei);
            child.g += e.cost;
            child.f = child.g + estimate_backward(e.source);
            child.seq = seq_++;
            backward_.push(std::move(child));
        }
    }

    // Joins a forward half and a backward half meeting on the same node.
    void emit(const Partial& fwd, const Partial& bwd) {
        std::set<ConceptId> left(fwd.nodes.begin(), fwd.nodes.end());
        for (std::size_t i = 0; i + 1 < bwd.nodes.size(); ++i)
            if (left.count(bwd.nodes[i])) return;
        FullPath path;
        path.nodes = fwd.nodes;
        path.edges = fwd.edges;
        for (std::size_t i = bwd.nodes.size() - 1; i-- > 0;) path.nodes.push_back(bwd.nodes[i]);
        for (std::size_t i = bwd.edges.size(); i-- > 0;) path.edges.push_back(bwd.edges[i]);
        if (path.edges.empty()) return;
        for (int ei : path.edges) path.strength *= g_.edges[ei].weight;
        found_.emplace(std::make_pair(path.nodes.front(), path.edges), std::move(path));
    }

    const KbGraph& g_;
    const Heuristic& h_;
    ConceptId target_;
    std::size_t beam_;
    int forward_limit_ = 0;
    int backward_limit_ = 0;
    std::size_t seq_ = 0;
    std::priority_queue<Partial, std::vector<Partial>, ByPriority> forward_, backward_;
    std::set<ConceptId> forward_seen_, backward_seen_;
    std::map<ConceptId, std::vector<Partial>> forward_at_, backward_at_;
    std::map<std::pair<ConceptId, std::vector<int>>, FullPath> found_;
    std::map<std::pair<ConceptId, ConceptId>, double> cache_;
};

bool contains_run(const std::vector<int>& haystack, const std::vector<int>& needle) {
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

// Top-K by strength at 1e-6 resolution, longer first on ties; then drops
// paths that are strict sub-paths of a retained longer one.
std::vector<FullPath> select(std::vector<FullPath> paths, std::optional<std::size_t> top_k) {
    auto bucket = [](double s) { return std::llround(s * 1e6); };
    std::sort(paths.begin(), paths.end(), [&](const FullPath& a, const FullPath& b) {
        if (bucket(a.strength) != bucket(b.strength)) return bucket(a.strength) > bucket(b.strength);
        if (a.edges.size() != b.edges.size()) return a.edges.size() > b.edges.size();
        if (a.strength != b.strength) return a.strength > b.strength;
        return a.nodes < b.nodes || (a.nodes == b.nodes && a.edges < b.edges);
    });
    if (top_k && paths.size() > *top_k) paths.resize(*top_k);
    std::vector<FullPath> kept;
    for (const auto& p : paths) {
        bool sub = false;
        for (const auto& q : paths)
            if (q.edges.size() > p.edges.size() && contains_run(q.edges, p.edges)) sub = true;
        if (!sub) kept.push_back(p);
    }
    return kept;
}

NodeKind kind_in(const KbGraph& g, const ConceptId& c) {
    return g.states.count(c) ? NodeKind::state : NodeKind::quantity;
}

Node node_for(const KnowledgeBase& kb, const KbGraph& g, const ConceptId& c) {
    Node n;
    n.id = c;
    n.label = kb.display_label(c);
    if (normalize_label(n.label) != c) n.label = c;
    n.kind = kind_in(g, c);
    n.concept_type = kb.concept_type(c);
    return n;
}

Edge edge_for(const SearchEdge& se, const EdgeId& id) {
    Edge e;
    e.id = id;
    e.source = se.source;
    e.target = se.target;
    e.kind = se.mapping.kind;
    e.polarity = se.mapping.kind == EdgeKind::influence ? se.mapping.polarity : Polarity::direct;
    e.effect = se.mapping.kind == EdgeKind::trigger ? se.mapping.effect : TriggerEffect::activate;
    e.weight = se.weight;
    e.evidence = evidence_of(se);
    return e;
}

}  // namespace

BuildResult build_map(const KnowledgeBase& kb, const std::vector<SourceSpec>& sources, const std::string& target,
                      const SearchParams& params) {
    auto heuristic = make_heuristic(params.heuristic);
    return build_map(kb, sources, target, params, *heuristic);
}

BuildResult build_map(const KnowledgeBase& kb, const std::vector<SourceSpec>& sources, const std::string& target,
                      const SearchParams& params, const Heuristic& heuristic) {
    if (params.max_hops < 1) throw InvalidArgument("max_hops must be >= 1");
    if (params.top_k && *params.top_k == 0) throw InvalidArgument("top_k must be positive");
    if (!(params.min_confidence >= 0.0 && params.min_confidence <= 1.0))
        throw InvalidArgument("min_confidence must lie in [0,1]");
    if (sources.empty()) throw InvalidArgument("at least one source concept is required");

    auto target_id = kb.resolve(target);
    if (!target_id) throw InvalidArgument("unknown target concept \"" + target + "\"");

    BuildResult result;
    auto& diag = result.diagnostics;
    KbGraph g = kb_graph(kb, params.min_confidence, diag);

    struct ResolvedSource {
        ConceptId id;
        AssumedValue value;
    };
    std::vector<ResolvedSource> resolved;
    for (const auto& s : sources) {
        auto id = kb.resolve(s.concept_label);
        if (!id) throw InvalidArgument("unknown source concept \"" + s.concept_label + "\"");
        if (*id == *target_id) {
            diag.messages.push_back("source equals target");
            continue;
        }
        if (std::any_of(resolved.begin(), resolved.end(), [&](const auto& r) { return r.id == *id; }))
            throw InvalidArgument("source \"" + s.concept_label + "\" listed twice");
        const NodeKind kind = kind_in(g, *id);
        AssumedValue value = s.value.value_or(kind == NodeKind::state ? AssumedValue::active : AssumedValue::increasing);
        if ((value == AssumedValue::active) != (kind == NodeKind::state))
            throw InvalidArgument("source \"" + s.concept_label + "\" is a " + to_string(kind) + " and cannot be " +
                                  to_string(value));
        resolved.push_back({*id, value});
    }

    std::vector<ConceptId> source_ids;
    for (const auto& r : resolved) source_ids.push_back(r.id);
    std::vector<FullPath> found;
    if (!source_ids.empty()) {
        BidirectionalSearch search(g, heuristic, *target_id, params.max_hops, params.beam_width);
        found = search.run(source_ids, diag.expansions);
    }

    std::map<ConceptId, std::vector<FullPath>> per_source;
    for (auto& p : found) per_source[p.nodes.front()].push_back(std::move(p));
    std::vector<FullPath> retained;
    for (auto& [source, paths] : per_source) {
        diag.paths_found[source] = paths.size();
        auto kept = select(std::move(paths), params.top_k);
        diag.paths_retained[source] = kept.size();
        retained.insert(retained.end(), kept.begin(), kept.end());
    }
    for (const auto& id : source_ids) {
        diag.paths_found.try_emplace(id, 0);
        diag.paths_retained.try_emplace(id, 0);
    }

    CausalModel& model = result.model;
    std::set<ConceptId> node_ids{*target_id};
    std::set<int> used_edges;
    for (const auto& r : resolved) node_ids.insert(r.id);
    for (const auto& p : retained) {
        node_ids.insert(p.nodes.begin(), p.nodes.end());
        used_edges.insert(p.edges.begin(), p.edges.end());
    }
    for (const auto& id : node_ids) model.nodes.push_back(node_for(kb, g, id));

    std::map<int, EdgeId> edge_id;
    for (int ei : used_edges) {  // ascending index == canonical (source, target, mapping) order
        EdgeId id = "e" + std::to_string(edge_id.size() + 1);
        edge_id[ei] = id;
        model.edges.push_back(edge_for(g.edges[ei], id));
    }

    Scenario scenario;
    scenario.target = *target_id;
    for (const auto& r : resolved) scenario.assumptions.push_back({r.id, r.value});
    model.scenario = std::move(scenario);
    model.provenance = {{"origin", "graph-builder"}, {"search", params.to_json()}, {"heuristic", heuristic.name()}};

    for (const auto& p : retained) {
        EvidencedPath ep;
        ep.source = p.nodes.front();
        ep.nodes = p.nodes;
        ep.strength = p.strength;
        for (int ei : p.edges) ep.edges.push_back(edge_id.at(ei));
        result.paths.push_back(std::move(ep));
    }
    return result;
}

// ---------------------------------------------------------------- merge

MergeResult merge_saved_map(const CausalModel& built, const CausalModel& saved) {
    MergeResult out;
    out.model = built;
    CausalModel& m = out.model;
    for (const auto& n : saved.nodes) {
        const Node* existing = m.find_node(n.id);
        if (!existing) {
            m.nodes.push_back(n);
        } else if (existing->kind != n.kind) {
            out.conflicts.push_back("node \"" + n.id + "\": saved map declares a " + to_string(n.kind) +
                                    ", knowledge base implies a " + to_string(existing->kind) + "; saved map kept");
            auto it = std::find_if(m.nodes.begin(), m.nodes.end(), [&](const Node& x) { return x.id == n.id; });
            *it = n;
        }
    }
    std::set<EdgeId> ids;
    for (const auto& e : m.edges) ids.insert(e.id);
    for (const auto& se : saved.edges) {
        auto same_link = [&](const Edge& e) { return e.source == se.source && e.target == se.target && e.kind == se.kind; };
        auto it = std::find_if(m.edges.begin(), m.edges.end(), same_link);
        if (it != m.edges.end()) {
            const bool differs = it->polarity != se.polarity || it->effect != se.effect || it->weight != se.weight;
            if (differs)
                out.conflicts.push_back("edge " + se.source + " -> " + se.target +
                                        ": saved map overrides knowledge-base polarity/weight");
            EdgeId keep = it->id;
            *it = se;
            it->id = keep;
            continue;
        }
        Edge added = se;
        for (std::size_t k = m.edges.size() + 1; ids.count(added.id); ++k) added.id = "e" + std::to_string(k);
        ids.insert(added.id);
        m.edges.push_back(std::move(added));
    }
    // drop edges the kind changes made invalid
    std::erase_if(m.edges, [&](const Edge& e) {
        const Node* s = m.find_node(e.source);
        const Node* t = m.find_node(e.target);
        if (!s || !t) return true;
        if (e.kind == EdgeKind::influence) return s->kind != NodeKind::quantity || t->kind != NodeKind::quantity;
        return s->kind != NodeKind::state || (e.effect == TriggerEffect::activate) != (t->kind == NodeKind::state);
    });
    for (const auto& mx : saved.mutexes)
        if (std::find(m.mutexes.begin(), m.mutexes.end(), mx) == m.mutexes.end()) m.mutexes.push_back(mx);
    m.provenance["merged_with_saved_map"] = true;
    return out;
}

// ---------------------------------------------------------------- templates

Template generalize_map(const CausalModel& input, const TypeHierarchy& types) {
    const CausalModel model = canonicalize(input);
    std::set<NodeId> on_edges;
    for (const auto& e : model.edges) {
        on_edges.insert(e.source);
        on_edges.insert(e.target);
    }
    Template tmpl;
    std::map<NodeId, NodeId> rename;
    for (const auto& n : model.nodes) {
        if (!n.concept_type || !on_edges.count(n.id)) continue;
        Slot slot{"?x" + std::to_string(tmpl.slots.size() + 1), *n.concept_type, n.id};
        rename[n.id] = slot.id;
        tmpl.slots.push_back(std::move(slot));
    }
    auto renamed = [&](const NodeId& id) {
        auto it = rename.find(id);
        return it == rename.end() ? id : it->second;
    };
    CausalModel& t = tmpl.model;
    for (auto n : model.nodes) {
        if (rename.count(n.id)) {
            n.id = rename.at(n.id);
            n.label = n.id;
        }
        if (n.linked_quantity) n.linked_quantity = renamed(*n.linked_quantity);
        t.nodes.push_back(std::move(n));
    }
    for (auto e : model.edges) {
        e.source = renamed(e.source);
        e.target = renamed(e.target);
        e.evidence.clear();
        e.unevidenced = false;
        t.edges.push_back(std::move(e));
    }
    for (auto mx : model.mutexes) {
        for (auto& id : mx.members) id = renamed(id);
        t.mutexes.push_back(std::move(mx));
    }
    if (model.scenario) {
        Scenario s = *model.scenario;
        s.target = renamed(s.target);
        for (auto& a : s.assumptions) a.node = renamed(a.node);
        t.scenario = std::move(s);
    }
    json unknown = json::array();
    for (const auto& slot : tmpl.slots)
        if (!types.knows(slot.type)) unknown.push_back(slot.type);
    t.provenance = {{"origin", "template"}, {"generalized_from", model.provenance}, {"types_outside_hierarchy", unknown}};
    return tmpl;
}

CausalModel instantiate_template(const Template& tmpl, const std::map<std::string, std::string>& bindings,
                                 const KnowledgeBase& kb) {
    std::map<NodeId, ConceptId> bound;
    std::set<ConceptId> used;
    for (const auto& slot : tmpl.slots) {
        auto it = bindings.find(slot.id);
        if (it == bindings.end()) throw InvalidArgument("missing binding for slot " + slot.id, slot.id);
        auto id = kb.resolve(it->second);
        if (!id) throw InvalidArgument("binding for slot " + slot.id + ": unknown concept \"" + it->second + "\"", slot.id);
        auto type = kb.concept_type(*id);
        if (!type)
            throw InvalidArgument("binding for slot " + slot.id + ": concept \"" + *id + "\" has no known type", slot.id);
        if (!kb.types().is_a(*type, slot.type))
            throw InvalidArgument("binding for slot " + slot.id + ": type \"" + *type + "\" does not conform to \"" +
                                      slot.type + "\"",
                                  slot.id);
        if (!used.insert(*id).second)
            throw InvalidArgument("binding for slot " + slot.id + ": concept \"" + *id + "\" is bound twice", slot.id);
        bound[slot.id] = *id;
    }
    for (const auto& [slot_id, _] : bindings)
        if (std::none_of(tmpl.slots.begin(), tmpl.slots.end(), [&](const Slot& s) { return s.id == slot_id; }))
            throw InvalidArgument("binding names unknown slot " + slot_id, slot_id);

    auto renamed = [&](const NodeId& id) {
        auto it = bound.find(id);
        return it == bound.end() ? id : it->second;
    };

    CausalModel m;
    for (auto n : tmpl.model.nodes) {
        if (auto it = bound.find(n.id); it != bound.end()) {
            n.id = it->second;
            n.label = kb.display_label(n.id);
            if (normalize_label(n.label) != n.id) n.label = n.id;
            n.concept_type = kb.concept_type(n.id);
        }
        if (n.linked_quantity) n.linked_quantity = renamed(*n.linked_quantity);
        if (m.find_node(n.id)) throw InvalidArgument("binding collides with concrete node \"" + n.id + "\"", n.id);
        m.nodes.push_back(std::move(n));
    }
    for (auto e : tmpl.model.edges) {
        e.source = renamed(e.source);
        e.target = renamed(e.target);
        const PredicateMapping wanted{e.kind, e.kind == EdgeKind::influence ? e.polarity : Polarity::direct,
                                      e.kind == EdgeKind::trigger ? e.effect : TriggerEffect::activate};
        SearchEdge se{e.source, e.target, wanted, {}, 0.1, 0.0};
        for (const auto& ev : kb.neighbors(e.source, Direction::outgoing)) {
            if (kb.canonical_object(ev) != e.target) continue;
            auto mapping = kb.lexicon().lookup(ev.predicate);
            if (mapping && key_of(*mapping) == key_of(wanted)) se.events.push_back(kb.find_event(ev.event_id));
        }
        if (se.events.empty()) {
            e.evidence.clear();
            e.unevidenced = true;
        } else {
            settle(se);
            e.weight = se.weight;
            e.evidence = evidence_of(se);
            e.unevidenced = false;
        }
        m.edges.push_back(std::move(e));
    }
    for (auto mx : tmpl.model.mutexes) {
        for (auto& id : mx.members) id = renamed(id);
        m.mutexes.push_back(std::move(mx));
    }
    if (tmpl.model.scenario) {
        Scenario s = *tmpl.model.scenario;
        s.target = renamed(s.target);
        for (auto& a : s.assumptions) a.node = renamed(a.node);
        m.scenario = std::move(s);
    }
    if (tmpl.model.provenance.contains("generalized_from"))
        m.provenance = tmpl.model.provenance["generalized_from"];
    auto issues = validate(m);
    if (!issues.empty()) throw InvalidArgument("instantiated model is invalid: " + issues.front().to_string());
    return m;
}

json to_json(const Template& tmpl) {
    json doc = to_json(tmpl.model);
    json slots = json::array();
    for (const auto& s : tmpl.slots) {
        json slot{{"id", s.id}, {"type", s.type}};
        if (s.origin) slot["origin"] = *s.origin;
        slots.push_back(std::move(slot));
    }
    doc["slots"] = std::move(slots);
    return doc;
}

Template template_from_json(const json& doc) {
    Template tmpl;
    tmpl.model = from_json(doc);
    if (!doc.contains("slots") || !doc["slots"].is_array()) throw SchemaError("$.slots", "expected an array");
    const auto& slots = doc["slots"];
    for (std::size_t i = 0; i < slots.size(); ++i) {
        const std::string path = "$.slots[" + std::to_string(i) + "]";
        const auto& s = slots[i];
        if (!s.is_object() || !s.contains("id") || !s["id"].is_string())
            throw SchemaError(path + ".id", "expected a string");
        if (!s.contains("type") || !s["type"].is_string()) throw SchemaError(path + ".type", "expected a string");
        Slot slot{s["id"].get<std::string>(), s["type"].get<std::string>(), std::nullopt};
        if (s.contains("origin") && s["origin"].is_string()) slot.origin = s["origin"].get<std::string>();
        tmpl.slots.push_back(std::move(slot));
    }
    std::set<NodeId> on_edges;
    for (const auto& e : tmpl.model.edges) {
        on_edges.insert(e.source);
        on_edges.insert(e.target);
    }
    for (const auto& slot : tmpl.slots) {
        if (!tmpl.model.find_node(slot.id)) throw SchemaError("$.slots", "slot " + slot.id + " has no node");
        if (!on_edges.count(slot.id)) throw SchemaError("$.slots", "slot " + slot.id + " appears in no edge");
    }
    return tmpl;
}

}  // namespace cora
