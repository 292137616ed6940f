#pragma once
// Builds scenario-specific causal maps from the knowledge base.
//
// KB events are mapped through the lexicon onto influence/trigger edges;
// events sharing (subject, object, mapping) collapse into one edge whose
// weight grows with independent evidence. A bidirectional best-first search
// (forward from the sources, backward from the target, priority g + h with
// g = sum of -ln(weight)) enumerates simple paths of at most max_hops hops.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cora/causal_model.hpp"
#include "cora/knowledge_store.hpp"
#include "json.hpp"

namespace cora {

// Distance estimate between two concepts; lower is closer. Implementations
// must satisfy estimate(x, x) == 0, be symmetric, and be safe to call
// concurrently.
class Heuristic {
public:
    virtual ~Heuristic() = default;
    virtual double estimate(const ConceptId& a, const ConceptId& b) const = 0;
    virtual std::string name() const = 0;
};

// h == 0: the search degrades to uniform-cost order.
class NullHeuristic final : public Heuristic {
public:
    double estimate(const ConceptId&, const ConceptId&) const override { return 0.0; }
    std::string name() const override { return "null"; }
};

// 1 - Jaccard similarity of padded character trigrams of the labels.
class TrigramHeuristic final : public Heuristic {
public:
    double estimate(const ConceptId& a, const ConceptId& b) const override;
    std::string name() const override { return "lexical"; }
};

// "lexical" or "null"; throws InvalidArgument otherwise.
std::unique_ptr<Heuristic> make_heuristic(const std::string& name);

struct SearchParams {
    int max_hops = 6;
    std::size_t beam_width = 0;          // pops per frontier; 0 = unbounded
    std::optional<std::size_t> top_k = 10;  // per source; nullopt = keep all
    std::string heuristic = "lexical";
    double min_confidence = 0.0;

    nlohmann::json to_json() const;
};

struct PredicateLookup {
    std::optional<PredicateMapping> mapping;
    std::string warning;  // set when unmapped
};

PredicateLookup map_predicate(const EventRecord& event, const Lexicon& lexicon);

// w = 1 - (1 - mean confidence)^n, clamped to [0.1, 0.99].
double evidence_weight(std::size_t distinct_events, double mean_confidence);

struct SourceSpec {
    std::string concept_label;
    std::optional<AssumedValue> value;  // default: active for states, increasing for quantities
};

// One retained source-to-target chain of the built map.
struct EvidencedPath {
    ConceptId source;
    std::vector<ConceptId> nodes;
    std::vector<EdgeId> edges;  // ids in the built model
    double strength = 1.0;
};

struct BuildDiagnostics {
    std::size_t events_considered = 0;
    std::size_t unmapped_events = 0;
    std::size_t low_confidence_events = 0;
    std::size_t kind_conflicts = 0;
    std::size_t expansions = 0;
    std::map<ConceptId, std::size_t> paths_found;
    std::map<ConceptId, std::size_t> paths_retained;
    std::vector<std::string> messages;

    nlohmann::json to_json() const;
};

struct BuildResult {
    CausalModel model;
    BuildDiagnostics diagnostics;
    std::vector<EvidencedPath> paths;
};

// Throws InvalidArgument for unresolvable concepts or bad parameters.
BuildResult build_map(const KnowledgeBase& kb, const std::vector<SourceSpec>& sources, const std::string& target,
                      const SearchParams& params = {});
BuildResult build_map(const KnowledgeBase& kb, const std::vector<SourceSpec>& sources, const std::string& target,
                      const SearchParams& params, const Heuristic& heuristic);

// Prefers the saved map's edges where both maps relate the same endpoints
// with the same kind; additions from the saved map are carried over.
struct MergeResult {
    CausalModel model;
    std::vector<std::string> conflicts;
};
MergeResult merge_saved_map(const CausalModel& built, const CausalModel& saved);

// ---- research templates

struct Slot {
    std::string id;  // "?x1", ...
    std::string type;
    std::optional<ConceptId> origin;  // the concept the slot was generalized from

    friend bool operator==(const Slot&, const Slot&) = default;
};

struct Template {
    CausalModel model;  // slot nodes carry the slot id as id and label
    std::vector<Slot> slots;
};

Template generalize_map(const CausalModel& model, const TypeHierarchy& types);

// Bindings map slot id -> concept label. Throws InvalidArgument naming the
// slot when a binding is missing or its KB type does not conform.
CausalModel instantiate_template(const Template& tmpl, const std::map<std::string, std::string>& bindings,
                                 const KnowledgeBase& kb);

nlohmann::json to_json(const Template& tmpl);
Template template_from_json(const nlohmann::json& doc);

}  // namespace cora
