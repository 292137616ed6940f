#pragma once
// Qualitative causal inference over a CausalModel and its Scenario.
//
// Assumed states activate; activation spreads along `activate` triggers and
// turns into quantity directions through `increase`/`decrease` triggers.
// Every simple path of at most `max_path_len` hops from an assumed node to
// the target contributes its strength (product of hop weights) as upward or
// downward pressure. Assumed nodes other than a path's source block it.
// Masses are netted on their normalized shares against `tau`.

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "cora/causal_model.hpp"
#include "cora/errors.hpp"
#include "json.hpp"

namespace cora {

enum class Trend { increasing, decreasing, steady, ambiguous };
enum class Sign { positive, negative };

struct InferenceParams {
    double tau = 0.05;
    int max_path_len = 6;
    std::size_t explain_top_k = 5;
};

// Throws InvalidArgument when tau or max_path_len is out of range.
void check_params(const InferenceParams& params);

struct Verdict {
    Trend direction = Trend::steady;
    double upward_mass = 0.0;
    double downward_mass = 0.0;
    double tau = 0.05;

    friend bool operator==(const Verdict&, const Verdict&) = default;
};

// The pure netting rule: direction as a function of (U, D, tau).
Trend net_pressures(double upward_mass, double downward_mass, double tau, bool has_contradiction);

struct ProofPath {
    NodeId source;
    std::vector<EdgeId> hops;
    Sign sign = Sign::positive;
    double strength = 1.0;
    std::vector<Evidence> evidence;

    friend bool operator==(const ProofPath&, const ProofPath&) = default;
};

// How a mutex member became active: assumed directly, or reached from the
// assumed state `origin` along `triggers`.
struct DerivationChain {
    NodeId member;
    NodeId origin;
    bool assumed = false;
    std::vector<EdgeId> triggers;

    friend bool operator==(const DerivationChain&, const DerivationChain&) = default;
};

struct Contradiction {
    std::vector<NodeId> members;  // the simultaneously active members, sorted
    std::vector<DerivationChain> chains;

    friend bool operator==(const Contradiction&, const Contradiction&) = default;
};

struct InferenceResult {
    NodeId target;
    Verdict verdict;
    std::vector<ProofPath> paths;  // strength desc, then source, then hops
    std::vector<Contradiction> contradictions;
    std::vector<std::string> notes;
    std::string explanation;
    nlohmann::json provenance = nlohmann::json::object();

    friend bool operator==(const InferenceResult&, const InferenceResult&) = default;
};

// Requires a scenario and validate(model) == []; throws InvalidArgument otherwise.
InferenceResult infer(const CausalModel& model, const InferenceParams& params = {});

std::vector<Contradiction> check_consistency(const CausalModel& model, const InferenceParams& params = {});

// Deterministic template text: verdict sentence, top-k upward and downward
// chains with per-hop citations, and a contradiction section when needed.
std::string explain(const CausalModel& model, const InferenceResult& result, std::size_t k);

std::string to_string(Trend trend);
Trend trend_from_string(std::string_view text);

nlohmann::json to_json(const InferenceResult& result);
InferenceResult inference_result_from_json(const nlohmann::json& doc);

// ---- what-if edits

struct SetWeight {
    EdgeId edge;
    double weight = kDefaultEdgeWeight;
};
struct RemoveEdge {
    EdgeId edge;
};
struct AddEdge {
    Edge edge;  // an empty id gets the next free "e<k>"
};
struct AddNode {
    Node node;  // an empty id is derived from the label
};
struct RemoveNode {
    NodeId node;
};
struct Clamp {
    NodeId node;
    AssumedValue value = AssumedValue::active;
};
struct Unclamp {
    NodeId node;
};

using Edit = std::variant<SetWeight, RemoveEdge, AddEdge, AddNode, RemoveNode, Clamp, Unclamp>;
using EditSet = std::vector<Edit>;

struct RejectedEdit {
    std::size_t index = 0;  // position in the EditSet
    std::string reason;
};

class EditRejected : public CoraError {
public:
    explicit EditRejected(std::vector<RejectedEdit> rejected);
    const std::vector<RejectedEdit>& rejected() const { return rejected_; }

private:
    std::vector<RejectedEdit> rejected_;
};

EditSet edits_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const EditSet& edits);

// All-or-nothing: returns the edited copy or throws EditRejected listing
// every offending edit. The input model is never modified.
CausalModel apply_edits(const CausalModel& model, const EditSet& edits);

// Same value as infer(apply_edits(model, edits), params).
InferenceResult whatif(const CausalModel& model, const EditSet& edits, const InferenceParams& params = {});

}  // namespace cora
