#pragma once
// Predicate lexicon: maps KB relation labels onto meta-model edge kinds.

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"

namespace cora {

enum class EdgeKind { influence, trigger };
enum class Polarity { direct, inverse };
// `activate` targets a State; `increase`/`decrease` set a Quantity's direction.
enum class TriggerEffect { activate, increase, decrease };

struct PredicateMapping {
    EdgeKind kind = EdgeKind::influence;
    Polarity polarity = Polarity::direct;           // influences only
    TriggerEffect effect = TriggerEffect::activate;  // triggers only

    friend bool operator==(const PredicateMapping&, const PredicateMapping&) = default;
};

class Lexicon {
public:
    Lexicon() = default;

    // The shipped table (~30 predicates).
    static Lexicon default_lexicon();
    static Lexicon from_json(const nlohmann::json& doc);
    static Lexicon load(const std::filesystem::path& file);

    nlohmann::json to_json() const;

    void add(const std::string& predicate, PredicateMapping mapping);
    // Case-folded, whitespace-normalized lookup.
    std::optional<PredicateMapping> lookup(std::string_view predicate) const;
    std::size_t size() const { return entries_.size(); }
    const std::map<std::string, PredicateMapping>& entries() const { return entries_; }

private:
    std::map<std::string, PredicateMapping> entries_;
};

std::string to_string(EdgeKind kind);
std::string to_string(Polarity polarity);
std::string to_string(TriggerEffect effect);
EdgeKind edge_kind_from_string(std::string_view text);
Polarity polarity_from_string(std::string_view text);
TriggerEffect trigger_effect_from_string(std::string_view text);

}  // namespace cora
