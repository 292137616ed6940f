#include "cora/lexicon.hpp"

#include <fstream>

#include "cora/errors.hpp"
#include "cora/text.hpp"

namespace cora {

std::string to_string(EdgeKind kind) { return kind == EdgeKind::influence ? "influence" : "trigger"; }
std::string to_string(Polarity polarity) { return polarity == Polarity::direct ? "direct" : "inverse"; }
std::string to_string(TriggerEffect effect) {
    switch (effect) {
        case TriggerEffect::activate: return "activate";
        case TriggerEffect::increase: return "increase";
        case TriggerEffect::decrease: return "decrease";
    }
    return "activate";
}

EdgeKind edge_kind_from_string(std::string_view text) {
    if (text == "influence") return EdgeKind::influence;
    if (text == "trigger") return EdgeKind::trigger;
    throw InvalidArgument("unknown edge kind '" + std::string(text) + "'");
}

Polarity polarity_from_string(std::string_view text) {
    if (text == "direct") return Polarity::direct;
    if (text == "inverse") return Polarity::inverse;
    throw InvalidArgument("unknown polarity '" + std::string(text) + "'");
}

TriggerEffect trigger_effect_from_string(std::string_view text) {
    if (text == "activate") return TriggerEffect::activate;
    if (text == "increase") return TriggerEffect::increase;
    if (text == "decrease") return TriggerEffect::decrease;
    throw InvalidArgument("unknown trigger effect '" + std::string(text) + "'");
}

void Lexicon::add(const std::string& predicate, PredicateMapping mapping) {
    entries_[normalize_label(predicate)] = mapping;
}

std::optional<PredicateMapping> Lexicon::lookup(std::string_view predicate) const {
    auto it = entries_.find(normalize_label(predicate));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

Lexicon Lexicon::default_lexicon() {
    Lexicon lex;
    const PredicateMapping direct{EdgeKind::influence, Polarity::direct, TriggerEffect::activate};
    const PredicateMapping inverse{EdgeKind::influence, Polarity::inverse, TriggerEffect::activate};
    for (const char* p : {"increases", "raises", "promotes", "activates", "up-regulates", "upregulates",
                          "stimulates", "enhances", "boosts", "induces", "drives up", "amplifies"})
        lex.add(p, direct);
    for (const char* p : {"decreases", "reduces", "inhibits", "suppresses", "down-regulates",
                          "downregulates", "lowers", "weakens", "dampens", "blocks", "impairs",
                          "drives down"})
        lex.add(p, inverse);
    for (const char* p : {"causes", "leads to", "triggers", "results in"})
        lex.add(p, {EdgeKind::trigger, Polarity::direct, TriggerEffect::activate});
    for (const char* p : {"triggers increase of", "leads to higher"})
        lex.add(p, {EdgeKind::trigger, Polarity::direct, TriggerEffect::increase});
    for (const char* p : {"triggers decrease of", "leads to lower"})
        lex.add(p, {EdgeKind::trigger, Polarity::direct, TriggerEffect::decrease});
    return lex;
}

nlohmann::json Lexicon::to_json() const {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& [predicate, m] : entries_) {
        nlohmann::json entry{{"kind", to_string(m.kind)}};
        if (m.kind == EdgeKind::influence)
            entry["polarity"] = to_string(m.polarity);
        else
            entry["effect"] = to_string(m.effect);
        doc[predicate] = std::move(entry);
    }
    return doc;
}

Lexicon Lexicon::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw SchemaError("$", "lexicon must be a JSON object");
    Lexicon lex;
    for (const auto& [predicate, entry] : doc.items()) {
        const std::string path = "$." + predicate;
        if (!entry.is_object() || !entry.contains("kind") || !entry["kind"].is_string())
            throw SchemaError(path, "entry needs a string 'kind'");
        PredicateMapping m;
        try {
            m.kind = edge_kind_from_string(entry["kind"].get<std::string>());
            if (m.kind == EdgeKind::influence) {
                if (!entry.contains("polarity") || !entry["polarity"].is_string())
                    throw SchemaError(path + ".polarity", "influence entries need a polarity");
                m.polarity = polarity_from_string(entry["polarity"].get<std::string>());
            } else if (entry.contains("effect")) {
                if (!entry["effect"].is_string()) throw SchemaError(path + ".effect", "must be a string");
                m.effect = trigger_effect_from_string(entry["effect"].get<std::string>());
            }
        } catch (const InvalidArgument& e) {
            throw SchemaError(path, e.what());
        }
        lex.add(predicate, m);
    }
    return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw StorageError("cannot open lexicon file " + file.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("$", std::string("invalid JSON in lexicon: ") + e.what());
    }
    return from_json(doc);
}

}  // namespace cora
