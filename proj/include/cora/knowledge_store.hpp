#pragma once
// Knowledge store: extracted event records, alias resolution, the type
// hierarchy and the concept neighborhood index used by the graph builder.
//
// On disk a KB is a directory holding events.jsonl, aliases.json,
// types.json and lexicon.json. The concept index is derived at load time.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "cora/lexicon.hpp"
#include "json.hpp"

namespace cora {

using ConceptId = std::string;

enum class QualifierKind { time, space, manner, purpose };

std::string to_string(QualifierKind kind);
std::optional<QualifierKind> qualifier_kind_from_string(std::string_view text);

struct EventRecord {
    std::string event_id;
    std::string subject;
    std::optional<std::string> subject_type;
    std::string predicate;
    std::string object;
    std::optional<std::string> object_type;
    std::map<QualifierKind, std::string> qualifiers;
    std::string doc_id;
    std::string passage;
    double confidence = 1.0;

    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

nlohmann::json to_json(const EventRecord& record);

// Parses and checks one record. On failure returns the rejection reason;
// names of ignored unknown fields are appended to `unknown_fields`.
struct EventParse {
    std::optional<EventRecord> record;
    std::string error;
    std::vector<std::string> unknown_fields;
};
EventParse parse_event(const nlohmann::json& doc);

class AliasTable {
public:
    // Maps `surface` onto the canonical id of `canonical`. Chains collapse so
    // every entry points straight at a canonical id.
    void add_alias(std::string_view surface, std::string_view canonical);
    // Makes `label` canonical (maps to itself) unless it already resolves.
    ConceptId register_canonical(std::string_view label);

    std::optional<ConceptId> resolve(std::string_view label, bool create_if_missing = false) const;
    bool is_canonical(std::string_view id) const;

    const std::map<std::string, ConceptId>& entries() const { return entries_; }

    static AliasTable from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;

private:
    std::map<std::string, ConceptId> entries_;
};

std::optional<ConceptId> resolve_concept(std::string_view label, const AliasTable& aliases,
                                         bool create_if_missing);

class TypeHierarchy {
public:
    // Throws InvalidArgument when the parent relation has a cycle.
    static TypeHierarchy from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;

    void add_parent(const std::string& type, const std::string& parent);
    // Strict ancestors, each visited once.
    std::set<std::string> ancestors(const std::string& type) const;
    // Reflexive: is_a(t, t) holds.
    bool is_a(const std::string& type, const std::string& ancestor) const;
    bool knows(const std::string& type) const;

private:
    void check_acyclic() const;
    std::map<std::string, std::set<std::string>> parents_;
};

enum class Direction { outgoing, incoming, both };

struct ConceptIndex {
    std::map<ConceptId, std::set<std::string>> outgoing;  // concept -> event ids as subject
    std::map<ConceptId, std::set<std::string>> incoming;  // concept -> event ids as object

    friend bool operator==(const ConceptIndex&, const ConceptIndex&) = default;
};

struct Rejection {
    std::size_t line = 0;  // 1-based position in the input stream
    std::string reason;
};

struct IngestReport {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::vector<Rejection> rejection_reasons;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

class KnowledgeBase {
public:
    KnowledgeBase();

    // Loads a KB directory. Missing files fall back to empty tables and the
    // default lexicon. Malformed events.jsonl lines are skipped and listed
    // in load_report(). The result is read-only on disk: later ingests stay
    // in memory.
    static KnowledgeBase load(const std::filesystem::path& dir);
    // Creates the directory if needed; the KB persists future ingests there.
    static KnowledgeBase open(const std::filesystem::path& dir);

    const std::vector<EventRecord>& events() const { return events_; }
    const EventRecord* find_event(std::string_view event_id) const;

    const AliasTable& aliases() const { return aliases_; }
    const TypeHierarchy& types() const { return types_; }
    const Lexicon& lexicon() const { return lexicon_; }
    const ConceptIndex& index() const { return index_; }
    const std::optional<std::filesystem::path>& root() const { return root_; }
    const IngestReport& load_report() const { return load_report_; }

    void set_aliases(AliasTable aliases);
    void set_types(TypeHierarchy types) { types_ = std::move(types); }
    void set_lexicon(Lexicon lexicon) { lexicon_ = std::move(lexicon); }

    std::optional<ConceptId> resolve(std::string_view label, bool create_if_missing = false) const;
    // Canonical ids of every concept occurring in an accepted event.
    std::vector<ConceptId> concepts() const;
    // First type label recorded for the concept.
    std::optional<std::string> concept_type(const ConceptId& id) const;
    // First surface label whose normalization is the id, else the id.
    std::string display_label(const ConceptId& id) const;

    // Events whose canonical subject (outgoing) / object (incoming) is the
    // concept, ordered by event_id. The label is resolved first.
    std::vector<EventRecord> neighbors(std::string_view concept_label, Direction direction) const;

    ConceptId canonical_subject(const EventRecord& e) const;
    ConceptId canonical_object(const EventRecord& e) const;

    // Drops and re-derives the concept index from the accepted events.
    void rebuild_index();

    friend IngestReport ingest_events(std::istream& jsonl, KnowledgeBase& kb);
    friend IngestReport ingest_records(const std::vector<nlohmann::json>& records, KnowledgeBase& kb);

private:
    // Validated record: add to memory and index.
    void insert(EventRecord record);
    std::optional<std::string> accept(const nlohmann::json& doc, IngestReport& report, std::size_t line,
                                      std::ofstream* sink);

    std::vector<EventRecord> events_;
    std::unordered_map<std::string, std::size_t> by_id_;
    AliasTable aliases_;
    TypeHierarchy types_;
    Lexicon lexicon_;
    ConceptIndex index_;
    std::map<ConceptId, std::string> display_;
    std::map<ConceptId, std::string> concept_types_;
    std::optional<std::filesystem::path> root_;
    IngestReport load_report_;
};

// Ingests one JSON object per line. Malformed records are rejected with a
// reason and never abort the stream. When the KB has a root directory the
// accepted records are appended to its events.jsonl; an unwritable store
// throws StorageError before anything is touched.
IngestReport ingest_events(std::istream& jsonl, KnowledgeBase& kb);
IngestReport ingest_records(const std::vector<nlohmann::json>& records, KnowledgeBase& kb);

// Same contract as KnowledgeBase::neighbors.
std::vector<EventRecord> neighbors(const ConceptId& concept_id, Direction direction, const KnowledgeBase& kb);

}  // namespace cora
