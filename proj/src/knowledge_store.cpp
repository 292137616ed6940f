#include "cora/knowledge_store.hpp"

#include <algorithm>
#include <fstream>
#include <istream>

#include "cora/errors.hpp"
#include "cora/text.hpp"

namespace cora {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(QualifierKind kind) {
    switch (kind) {
        case QualifierKind::time: return "time";
        case QualifierKind::space: return "space";
        case QualifierKind::manner: return "manner";
        case QualifierKind::purpose: return "purpose";
    }
    return "time";
}

std::optional<QualifierKind> qualifier_kind_from_string(std::string_view text) {
    if (text == "time") return QualifierKind::time;
    if (text == "space") return QualifierKind::space;
    if (text == "manner") return QualifierKind::manner;
    if (text == "purpose") return QualifierKind::purpose;
    return std::nullopt;
}

json to_json(const EventRecord& r) {
    json q = json::object();
    for (const auto& [kind, text] : r.qualifiers) q[to_string(kind)] = text;
    return json{{"event_id", r.event_id},
                {"subject", r.subject},
                {"subject_type", r.subject_type ? json(*r.subject_type) : json(nullptr)},
                {"predicate", r.predicate},
                {"object", r.object},
                {"object_type", r.object_type ? json(*r.object_type) : json(nullptr)},
                {"qualifiers", std::move(q)},
                {"doc_id", r.doc_id},
                {"passage", r.passage},
                {"confidence", r.confidence}};
}

namespace {

const std::set<std::string> kEventFields = {"event_id", "subject",   "subject_type", "predicate",
                                            "object",   "object_type", "qualifiers", "doc_id",
                                            "passage",  "confidence"};

// Empty string when the field is a usable string; otherwise the reason.
std::string required_text(const json& doc, const char* key, std::string& out) {
    if (!doc.contains(key)) return std::string("missing ") + key;
    if (!doc[key].is_string()) return std::string(key) + " must be a string";
    out = doc[key].get<std::string>();
    if (normalize_label(out).empty()) return std::string("empty ") + key;
    return {};
}

std::string optional_text(const json& doc, const char* key, std::optional<std::string>& out) {
    if (!doc.contains(key) || doc[key].is_null()) return {};
    if (!doc[key].is_string()) return std::string(key) + " must be a string or null";
    auto text = doc[key].get<std::string>();
    if (!normalize_label(text).empty()) out = std::move(text);
    return {};
}

}  // namespace

EventParse parse_event(const json& doc) {
    EventParse result;
    if (!doc.is_object()) {
        result.error = "record is not a JSON object";
        return result;
    }
    for (const auto& [key, _] : doc.items())
        if (!kEventFields.count(key)) result.unknown_fields.push_back(key);

    EventRecord r;
    for (auto [key, dest] : {std::pair{"event_id", &r.event_id}, std::pair{"subject", &r.subject},
                             std::pair{"predicate", &r.predicate}, std::pair{"object", &r.object},
                             std::pair{"doc_id", &r.doc_id}, std::pair{"passage", &r.passage}}) {
        if (auto err = required_text(doc, key, *dest); !err.empty()) {
            result.error = err;
            return result;
        }
    }
    if (auto err = optional_text(doc, "subject_type", r.subject_type); !err.empty()) {
        result.error = err;
        return result;
    }
    if (auto err = optional_text(doc, "object_type", r.object_type); !err.empty()) {
        result.error = err;
        return result;
    }
    if (doc.contains("qualifiers") && !doc["qualifiers"].is_null()) {
        const auto& q = doc["qualifiers"];
        if (!q.is_object()) {
            result.error = "qualifiers must be an object";
            return result;
        }
        for (const auto& [key, value] : q.items()) {
            auto kind = qualifier_kind_from_string(key);
            if (!kind) {
                result.error = "unknown qualifier kind '" + key + "'";
                return result;
            }
            if (!value.is_string()) {
                result.error = "qualifier '" + key + "' must be a string";
                return result;
            }
            r.qualifiers[*kind] = value.get<std::string>();
        }
    }
    if (doc.contains("confidence")) {
        if (!doc["confidence"].is_number()) {
            result.error = "confidence must be a number";
            return result;
        }
        r.confidence = doc["confidence"].get<double>();
        if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) {
            result.error = "confidence outside [0,1]";
            return result;
        }
    }
    result.record = std::move(r);
    return result;
}

// ---------------------------------------------------------------- aliases

void AliasTable::add_alias(std::string_view surface, std::string_view canonical) {
    const std::string from = normalize_label(surface);
    if (from.empty()) throw InvalidArgument("empty alias label");
    ConceptId to = register_canonical(canonical);
    if (from == to) return;
    for (auto& [key, target] : entries_)
        if (target == from) target = to;
    entries_[from] = to;
}

ConceptId AliasTable::register_canonical(std::string_view label) {
    std::string id = normalize_label(label);
    if (id.empty()) throw InvalidArgument("empty concept label");
    auto it = entries_.find(id);
    if (it != entries_.end()) return it->second;
    entries_.emplace(id, id);
    return id;
}

std::optional<ConceptId> AliasTable::resolve(std::string_view label, bool create_if_missing) const {
    std::string key = normalize_label(label);
    auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
    if (create_if_missing && !key.empty()) return key;
    return std::nullopt;
}

bool AliasTable::is_canonical(std::string_view id) const {
    auto it = entries_.find(std::string(id));
    return it != entries_.end() && it->second == it->first;
}

AliasTable AliasTable::from_json(const json& doc) {
    if (!doc.is_object()) throw SchemaError("$", "aliases must be a JSON object");
    AliasTable table;
    for (const auto& [surface, canonical] : doc.items()) {
        if (!canonical.is_string()) throw SchemaError("$." + surface, "canonical label must be a string");
        table.add_alias(surface, canonical.get<std::string>());
    }
    return table;
}

json AliasTable::to_json() const {
    json doc = json::object();
    for (const auto& [surface, id] : entries_)
        if (surface != id) doc[surface] = id;
    return doc;
}

std::optional<ConceptId> resolve_concept(std::string_view label, const AliasTable& aliases,
                                         bool create_if_missing) {
    return aliases.resolve(label, create_if_missing);
}

// ---------------------------------------------------------------- types

void TypeHierarchy::add_parent(const std::string& type, const std::string& parent) {
    parents_[type].insert(parent);
    parents_.try_emplace(parent);
    check_acyclic();
}

void TypeHierarchy::check_acyclic() const {
    enum class Mark { none, active, done };
    std::map<std::string, Mark> mark;
    std::vector<std::string> trail;
    std::function<void(const std::string&)> visit = [&](const std::string& t) {
        auto& m = mark[t];
        if (m == Mark::done) return;
        if (m == Mark::active) {
            std::string cycle;
            auto start = std::find(trail.begin(), trail.end(), t);
            for (auto it = start; it != trail.end(); ++it) cycle += *it + " -> ";
            throw InvalidArgument("type hierarchy has a cycle: " + cycle + t);
        }
        m = Mark::active;
        trail.push_back(t);
        if (auto it = parents_.find(t); it != parents_.end())
            for (const auto& p : it->second) visit(p);
        trail.pop_back();
        mark[t] = Mark::done;
    };
    for (const auto& [t, _] : parents_) visit(t);
}

TypeHierarchy TypeHierarchy::from_json(const json& doc) {
    if (!doc.is_object()) throw SchemaError("$", "types must be a JSON object");
    TypeHierarchy h;
    for (const auto& [type, parents] : doc.items()) {
        if (!parents.is_array()) throw SchemaError("$." + type, "parents must be an array");
        auto& set = h.parents_[type];
        for (const auto& p : parents) {
            if (!p.is_string()) throw SchemaError("$." + type, "parent must be a string");
            set.insert(p.get<std::string>());
        }
    }
    for (const auto& [type, parents] : std::map(h.parents_))
        for (const auto& p : parents) h.parents_.try_emplace(p);
    h.check_acyclic();
    return h;
}

json TypeHierarchy::to_json() const {
    json doc = json::object();
    for (const auto& [type, parents] : parents_)
        if (!parents.empty()) doc[type] = json(parents);
    return doc;
}

std::set<std::string> TypeHierarchy::ancestors(const std::string& type) const {
    std::set<std::string> seen;
    std::vector<std::string> stack{type};
    while (!stack.empty()) {
        auto t = std::move(stack.back());
        stack.pop_back();
        auto it = parents_.find(t);
        if (it == parents_.end()) continue;
        for (const auto& p : it->second)
            if (seen.insert(p).second) stack.push_back(p);
    }
    return seen;
}

bool TypeHierarchy::is_a(const std::string& type, const std::string& ancestor) const {
    return type == ancestor || ancestors(type).count(ancestor) > 0;
}

bool TypeHierarchy::knows(const std::string& type) const { return parents_.count(type) > 0; }

// ---------------------------------------------------------------- KB

json IngestReport::to_json() const {
    json rejections = json::array();
    for (const auto& r : rejection_reasons) rejections.push_back({{"line", r.line}, {"reason", r.reason}});
    return json{{"accepted", accepted},
                {"rejected", rejected},
                {"rejection_reasons", std::move(rejections)},
                {"warnings", warnings}};
}

KnowledgeBase::KnowledgeBase() : lexicon_(Lexicon::default_lexicon()) {}

namespace {

std::optional<json> read_json_file(const fs::path& file) {
    if (!fs::exists(file)) return std::nullopt;
    std::ifstream in(file);
    if (!in) throw StorageError("cannot read " + file.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError("$", file.filename().string() + ": " + e.what());
    }
}

}  // namespace

KnowledgeBase KnowledgeBase::load(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw StorageError("knowledge base directory not found: " + dir.string());
    KnowledgeBase kb;
    if (auto doc = read_json_file(dir / "aliases.json")) kb.aliases_ = AliasTable::from_json(*doc);
    if (auto doc = read_json_file(dir / "types.json")) kb.types_ = TypeHierarchy::from_json(*doc);
    if (auto doc = read_json_file(dir / "lexicon.json")) kb.lexicon_ = Lexicon::from_json(*doc);

    if (fs::exists(dir / "events.jsonl")) {
        std::ifstream in(dir / "events.jsonl");
        if (!in) throw StorageError("cannot read " + (dir / "events.jsonl").string());
        kb.load_report_ = ingest_events(in, kb);
    }
    return kb;
}

KnowledgeBase KnowledgeBase::open(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw StorageError("cannot create knowledge base directory " + dir.string(), ec.message());
    KnowledgeBase kb = load(dir);
    kb.root_ = dir;
    return kb;
}

const EventRecord* KnowledgeBase::find_event(std::string_view event_id) const {
    auto it = by_id_.find(std::string(event_id));
    return it == by_id_.end() ? nullptr : &events_[it->second];
}

void KnowledgeBase::set_aliases(AliasTable aliases) {
    aliases_ = std::move(aliases);
    display_.clear();
    concept_types_.clear();
    for (const auto& e : events_) {
        aliases_.register_canonical(e.subject);
        aliases_.register_canonical(e.object);
    }
    rebuild_index();
}

std::optional<ConceptId> KnowledgeBase::resolve(std::string_view label, bool create_if_missing) const {
    return aliases_.resolve(label, create_if_missing);
}

ConceptId KnowledgeBase::canonical_subject(const EventRecord& e) const { return *aliases_.resolve(e.subject, true); }
ConceptId KnowledgeBase::canonical_object(const EventRecord& e) const { return *aliases_.resolve(e.object, true); }

std::vector<ConceptId> KnowledgeBase::concepts() const {
    std::set<ConceptId> all;
    for (const auto& [c, _] : index_.outgoing) all.insert(c);
    for (const auto& [c, _] : index_.incoming) all.insert(c);
    return {all.begin(), all.end()};
}

std::optional<std::string> KnowledgeBase::concept_type(const ConceptId& id) const {
    auto it = concept_types_.find(id);
    if (it == concept_types_.end()) return std::nullopt;
    return it->second;
}

std::string KnowledgeBase::display_label(const ConceptId& id) const {
    auto it = display_.find(id);
    return it == display_.end() ? id : it->second;
}

void KnowledgeBase::insert(EventRecord record) {
    const ConceptId subject = aliases_.register_canonical(record.subject);
    const ConceptId object = aliases_.register_canonical(record.object);
    index_.outgoing[subject].insert(record.event_id);
    index_.incoming[object].insert(record.event_id);
    for (auto [label, id, type] : {std::tuple{&record.subject, &subject, &record.subject_type},
                                   std::tuple{&record.object, &object, &record.object_type}}) {
        if (normalize_label(*label) == *id) display_.try_emplace(*id, *label);
        if (*type) concept_types_.try_emplace(*id, **type);
    }
    by_id_.emplace(record.event_id, events_.size());
    events_.push_back(std::move(record));
}

void KnowledgeBase::rebuild_index() {
    index_ = ConceptIndex{};
    display_.clear();
    concept_types_.clear();
    by_id_.clear();
    auto events = std::move(events_);
    events_.clear();
    for (auto& e : events) insert(std::move(e));
}

std::vector<EventRecord> KnowledgeBase::neighbors(std::string_view concept_label, Direction direction) const {
    std::vector<EventRecord> out;
    auto id = resolve(concept_label);
    if (!id) return out;
    std::set<std::string> ids;
    auto collect = [&](const std::map<ConceptId, std::set<std::string>>& side) {
        if (auto it = side.find(*id); it != side.end()) ids.insert(it->second.begin(), it->second.end());
    };
    if (direction != Direction::incoming) collect(index_.outgoing);
    if (direction != Direction::outgoing) collect(index_.incoming);
    out.reserve(ids.size());
    for (const auto& eid : ids) out.push_back(*find_event(eid));
    return out;
}

std::vector<EventRecord> neighbors(const ConceptId& concept_id, Direction direction, const KnowledgeBase& kb) {
    return kb.neighbors(concept_id, direction);
}

std::optional<std::string> KnowledgeBase::accept(const json& doc, IngestReport& report, std::size_t line,
                                                 std::ofstream* sink) {
    auto parsed = parse_event(doc);
    if (!parsed.record) return parsed.error;
    if (by_id_.count(parsed.record->event_id)) return "duplicate event_id '" + parsed.record->event_id + "'";
    for (const auto& field : parsed.unknown_fields)
        report.warnings.push_back("line " + std::to_string(line) + ": unknown field '" + field + "' ignored");
    if (sink) {
        *sink << to_json(*parsed.record).dump() << '\n';
        sink->flush();
        if (!*sink) return "write to events.jsonl failed";
    }
    insert(std::move(*parsed.record));
    return std::nullopt;
}

namespace {

std::optional<std::ofstream> open_sink(const KnowledgeBase& kb) {
    if (!kb.root()) return std::nullopt;
    const auto file = *kb.root() / "events.jsonl";
    std::ofstream sink(file, std::ios::app);
    if (!sink) throw StorageError("knowledge base is not writable: " + file.string());
    return sink;
}

}  // namespace

IngestReport ingest_events(std::istream& jsonl, KnowledgeBase& kb) {
    auto sink = open_sink(kb);
    IngestReport report;
    std::string text;
    std::size_t line = 0;
    while (std::getline(jsonl, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::optional<std::string> error;
        json doc = json::parse(text, nullptr, false);
        if (doc.is_discarded())
            error = "invalid JSON";
        else
            error = kb.accept(doc, report, line, sink ? &*sink : nullptr);
        if (error) {
            ++report.rejected;
            report.rejection_reasons.push_back({line, *error});
        } else {
            ++report.accepted;
        }
    }
    return report;
}

IngestReport ingest_records(const std::vector<json>& records, KnowledgeBase& kb) {
    auto sink = open_sink(kb);
    IngestReport report;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (auto error = kb.accept(records[i], report, i + 1, sink ? &*sink : nullptr)) {
            ++report.rejected;
            report.rejection_reasons.push_back({i + 1, *error});
        } else {
            ++report.accepted;
        }
    }
    return report;
}

}  // namespace cora
