#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "cora/errors.hpp"
#include "cora/knowledge_store.hpp"
#include "oracles.hpp"

using namespace cora;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("cora_kb_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

IngestReport ingest_lines(KnowledgeBase& kb, const std::string& text) {
    std::istringstream in(text);
    return ingest_events(in, kb);
}

const char* kIl33 =
    R"({"event_id":"e1","subject":"IL-33","subject_type":"Cytokine","predicate":"activates","object":"NF-kB",)"
    R"("object_type":"Signalling Pathway","qualifiers":{"manner":"binding with ST2 receptor"},)"
    R"("doc_id":"pmid-1","passage":"IL-33 signals through NF-kB."})";

}  // namespace

TEST(Ingest, AcceptsQualifiedEventAndIndexesBothConcepts) {
    KnowledgeBase kb;
    auto report = ingest_lines(kb, std::string(kIl33) + "\n");
    EXPECT_EQ(report.accepted, 1u);
    EXPECT_EQ(report.rejected, 0u);
    ASSERT_EQ(kb.index().outgoing.at("il-33").size(), 1u);
    ASSERT_EQ(kb.index().incoming.at("nf-kb").size(), 1u);
    const auto* e = kb.find_event("e1");
    ASSERT_NE(e, nullptr);
    EXPECT_EQ(e->qualifiers.at(QualifierKind::manner), "binding with ST2 receptor");
    EXPECT_EQ(kb.concept_type("il-33"), "Cytokine");
    EXPECT_EQ(kb.display_label("il-33"), "IL-33");
}

TEST(Ingest, EmptyStreamCountsNothing) {
    KnowledgeBase kb;
    auto report = ingest_lines(kb, "");
    EXPECT_EQ(report.accepted, 0u);
    EXPECT_EQ(report.rejected, 0u);
}

TEST(Ingest, EmptyPredicateIsRejectedWithReason) {
    KnowledgeBase kb;
    auto report = ingest_lines(
        kb, R"({"event_id":"x","subject":"a","predicate":"","object":"b","doc_id":"d","passage":"p"})"
            "\n");
    EXPECT_EQ(report.accepted, 0u);
    ASSERT_EQ(report.rejected, 1u);
    EXPECT_EQ(report.rejection_reasons[0].reason, "empty predicate");
}

TEST(Ingest, MalformedRecordsNeverAbortTheStream) {
    KnowledgeBase kb;
    std::string text = "not json\n";
    text += R"({"event_id":"a","subject":"x","predicate":"raises","object":"y","doc_id":"d","passage":"p","confidence":1.5})"
            "\n";
    text += R"({"event_id":"b","subject":"x","predicate":"raises","object":"y","doc_id":"d","passage":"p","qualifiers":{"mood":"?"}})"
            "\n";
    text += R"({"event_id":"c","subject":"x","predicate":"raises","object":"y","doc_id":"d","passage":"p"})"
            "\n";
    text += R"({"event_id":"c","subject":"x","predicate":"raises","object":"z","doc_id":"d","passage":"p"})"
            "\n\n";
    auto report = ingest_lines(kb, text);
    EXPECT_EQ(report.accepted, 1u);
    EXPECT_EQ(report.rejected, 4u);
    EXPECT_EQ(report.accepted + report.rejected, 5u);
}

TEST(Ingest, CountConservationOnRandomStreams) {
    std::mt19937_64 rng(7);
    for (int round = 0; round < 20; ++round) {
        KnowledgeBase kb;
        std::string text;
        std::size_t lines = 0;
        for (const auto& e : cora::testing::random_kb_events(rng, 40)) {
            json doc = e;
            if (rng() % 5 == 0) doc.erase("subject");
            if (rng() % 7 == 0) doc["confidence"] = -1;
            text += doc.dump() + "\n";
            ++lines;
        }
        auto report = ingest_lines(kb, text);
        EXPECT_EQ(report.accepted + report.rejected, lines);
        EXPECT_EQ(report.accepted, kb.events().size());
    }
}

TEST(Ingest, PersistsToRootAndReloads) {
    auto dir = temp_dir("persist");
    {
        auto kb = KnowledgeBase::open(dir);
        auto report = ingest_lines(kb, std::string(kIl33) + "\n");
        EXPECT_EQ(report.accepted, 1u);
    }
    auto kb = KnowledgeBase::load(dir);
    ASSERT_EQ(kb.events().size(), 1u);
    EXPECT_EQ(kb.events()[0].subject, "IL-33");
    fs::remove_all(dir);
}

TEST(Ingest, UnwritableStoreFailsBeforeMutation) {
    auto dir = temp_dir("readonly");
    auto kb = KnowledgeBase::open(dir);
    fs::create_directories(dir / "events.jsonl");  // a directory cannot be opened for append
    std::istringstream in(std::string(kIl33) + "\n");
    EXPECT_THROW(ingest_events(in, kb), StorageError);
    EXPECT_TRUE(kb.events().empty());
    fs::remove_all(dir);
}

TEST(Aliases, ResolveThroughAliasAndIdentity) {
    AliasTable t;
    t.register_canonical("rheumatoid arthritis");
    t.register_canonical("inflation");
    t.add_alias("RA", "rheumatoid arthritis");
    EXPECT_EQ(t.resolve("RA"), "rheumatoid arthritis");
    EXPECT_EQ(t.resolve("ra "), "rheumatoid arthritis");
    EXPECT_EQ(t.resolve("inflation"), "inflation");
    EXPECT_FALSE(t.resolve("Inflation expectations").has_value());
    EXPECT_EQ(t.resolve("Inflation Expectations", true), "inflation expectations");
}

TEST(Aliases, ResolutionIsIdempotent) {
    AliasTable t;
    t.add_alias("b", "c");
    t.add_alias("a", "b");  // chains collapse onto the canonical id
    t.add_alias("x", "y");
    for (const char* label : {"a", "b", "c", "x", "y", "unknown"}) {
        auto once = t.resolve(label, true);
        ASSERT_TRUE(once.has_value());
        EXPECT_EQ(t.resolve(*once, true), once) << label;
    }
    EXPECT_EQ(t.resolve("a"), "c");
}

TEST(Types, AncestorsTerminateAndCyclesAreRejected) {
    auto h = TypeHierarchy::from_json(json{{"Autoimmune Disease", {"Disease"}}, {"Disease", {"Condition"}}});
    EXPECT_EQ(h.ancestors("Autoimmune Disease"), (std::set<std::string>{"Disease", "Condition"}));
    EXPECT_TRUE(h.is_a("Autoimmune Disease", "Condition"));
    EXPECT_TRUE(h.is_a("Disease", "Disease"));
    EXPECT_FALSE(h.is_a("Disease", "Autoimmune Disease"));
    EXPECT_THROW(TypeHierarchy::from_json(json{{"A", {"B"}}, {"B", {"A"}}}), InvalidArgument);
}

TEST(Neighbors, MatchesLinearScanOnFixture) {
    auto kb = KnowledgeBase::load(cora::testing::data_dir() / "macro_kb");
    EXPECT_TRUE(kb.load_report().rejection_reasons.empty());
    for (const auto& concept_id : kb.concepts()) {
        std::vector<std::string> want;
        for (const auto& e : kb.events())
            if (kb.canonical_subject(e) == concept_id) want.push_back(e.event_id);
        std::sort(want.begin(), want.end());
        std::vector<std::string> got;
        for (const auto& e : kb.neighbors(concept_id, Direction::outgoing)) got.push_back(e.event_id);
        EXPECT_EQ(got, want) << concept_id;
    }
}

TEST(Neighbors, InflationHasThreeOutgoingEventsSorted) {
    auto kb = KnowledgeBase::load(cora::testing::data_dir() / "macro_kb");
    std::vector<std::string> got;
    for (const auto& e : kb.neighbors("high inflation", Direction::outgoing)) got.push_back(e.event_id);
    EXPECT_EQ(got, (std::vector<std::string>{"m001", "m002", "m003"}));
}

TEST(Neighbors, AliasLabelGivesCanonicalAnswer) {
    auto kb = KnowledgeBase::load(cora::testing::data_dir() / "macro_kb");
    auto by_alias = kb.neighbors("GDP growth", Direction::both);
    auto canonical = kb.neighbors("economic growth", Direction::both);
    EXPECT_EQ(by_alias, canonical);
    EXPECT_FALSE(canonical.empty());
    EXPECT_TRUE(kb.neighbors("an isolated concept", Direction::both).empty());
}

TEST(Neighbors, RebuildEqualsIncrementalIndex) {
    auto kb = KnowledgeBase::load(cora::testing::data_dir() / "bio_kb");
    const auto before = kb.index();
    std::map<ConceptId, std::vector<EventRecord>> answers;
    for (const auto& c : kb.concepts()) answers[c] = kb.neighbors(c, Direction::both);
    kb.rebuild_index();
    EXPECT_EQ(kb.index(), before);
    for (const auto& c : kb.concepts()) EXPECT_EQ(kb.neighbors(c, Direction::both), answers[c]);
}

TEST(Neighbors, RaAliasResolvesInBioFixture) {
    auto kb = KnowledgeBase::load(cora::testing::data_dir() / "bio_kb");
    EXPECT_EQ(kb.resolve("RA"), "rheumatoid arthritis");
    EXPECT_EQ(kb.neighbors("RA", Direction::incoming).size(), 1u);
    EXPECT_EQ(kb.concept_type("rheumatoid arthritis"), "Autoimmune Disease");
    EXPECT_TRUE(kb.types().is_a("Autoimmune Disease", "Disease"));
}
