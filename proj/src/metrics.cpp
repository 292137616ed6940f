#include "cora/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "cora/errors.hpp"
#include "cora/text.hpp"

namespace cora {

using nlohmann::json;

namespace {

const json& member(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key)) throw SchemaError(path + "." + key, "missing required field");
    return obj[key];
}

std::string string_field(const json& obj, const char* key, const std::string& path) {
    const json& v = member(obj, key, path);
    if (!v.is_string()) throw SchemaError(path + "." + key, "expected a string");
    return v.get<std::string>();
}

bool flag_field(const json& obj, const char* key, const std::string& path, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_boolean()) throw SchemaError(path + "." + key, "expected a boolean");
    return obj[key].get<bool>();
}

int count_field(const json& obj, const char* key, const std::string& path) {
    const json& v = member(obj, key, path);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw SchemaError(path + "." + key, "expected a non-negative integer");
    return v.get<int>();
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

SpreadStat spread(const std::vector<double>& xs) {
    SpreadStat s;
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() >= 2) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

json number_or_null(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json percent_or_null(const std::optional<double>& v) { return v ? json(*v * 100.0) : json(nullptr); }

std::string density_cell(const std::optional<double>& v) { return v ? format_fixed(*v, 2) : "n/a"; }

std::string percent_cell(const std::optional<double>& v) { return v ? format_fixed(*v * 100.0, 2) + "%" : "n/a"; }

json spread_json(const SpreadStat& s) { return json{{"mean", s.mean}, {"std", number_or_null(s.stddev)}}; }

const std::vector<std::string> kMetricColumns = {"System",        "Claim Density",      "Citation Density",
                                                  "Source Hallucination Rate", "Citation Rate",
                                                  "Justification Rate", "Relevance Rate"};
const std::vector<std::string> kComplexityColumns = {"System", "Maximum Number of Hops", "Number of Concepts"};

// code points, so "±" pads like one column
std::size_t display_width(const std::string& s) {
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

std::string render_table(const std::vector<std::string>& header, const std::vector<std::string>& row) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t i = 0; i < header.size(); ++i) width[i] = std::max(display_width(header[i]), display_width(row[i]));
    auto line = [&](const std::vector<std::string>& cells) {
        std::string out = "|";
        for (std::size_t i = 0; i < cells.size(); ++i)
            out += " " + cells[i] + std::string(width[i] - display_width(cells[i]), ' ') + " |";
        return out + "\n";
    };
    std::string rule = "|";
    for (auto w : width) rule += std::string(w + 2, '-') + "|";
    return line(header) + rule + "\n" + line(row);
}

}  // namespace

std::vector<AnswerAnnotation> annotations_from_json(const json& doc) {
    if (!doc.is_array()) throw SchemaError("$", "expected an array of answers");
    std::vector<AnswerAnnotation> out;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const std::string path = "$[" + std::to_string(i) + "]";
        const json& a = doc[i];
        if (!a.is_object()) throw SchemaError(path, "expected an object");
        AnswerAnnotation answer;
        answer.answer_id = string_field(a, "answer_id", path);
        const json& claims = member(a, "claims", path);
        if (!claims.is_array()) throw SchemaError(path + ".claims", "expected an array");
        for (std::size_t j = 0; j < claims.size(); ++j) {
            const std::string cpath = path + ".claims[" + std::to_string(j) + "]";
            const json& c = claims[j];
            if (!c.is_object()) throw SchemaError(cpath, "expected an object");
            Claim claim;
            claim.claim_id = string_field(c, "claim_id", cpath);
            claim.justified = flag_field(c, "justified", cpath, false);
            claim.relevant = flag_field(c, "relevant", cpath, false);
            if (c.contains("citations")) {
                const json& cites = c["citations"];
                if (!cites.is_array()) throw SchemaError(cpath + ".citations", "expected an array");
                for (std::size_t k = 0; k < cites.size(); ++k) {
                    const std::string kpath = cpath + ".citations[" + std::to_string(k) + "]";
                    if (!cites[k].is_object()) throw SchemaError(kpath, "expected an object");
                    const json& valid = member(cites[k], "valid", kpath);
                    if (!valid.is_boolean()) throw SchemaError(kpath + ".valid", "expected a boolean");
                    claim.citations.push_back({string_field(cites[k], "citation_id", kpath), valid.get<bool>()});
                }
            }
            answer.claims.push_back(std::move(claim));
        }
        out.push_back(std::move(answer));
    }
    return out;
}

std::vector<ComplexityAnnotation> complexity_from_json(const json& doc) {
    if (!doc.is_array()) throw SchemaError("$", "expected an array of complexity records");
    std::vector<ComplexityAnnotation> out;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const std::string path = "$[" + std::to_string(i) + "]";
        if (!doc[i].is_object()) throw SchemaError(path, "expected an object");
        out.push_back({string_field(doc[i], "answer_id", path), count_field(doc[i], "max_hops", path),
                       count_field(doc[i], "num_concepts", path)});
    }
    return out;
}

json to_json(const std::vector<AnswerAnnotation>& annotations) {
    json out = json::array();
    for (const auto& a : annotations) {
        json claims = json::array();
        for (const auto& c : a.claims) {
            json cites = json::array();
            for (const auto& ct : c.citations) cites.push_back({{"citation_id", ct.citation_id}, {"valid", ct.valid}});
            claims.push_back(
                {{"claim_id", c.claim_id}, {"citations", cites}, {"justified", c.justified}, {"relevant", c.relevant}});
        }
        out.push_back({{"answer_id", a.answer_id}, {"claims", claims}});
    }
    return out;
}

std::vector<Issue> validate_annotations(const std::vector<AnswerAnnotation>& annotations) {
    std::vector<Issue> issues;
    std::set<std::string> answers;
    for (const auto& a : annotations) {
        if (!answers.insert(a.answer_id).second) issues.push_back({"answer " + a.answer_id, "duplicate answer_id"});
        std::set<std::string> claim_ids;
        for (const auto& c : a.claims) {
            const std::string element = "answer " + a.answer_id + " claim " + c.claim_id;
            if (!claim_ids.insert(c.claim_id).second) issues.push_back({element, "duplicate claim_id"});
            const bool has_valid =
                std::any_of(c.citations.begin(), c.citations.end(), [](const Citation& ct) { return ct.valid; });
            if (c.justified && !has_valid) issues.push_back({element, "justified claim lacks valid citation"});
            if (c.relevant && !c.justified) issues.push_back({element, "relevant implies justified"});
        }
    }
    return issues;
}

MetricsReport compute_metrics(const std::vector<AnswerAnnotation>& annotations,
                              const std::optional<std::vector<ComplexityAnnotation>>& complexity,
                              const MetricsOptions& options) {
    if (annotations.empty()) throw InvalidArgument("no answers to evaluate");
    auto issues = validate_annotations(annotations);
    if (!issues.empty()) throw InvalidArgument("annotation issue: " + issues.front().to_string());

    MetricsReport r;
    r.system = options.system;
    r.count_all_citations = options.count_all_citations;
    r.answers = annotations.size();
    std::size_t cited = 0, justified = 0, relevant = 0;
    for (const auto& a : annotations) {
        for (const auto& c : a.claims) {
            ++r.claims;
            bool has_valid = false;
            for (const auto& ct : c.citations) {
                ++r.citations;
                if (ct.valid) {
                    ++r.valid_citations;
                    has_valid = true;
                }
            }
            cited += has_valid;
            justified += c.justified;
            relevant += c.relevant;
        }
    }
    r.claim_density = static_cast<double>(r.claims) / static_cast<double>(r.answers);
    r.citation_density = ratio(options.count_all_citations ? r.citations : r.valid_citations, r.claims);
    r.hallucination_rate = ratio(r.citations - r.valid_citations, r.citations);
    r.citation_rate = ratio(cited, r.claims);
    r.justification_rate = ratio(justified, r.claims);
    r.relevance_rate = ratio(relevant, r.claims);

    if (complexity) {
        std::set<std::string> known;
        for (const auto& a : annotations) known.insert(a.answer_id);
        std::set<std::string> seen;
        std::vector<double> hops, concepts;
        for (const auto& c : *complexity) {
            if (!known.count(c.answer_id))
                throw InvalidArgument("complexity record for unknown answer " + c.answer_id, c.answer_id);
            if (!seen.insert(c.answer_id).second)
                throw InvalidArgument("duplicate complexity record for answer " + c.answer_id, c.answer_id);
            if (c.max_hops < 0 || c.num_concepts < 0)
                throw InvalidArgument("complexity counts must be non-negative", c.answer_id);
            hops.push_back(c.max_hops);
            concepts.push_back(c.num_concepts);
        }
        r.complexity = ComplexityStats{complexity->size(), spread(hops), spread(concepts)};
    }
    return r;
}

std::string format_spread(const SpreadStat& s, int decimals) {
    std::string out = format_fixed(s.mean, decimals);
    if (s.stddev) out += " ±" + format_fixed(*s.stddev, decimals);
    return out;
}

json MetricsReport::to_json() const {
    std::vector<std::string> row = {system,
                                    format_fixed(claim_density, 2),
                                    density_cell(citation_density),
                                    percent_cell(hallucination_rate),
                                    percent_cell(citation_rate),
                                    percent_cell(justification_rate),
                                    percent_cell(relevance_rate)};
    json out{{"system", system},
             {"answers", answers},
             {"claims", claims},
             {"citations", citations},
             {"valid_citations", valid_citations},
             {"citation_density_counts", count_all_citations ? "all" : "valid"},
             {"claim_density", claim_density},
             {"citation_density", number_or_null(citation_density)},
             {"source_hallucination_rate", percent_or_null(hallucination_rate)},
             {"citation_rate", percent_or_null(citation_rate)},
             {"justification_rate", percent_or_null(justification_rate)},
             {"relevance_rate", percent_or_null(relevance_rate)},
             {"table", {{"columns", kMetricColumns}, {"rows", json::array({row})}}},
             {"complexity", nullptr}};
    if (complexity) {
        out["complexity"] = {
            {"answers", complexity->answers},
            {"max_hops", spread_json(complexity->max_hops)},
            {"num_concepts", spread_json(complexity->num_concepts)},
            {"table",
             {{"columns", kComplexityColumns},
              {"rows", json::array({json::array(
                           {system, format_spread(complexity->max_hops), format_spread(complexity->num_concepts)})})}}}};
    }
    return out;
}

std::string MetricsReport::to_text() const {
    std::string out = render_table(kMetricColumns, {system, format_fixed(claim_density, 2), density_cell(citation_density),
                                                    percent_cell(hallucination_rate), percent_cell(citation_rate),
                                                    percent_cell(justification_rate), percent_cell(relevance_rate)});
    out += "answers " + std::to_string(answers) + ", claims " + std::to_string(claims) + ", citations " +
           std::to_string(citations) + " (" + std::to_string(valid_citations) + " valid)\n";
    if (complexity) {
        out += "\n";
        out += render_table(kComplexityColumns,
                            {system, format_spread(complexity->max_hops), format_spread(complexity->num_concepts)});
    }
    return out;
}

}  // namespace cora
