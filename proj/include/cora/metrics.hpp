#pragma once
// Answer-verifiability and complexity metrics over expert annotations.

#include <optional>
#include <string>
#include <vector>

#include "cora/causal_model.hpp"
#include "json.hpp"

namespace cora {

struct Citation {
    std::string citation_id;
    bool valid = false;  // real, scholarly source
};

struct Claim {
    std::string claim_id;
    std::vector<Citation> citations;
    bool justified = false;
    bool relevant = false;
};

struct AnswerAnnotation {
    std::string answer_id;
    std::vector<Claim> claims;
};

struct ComplexityAnnotation {
    std::string answer_id;
    int max_hops = 0;
    int num_concepts = 0;
};

// Parse JSON arrays; SchemaError carries the offending path.
std::vector<AnswerAnnotation> annotations_from_json(const nlohmann::json& doc);
std::vector<ComplexityAnnotation> complexity_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const std::vector<AnswerAnnotation>& annotations);

std::vector<Issue> validate_annotations(const std::vector<AnswerAnnotation>& annotations);

struct MetricsOptions {
    bool count_all_citations = false;  // citation density over all citations instead of valid ones
    std::string system = "Cora";       // row label in rendered tables
};

struct SpreadStat {
    double mean = 0.0;
    std::optional<double> stddev;  // sample std; empty when n < 2
};

struct ComplexityStats {
    std::size_t answers = 0;
    SpreadStat max_hops;
    SpreadStat num_concepts;
};

// Rates are fractions in [0,1]; empty when their denominator is zero.
struct MetricsReport {
    std::string system;
    bool count_all_citations = false;
    std::size_t answers = 0;
    std::size_t claims = 0;
    std::size_t citations = 0;
    std::size_t valid_citations = 0;

    double claim_density = 0.0;
    std::optional<double> citation_density;
    std::optional<double> hallucination_rate;
    std::optional<double> citation_rate;
    std::optional<double> justification_rate;
    std::optional<double> relevance_rate;
    std::optional<ComplexityStats> complexity;

    nlohmann::json to_json() const;
    std::string to_text() const;
};

// Throws InvalidArgument for zero answers, annotation issues, or complexity
// records that do not line up with the answers.
MetricsReport compute_metrics(const std::vector<AnswerAnnotation>& annotations,
                              const std::optional<std::vector<ComplexityAnnotation>>& complexity = std::nullopt,
                              const MetricsOptions& options = {});

// "2.5 ±2.1"; the spread is omitted when undefined.
std::string format_spread(const SpreadStat& s, int decimals = 1);

}  // namespace cora
