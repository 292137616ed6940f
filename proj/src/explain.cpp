#include <set>

#include "cora/inference.hpp"
#include "cora/text.hpp"

namespace cora {

namespace {

std::string quoted_label(const CausalModel& model, const NodeId& id) {
    const Node* n = model.find_node(id);
    return "\"" + (n ? n->label : id) + "\"";
}

std::string hop_tag(const Edge& e) {
    std::string tag;
    if (e.kind == EdgeKind::influence)
        tag = e.polarity == Polarity::direct ? "direct" : "inverse";
    else
        tag = e.effect == TriggerEffect::activate ? "activates" : "triggers " + to_string(e.effect);
    tag += ", w=" + format_fixed(e.weight, 2);
    std::set<std::string> docs;
    for (const auto& ev : e.evidence) docs.insert(ev.doc_id);
    std::string cite;
    for (const auto& d : docs) cite += (cite.empty() ? "" : ", ") + d;
    if (!cite.empty())
        tag += "; cites " + cite;
    else if (e.unevidenced)
        tag += "; template-derived, unevidenced";
    else
        tag += "; no evidence";
    return tag;
}

std::string render_chain(const CausalModel& model, const NodeId& start, const std::vector<EdgeId>& hops) {
    std::string out = quoted_label(model, start);
    for (const auto& id : hops) {
        const Edge* e = model.find_edge(id);
        if (!e) {
            out += " --" + id + "--> ?";
            continue;
        }
        out += " --[" + id + ": " + hop_tag(*e) + "]--> " + quoted_label(model, e->target);
    }
    return out;
}

void pressure_section(std::string& out, const CausalModel& model, const InferenceResult& result, Sign sign,
                      std::size_t k) {
    out += sign == Sign::positive ? "Upward pressures:\n" : "Downward pressures:\n";
    std::size_t shown = 0, total = 0;
    for (const auto& p : result.paths) {
        if (p.sign != sign) continue;
        ++total;
        if (shown == k) continue;
        ++shown;
        out += "  " + std::to_string(shown) + ". " + render_chain(model, p.source, p.hops) + " (strength " +
               format_fixed(p.strength, 3) + ")\n";
    }
    if (total == 0) out += "  none\n";
    if (total > shown) out += "  ... and " + std::to_string(total - shown) + " more\n";
}

}  // namespace

std::string explain(const CausalModel& model, const InferenceResult& result, std::size_t k) {
    std::string out;
    if (result.paths.empty()) {
        out += "No causal paths found from the assumed factors to the target.";
    } else {
        const auto& v = result.verdict;
        out += "The target " + quoted_label(model, result.target) + " is ";
        switch (v.direction) {
            case Trend::increasing: out += "likely increasing"; break;
            case Trend::decreasing: out += "likely decreasing"; break;
            case Trend::ambiguous: out += "ambiguous: the opposing pressures do not clearly net out"; break;
            case Trend::steady: out += "steady"; break;
        }
        out += " (upward mass " + format_fixed(v.upward_mass, 3) + ", downward mass " +
               format_fixed(v.downward_mass, 3) + ", tau " + format_fixed(v.tau, 3) + ").\n";
        pressure_section(out, model, result, Sign::positive, k);
        pressure_section(out, model, result, Sign::negative, k);
    }
    for (const auto& c : result.contradictions) {
        if (!out.empty() && out.back() != '\n') out += '\n';
        out += "Contradiction: mutually exclusive states ";
        for (std::size_t i = 0; i < c.members.size(); ++i)
            out += (i ? ", " : "") + quoted_label(model, c.members[i]);
        out += " are active at the same time; they cannot cancel each other out.\n";
        for (const auto& ch : c.chains) {
            out += "  - " + quoted_label(model, ch.member) + ": ";
            out += ch.assumed ? "assumed" : "activated via " + render_chain(model, ch.origin, ch.triggers);
            out += "\n";
        }
    }
    while (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
}

}  // namespace cora
