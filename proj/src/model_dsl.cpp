// Structured-English model language.
//
//   quantity "L" [is a "Type"].
//   state "L" [of "Q"] [is a "Type"].
//   "A" influences "B" (directly|inversely) [with weight W] [as "id"]
//       [citing "doc": "passage"{, "doc": "passage"}] [unevidenced].
//   "S" triggers ("T" | increase of "Q" | decrease of "Q") [...same suffixes].
//   states "S1", "S2"{, "Sn"} are mutually exclusive.
//   assume "S".   assume "Q" (increasing|decreasing|steady).
//   query "N".
//
// Keywords are case-insensitive, `#` starts a line comment, and references
// resolve through label normalization, so forward references are allowed.
// Edges without `as` get the id "e<k>" for the k-th edge statement.

#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include "cora/causal_model.hpp"
#include "cora/text.hpp"

namespace cora {

std::string ParseError::to_string() const {
    return std::to_string(line) + ":" + std::to_string(column) + ": " + message;
}

namespace {

enum class Tok { word, string, number, period, comma, colon, end, bad };

struct Token {
    Tok kind = Tok::end;
    std::string text;
    double number = 0.0;
    std::size_t line = 1;
    std::size_t column = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token t;
            t.line = line_;
            t.column = col_;
            if (pos_ >= src_.size()) {
                t.kind = Tok::end;
                out.push_back(t);
                return out;
            }
            char c = src_[pos_];
            if (c == '"') {
                lex_string(t);
            } else if (is_digit(c) || ((c == '-' || c == '+') && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
                lex_number(t);
            } else if (is_word_char(c)) {
                while (pos_ < src_.size() && (is_word_char(src_[pos_]) || src_[pos_] == '-')) t.text += advance();
                t.kind = Tok::word;
            } else if (c == '.') {
                advance();
                t.kind = Tok::period;
            } else if (c == ',') {
                advance();
                t.kind = Tok::comma;
            } else if (c == ':') {
                advance();
                t.kind = Tok::colon;
            } else {
                t.kind = Tok::bad;
                t.text = std::string("unexpected character '") + printable(advance()) + "'";
            }
            out.push_back(std::move(t));
        }
    }

private:
    static bool is_digit(char c) { return c >= '0' && c <= '9'; }
    static bool is_word_char(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
    }
    static std::string printable(char c) {
        auto u = static_cast<unsigned char>(c);
        if (u >= 0x20 && u < 0x7f) return std::string(1, c);
        char buf[8];
        std::snprintf(buf, sizeof buf, "\\x%02x", u);
        return buf;
    }

    char advance() {
        char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip_space() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
                advance();
            } else {
                break;
            }
        }
    }

    void lex_string(Token& t) {
        advance();  // opening quote
        t.kind = Tok::string;
        while (pos_ < src_.size()) {
            char c = advance();
            if (c == '"') return;
            if (c == '\n') break;
            if (c == '\\') {
                if (pos_ >= src_.size()) break;
                char e = advance();
                switch (e) {
                    case 'n': t.text += '\n'; break;
                    case 't': t.text += '\t'; break;
                    case 'r': t.text += '\r'; break;
                    case '"': t.text += '"'; break;
                    case '\\': t.text += '\\'; break;
                    default:
                        t.kind = Tok::bad;
                        t.text = std::string("unknown escape '\\") + printable(e) + "'";
                        skip_to_quote();
                        return;
                }
                continue;
            }
            t.text += c;
        }
        t.kind = Tok::bad;
        t.text = "unterminated string";
    }

    void skip_to_quote() {
        while (pos_ < src_.size() && src_[pos_] != '\n') {
            char c = advance();
            if (c == '\\' && pos_ < src_.size() && src_[pos_] != '\n') advance();
            else if (c == '"') return;
        }
    }

    void lex_number(Token& t) {
        const std::size_t start = pos_;
        if (src_[pos_] == '-' || src_[pos_] == '+') advance();
        while (pos_ < src_.size() && is_digit(src_[pos_])) advance();
        // a '.' belongs to the number only when a digit follows; otherwise it ends the statement
        if (pos_ + 1 < src_.size() && src_[pos_] == '.' && is_digit(src_[pos_ + 1])) {
            advance();
            while (pos_ < src_.size() && is_digit(src_[pos_])) advance();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t look = pos_ + 1;
            if (look < src_.size() && (src_[look] == '-' || src_[look] == '+')) ++look;
            if (look < src_.size() && is_digit(src_[look])) {
                while (pos_ < look) advance();
                while (pos_ < src_.size() && is_digit(src_[pos_])) advance();
            }
        }
        t.text = std::string(src_.substr(start, pos_ - start));
        std::string_view digits = t.text;
        if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), t.number);
        if (ec != std::errc{} || ptr != digits.data() + digits.size() || !std::isfinite(t.number)) {
            t.kind = Tok::bad;
            t.text = "invalid number '" + t.text + "'";
            return;
        }
        t.kind = Tok::number;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

struct Ref {
    std::string label;
    std::size_t line = 0, column = 0;
};

struct NodeDecl {
    Ref name;
    NodeKind kind = NodeKind::quantity;
    std::optional<Ref> linked;
    std::optional<std::string> type;
};

struct EdgeDecl {
    Token at;
    Ref source, target;
    EdgeKind kind = EdgeKind::influence;
    Polarity polarity = Polarity::direct;
    TriggerEffect effect = TriggerEffect::activate;
    double weight = kDefaultEdgeWeight;
    std::optional<std::string> id;
    std::vector<Evidence> evidence;
    bool unevidenced = false;
};

struct MutexDecl {
    Token at;
    std::vector<Ref> members;
};

struct AssumeDecl {
    Ref node;
    std::optional<AssumedValue> value;
};

struct SyntaxError {};

bool keyword_is(const Token& t, std::string_view kw) {
    return t.kind == Tok::word && normalize_label(t.text) == kw;
}

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    void run() {
        while (peek().kind != Tok::end) {
            try {
                statement();
            } catch (const SyntaxError&) {
                synchronize();
            }
        }
    }

    std::vector<NodeDecl> nodes;
    std::vector<EdgeDecl> edges;
    std::vector<MutexDecl> mutexes;
    std::vector<AssumeDecl> assumes;
    std::vector<Ref> queries;
    std::vector<ParseError> errors;

private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& next() {
        const Token& t = toks_[pos_];
        if (t.kind != Tok::end) ++pos_;
        return t;
    }

    [[noreturn]] void fail(const Token& at, std::string message) {
        if (at.kind == Tok::bad) message = at.text;
        errors.push_back({at.line, at.column, std::move(message)});
        throw SyntaxError{};
    }

    void synchronize() {
        while (peek().kind != Tok::end) {
            if (next().kind == Tok::period) return;
        }
    }

    static std::string describe(const Token& t) {
        switch (t.kind) {
            case Tok::word: return "'" + t.text + "'";
            case Tok::string: return "string \"" + t.text + "\"";
            case Tok::number: return "number " + t.text;
            case Tok::period: return "'.'";
            case Tok::comma: return "','";
            case Tok::colon: return "':'";
            case Tok::end: return "end of input";
            case Tok::bad: return t.text;
        }
        return "token";
    }

    void expect_keyword(std::string_view kw) {
        const Token& t = peek();
        if (!keyword_is(t, kw)) fail(t, "expected '" + std::string(kw) + "' but found " + describe(t));
        next();
    }

    bool accept_keyword(std::string_view kw) {
        if (!keyword_is(peek(), kw)) return false;
        next();
        return true;
    }

    Ref expect_label() {
        const Token& t = peek();
        if (t.kind != Tok::string) fail(t, "expected a quoted label but found " + describe(t));
        next();
        if (normalize_label(t.text).empty()) fail(t, "empty label");
        return {t.text, t.line, t.column};
    }

    std::string expect_string() {
        const Token& t = peek();
        if (t.kind != Tok::string) fail(t, "expected a quoted string but found " + describe(t));
        next();
        return t.text;
    }

    void expect_period() {
        const Token& t = peek();
        if (t.kind != Tok::period) fail(t, "expected '.' but found " + describe(t));
        next();
    }

    std::optional<std::string> type_clause() {
        if (!accept_keyword("is")) return std::nullopt;
        if (!accept_keyword("a")) expect_keyword("an");
        auto t = expect_string();
        if (normalize_label(t).empty()) fail(toks_[pos_ - 1], "empty type label");
        return t;
    }

    void statement() {
        const Token& head = peek();
        if (head.kind == Tok::string) return edge_statement();
        if (head.kind != Tok::word) fail(head, "expected a statement but found " + describe(head));
        const std::string kw = normalize_label(head.text);
        if (kw == "quantity") {
            next();
            NodeDecl d{expect_label(), NodeKind::quantity, std::nullopt, std::nullopt};
            d.type = type_clause();
            expect_period();
            nodes.push_back(std::move(d));
        } else if (kw == "state") {
            next();
            NodeDecl d{expect_label(), NodeKind::state, std::nullopt, std::nullopt};
            if (accept_keyword("of")) d.linked = expect_label();
            d.type = type_clause();
            expect_period();
            nodes.push_back(std::move(d));
        } else if (kw == "states") {
            MutexDecl m{next(), {}};
            m.members.push_back(expect_label());
            while (peek().kind == Tok::comma) {
                next();
                m.members.push_back(expect_label());
            }
            expect_keyword("are");
            expect_keyword("mutually");
            expect_keyword("exclusive");
            expect_period();
            if (m.members.size() < 2) fail(m.at, "a mutual exclusion needs at least two states");
            mutexes.push_back(std::move(m));
        } else if (kw == "assume") {
            next();
            AssumeDecl a{expect_label(), std::nullopt};
            if (accept_keyword("increasing"))
                a.value = AssumedValue::increasing;
            else if (accept_keyword("decreasing"))
                a.value = AssumedValue::decreasing;
            else if (accept_keyword("steady"))
                a.value = AssumedValue::steady;
            expect_period();
            assumes.push_back(std::move(a));
        } else if (kw == "query") {
            next();
            Ref r = expect_label();
            expect_period();
            queries.push_back(std::move(r));
        } else {
            fail(head, "unknown statement " + describe(head));
        }
    }

    void edge_statement() {
        EdgeDecl e;
        e.at = peek();
        e.source = expect_label();
        const Token& verb = peek();
        if (accept_keyword("influences")) {
            e.kind = EdgeKind::influence;
            e.target = expect_label();
            if (accept_keyword("directly"))
                e.polarity = Polarity::direct;
            else if (accept_keyword("inversely"))
                e.polarity = Polarity::inverse;
            else
                fail(peek(), "expected 'directly' or 'inversely' but found " + describe(peek()));
        } else if (accept_keyword("triggers")) {
            e.kind = EdgeKind::trigger;
            if (accept_keyword("increase")) {
                e.effect = TriggerEffect::increase;
                expect_keyword("of");
            } else if (accept_keyword("decrease")) {
                e.effect = TriggerEffect::decrease;
                expect_keyword("of");
            } else {
                e.effect = TriggerEffect::activate;
            }
            e.target = expect_label();
        } else {
            fail(verb, "expected 'influences' or 'triggers' but found " + describe(verb));
        }
        if (accept_keyword("with")) {
            expect_keyword("weight");
            const Token& w = peek();
            if (w.kind != Tok::number) fail(w, "expected a weight but found " + describe(w));
            next();
            if (!(w.number > 0.0 && w.number <= 1.0)) fail(w, "weight out of range (0,1]");
            e.weight = w.number;
        }
        if (accept_keyword("as")) {
            const Token& t = peek();
            e.id = expect_string();
            if (e.id->empty()) fail(t, "empty edge id");
        }
        if (accept_keyword("citing")) {
            for (;;) {
                Evidence ev;
                ev.doc_id = expect_string();
                if (peek().kind != Tok::colon) fail(peek(), "expected ':' after the document id but found " + describe(peek()));
                next();
                ev.passage = expect_string();
                e.evidence.push_back(std::move(ev));
                if (peek().kind != Tok::comma) break;
                next();
            }
        }
        if (accept_keyword("unevidenced")) e.unevidenced = true;
        expect_period();
        edges.push_back(std::move(e));
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

// Resolves references and checks the model-level rules.
ParseResult build(Parser& p, std::string_view text) {
    auto& errors = p.errors;
    auto error_at = [&](const Ref& r, std::string message) { errors.push_back({r.line, r.column, std::move(message)}); };

    CausalModel model;
    std::map<NodeId, std::size_t> index;
    for (const auto& d : p.nodes) {
        NodeId id = normalize_label(d.name.label);
        if (index.count(id)) {
            error_at(d.name, "duplicate declaration of \"" + d.name.label + "\"");
            continue;
        }
        index.emplace(id, model.nodes.size());
        model.nodes.push_back({id, d.name.label, d.kind, d.type, std::nullopt});
    }
    auto lookup = [&](const Ref& r) -> const Node* {
        auto it = index.find(normalize_label(r.label));
        if (it == index.end()) {
            error_at(r, "unknown node \"" + r.label + "\"");
            return nullptr;
        }
        return &model.nodes[it->second];
    };

    for (const auto& d : p.nodes) {
        if (!d.linked) continue;
        const Node* q = lookup(*d.linked);
        if (!q) continue;
        if (q->kind != NodeKind::quantity) {
            error_at(*d.linked, "\"" + d.linked->label + "\" is not a quantity");
            continue;
        }
        auto it = index.find(normalize_label(d.name.label));
        if (it != index.end() && model.nodes[it->second].label == d.name.label && !model.nodes[it->second].linked_quantity)
            model.nodes[it->second].linked_quantity = q->id;
    }

    std::set<EdgeId> edge_ids;
    for (std::size_t k = 0; k < p.edges.size(); ++k) {
        const auto& d = p.edges[k];
        Edge e;
        e.id = d.id ? *d.id : "e" + std::to_string(k + 1);
        e.kind = d.kind;
        e.polarity = d.polarity;
        e.effect = d.effect;
        e.weight = d.weight;
        e.evidence = d.evidence;
        e.unevidenced = d.unevidenced;
        const Node* src = lookup(d.source);
        const Node* dst = lookup(d.target);
        if (!edge_ids.insert(e.id).second) {
            errors.push_back({d.at.line, d.at.column, "duplicate edge id \"" + e.id + "\""});
            continue;
        }
        if (!src || !dst) continue;
        if (d.kind == EdgeKind::influence) {
            if (src->kind != NodeKind::quantity || dst->kind != NodeKind::quantity) {
                errors.push_back({d.at.line, d.at.column, "influence endpoints must be quantities"});
                continue;
            }
        } else {
            if (src->kind != NodeKind::state) {
                error_at(d.source, "trigger source \"" + d.source.label + "\" must be a state");
                continue;
            }
            if ((d.effect == TriggerEffect::activate) != (dst->kind == NodeKind::state)) {
                error_at(d.target, "effect/target kind mismatch for \"" + d.target.label + "\"");
                continue;
            }
        }
        e.source = src->id;
        e.target = dst->id;
        model.edges.push_back(std::move(e));
    }

    for (const auto& d : p.mutexes) {
        MutexConstraint m;
        std::set<NodeId> seen;
        bool ok = true;
        for (const auto& r : d.members) {
            const Node* n = lookup(r);
            if (!n) {
                ok = false;
                continue;
            }
            if (n->kind != NodeKind::state) {
                error_at(r, "\"" + r.label + "\" is not a state");
                ok = false;
            } else if (!seen.insert(n->id).second) {
                error_at(r, "\"" + r.label + "\" listed twice");
                ok = false;
            }
            m.members.push_back(n->id);
        }
        if (ok) model.mutexes.push_back(std::move(m));
    }

    if (p.queries.size() > 1)
        for (std::size_t i = 1; i < p.queries.size(); ++i) error_at(p.queries[i], "only one query is allowed");
    if (!p.assumes.empty() && p.queries.empty())
        error_at(p.assumes.front().node, "assume statements require a query");
    if (!p.queries.empty()) {
        Scenario s;
        if (const Node* t = lookup(p.queries.front())) s.target = t->id;
        std::set<NodeId> assumed;
        for (const auto& a : p.assumes) {
            const Node* n = lookup(a.node);
            if (!n) continue;
            if (!assumed.insert(n->id).second) {
                error_at(a.node, "\"" + a.node.label + "\" assumed twice");
                continue;
            }
            AssumedValue v = a.value.value_or(AssumedValue::active);
            if (n->kind == NodeKind::state && a.value) {
                error_at(a.node, "state \"" + a.node.label + "\" can only be assumed active");
                continue;
            }
            if (n->kind == NodeKind::quantity && !a.value) {
                error_at(a.node, "quantity \"" + a.node.label + "\" needs increasing, decreasing or steady");
                continue;
            }
            s.assumptions.push_back({n->id, v});
        }
        model.scenario = std::move(s);
    }

    ParseResult result;
    if (errors.empty()) {
        for (const auto& issue : validate(model)) errors.push_back({1, 1, issue.to_string()});
    }
    if (!errors.empty()) {
        std::stable_sort(errors.begin(), errors.end(), [](const ParseError& a, const ParseError& b) {
            return std::tie(a.line, a.column) < std::tie(b.line, b.column);
        });
        result.errors = std::move(errors);
        return result;
    }
    model.provenance = {{"origin", "dsl"}, {"source_hash", stable_hash_hex(text)}};
    result.model = std::move(model);
    return result;
}

std::string quote(std::string_view text) {
    std::string out = "\"";
    for (char c : text) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    return out + "\"";
}

}  // namespace

ParseResult parse_model(std::string_view text) {
    try {
        Parser parser(Lexer(text).run());
        parser.run();
        return build(parser, text);
    } catch (const std::exception& e) {
        ParseResult r;
        r.errors.push_back({0, 0, std::string("internal parser error: ") + e.what()});
        return r;
    }
}

std::string serialize_model(const CausalModel& input) {
    const CausalModel m = canonicalize(input);
    auto label_of = [&](const NodeId& id) {
        const Node* n = m.find_node(id);
        return quote(n ? n->label : id);
    };
    std::string out;
    for (const auto& n : m.nodes) {
        out += to_string(n.kind) + " " + quote(n.label);
        if (n.linked_quantity) out += " of " + label_of(*n.linked_quantity);
        if (n.concept_type) {
            const bool vowel = !n.concept_type->empty() && std::string("AEIOUaeiou").find(n.concept_type->front()) != std::string::npos;
            out += (vowel ? " is an " : " is a ") + quote(*n.concept_type);
        }
        out += ".\n";
    }
    for (std::size_t k = 0; k < m.edges.size(); ++k) {
        const auto& e = m.edges[k];
        out += label_of(e.source);
        if (e.kind == EdgeKind::influence) {
            out += " influences " + label_of(e.target) + (e.polarity == Polarity::direct ? " directly" : " inversely");
        } else {
            out += " triggers ";
            if (e.effect == TriggerEffect::increase) out += "increase of ";
            if (e.effect == TriggerEffect::decrease) out += "decrease of ";
            out += label_of(e.target);
        }
        out += " with weight " + format_double(e.weight);
        if (e.id != "e" + std::to_string(k + 1)) out += " as " + quote(e.id);
        if (!e.evidence.empty()) {
            out += " citing ";
            for (std::size_t i = 0; i < e.evidence.size(); ++i) {
                if (i) out += ", ";
                out += quote(e.evidence[i].doc_id) + ": " + quote(e.evidence[i].passage);
            }
        }
        if (e.unevidenced) out += " unevidenced";
        out += ".\n";
    }
    for (const auto& mx : m.mutexes) {
        out += "states ";
        for (std::size_t i = 0; i < mx.members.size(); ++i) {
            if (i) out += ", ";
            out += label_of(mx.members[i]);
        }
        out += " are mutually exclusive.\n";
    }
    if (m.scenario) {
        for (const auto& a : m.scenario->assumptions) {
            out += "assume " + label_of(a.node);
            if (a.value != AssumedValue::active) out += " " + to_string(a.value);
            out += ".\n";
        }
        out += "query " + label_of(m.scenario->target) + ".\n";
    }
    return out;
}

}  // namespace cora
