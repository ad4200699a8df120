#include "evoens/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include <fmt/core.h>

namespace evoens {

GrammarError::GrammarError(GrammarErrorKind kind, std::size_t line, const std::string& message)
    : std::runtime_error(fmt::format("grammar line {}: {}", line, message))
    , kind_(kind)
    , line_(line)
{
}

namespace {

bool is_name_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Length of a `<name>` token starting at s[0], or 0 if s does not start with one.
std::size_t nonterminal_token_length(std::string_view s)
{
    if (s.size() < 3 || s.front() != '<') {
        return 0;
    }
    std::size_t i = 1;
    while (i < s.size() && is_name_char(s[i])) {
        ++i;
    }
    if (i == 1 || i >= s.size() || s[i] != '>') {
        return 0;
    }
    return i + 1;
}

struct RawToken {
    bool nonterminal = false;
    std::string text;
};

struct RawAlternative {
    std::vector<RawToken> tokens;
    std::size_t line = 0;
};

struct RawRule {
    std::string name;
    std::size_t line = 0;
    std::vector<RawAlternative> alternatives;
};

// Appends the tokens of one physical line to the rule. Alternatives may span
// lines, so a new alternative only starts after an unquoted '|'.
void tokenize_body(std::string_view body, std::size_t line, RawRule& rule, bool& pending_alternative)
{
    auto current = [&]() -> RawAlternative& {
        if (pending_alternative) {
            rule.alternatives.push_back(RawAlternative{{}, line});
            pending_alternative = false;
        }
        return rule.alternatives.back();
    };

    std::string run;
    auto flush = [&] {
        if (!run.empty()) {
            current().tokens.push_back(RawToken{false, run});
            run.clear();
        }
    };

    std::size_t i = 0;
    while (i < body.size()) {
        const char c = body[i];
        if (is_space(c)) {
            flush();
            ++i;
        } else if (c == '|') {
            flush();
            if (pending_alternative) {
                throw GrammarError(GrammarErrorKind::EmptyProduction, line,
                    fmt::format("empty alternative in rule <{}>", rule.name));
            }
            pending_alternative = true;
            ++i;
        } else if (c == '"' || c == '\'') {
            flush();
            const auto close = body.find(c, i + 1);
            if (close == std::string_view::npos) {
                throw GrammarError(GrammarErrorKind::Syntax, line, "unterminated quoted terminal");
            }
            if (close == i + 1) {
                throw GrammarError(GrammarErrorKind::EmptyProduction, line, "empty quoted terminal");
            }
            current().tokens.push_back(RawToken{false, std::string(body.substr(i + 1, close - i - 1))});
            i = close + 1;
        } else if (const auto n = nonterminal_token_length(body.substr(i)); n > 0) {
            flush();
            current().tokens.push_back(RawToken{true, std::string(body.substr(i + 1, n - 2))});
            i += n;
        } else {
            run.push_back(c);
            ++i;
        }
    }
    flush();
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<RawRule> read_rules(std::string_view text)
{
    std::vector<RawRule> rules;
    bool pending_alternative = false;
    std::size_t line_no = 0;

    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;

        const auto stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') {
            continue;
        }

        const auto head = nonterminal_token_length(stripped);
        std::string_view after = head > 0 ? trim(stripped.substr(head)) : std::string_view{};
        if (head > 0 && after.starts_with("::=")) {
            if (!rules.empty() && pending_alternative) {
                throw GrammarError(GrammarErrorKind::EmptyProduction, rules.back().line,
                    fmt::format("rule <{}> ends with an empty alternative", rules.back().name));
            }
            rules.push_back(RawRule{std::string(stripped.substr(1, head - 2)), line_no, {}});
            pending_alternative = true;
            tokenize_body(after.substr(3), line_no, rules.back(), pending_alternative);
        } else {
            if (rules.empty()) {
                throw GrammarError(GrammarErrorKind::Syntax, line_no, "text before the first rule definition");
            }
            tokenize_body(stripped, line_no, rules.back(), pending_alternative);
        }
    }
    if (!rules.empty() && pending_alternative) {
        throw GrammarError(GrammarErrorKind::EmptyProduction, rules.back().line,
            fmt::format("rule <{}> has an empty production", rules.back().name));
    }
    return rules;
}

} // namespace

Grammar Grammar::parse(std::string_view text)
{
    const auto raw = read_rules(text);
    if (raw.empty()) {
        throw GrammarError(GrammarErrorKind::EmptyProduction, 0, "grammar defines no rules");
    }

    Grammar g;
    std::map<std::string, std::uint32_t, std::less<>> nt_index;
    for (const auto& rule : raw) {
        if (nt_index.contains(rule.name)) {
            throw GrammarError(GrammarErrorKind::DuplicateDefinition, rule.line,
                fmt::format("nonterminal <{}> is defined more than once", rule.name));
        }
        nt_index.emplace(rule.name, static_cast<std::uint32_t>(g.nonterminals_.size()));
        g.nonterminals_.push_back(rule.name);
    }

    std::map<std::string, std::uint32_t, std::less<>> t_index;
    g.rules_.resize(raw.size());
    for (std::size_t r = 0; r < raw.size(); ++r) {
        for (const auto& alt : raw[r].alternatives) {
            Production p;
            for (const auto& tok : alt.tokens) {
                if (tok.nonterminal) {
                    const auto it = nt_index.find(tok.text);
                    if (it == nt_index.end()) {
                        throw GrammarError(GrammarErrorKind::UndefinedNonterminal, alt.line,
                            fmt::format("nonterminal <{}> is used but never defined", tok.text));
                    }
                    p.symbols.push_back(Symbol{false, it->second});
                } else {
                    if (tok.text.size() > 2 && tok.text.front() == '<' && tok.text.back() == '>'
                        && nt_index.contains(std::string_view(tok.text).substr(1, tok.text.size() - 2))) {
                        throw GrammarError(GrammarErrorKind::SymbolConflict, alt.line,
                            fmt::format("terminal '{}' collides with a nonterminal", tok.text));
                    }
                    auto [it, inserted] = t_index.try_emplace(tok.text, static_cast<std::uint32_t>(g.terminals_.size()));
                    if (inserted) {
                        g.terminals_.push_back(tok.text);
                    }
                    p.symbols.push_back(Symbol{true, it->second});
                }
            }
            g.rules_[r].push_back(std::move(p));
        }
    }
    g.start_ = 0;
    g.compute_heights();
    return g;
}

std::optional<std::uint32_t> Grammar::find_nonterminal(std::string_view name) const
{
    const auto it = std::find(nonterminals_.begin(), nonterminals_.end(), name);
    if (it == nonterminals_.end()) {
        return std::nullopt;
    }
    return static_cast<std::uint32_t>(it - nonterminals_.begin());
}

void Grammar::compute_heights()
{
    min_height_.assign(nonterminals_.size(), kUnbounded);
    auto production_height = [&](const Production& p) {
        std::size_t h = 1; // a terminal child is one node below this one
        for (const auto& s : p.symbols) {
            if (!s.terminal) {
                const auto child = min_height_[s.id];
                if (child == kUnbounded) {
                    return kUnbounded;
                }
                h = std::max(h, child);
            }
        }
        return h + 1;
    };

    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t nt = 0; nt < rules_.size(); ++nt) {
            for (const auto& p : rules_[nt]) {
                const auto h = production_height(p);
                if (h < min_height_[nt]) {
                    min_height_[nt] = h;
                    changed = true;
                }
            }
        }
    }
    for (auto& rule : rules_) {
        for (auto& p : rule) {
            p.min_height = production_height(p);
        }
    }
}

struct Deriver {
    static Derivation run(const Grammar& g, std::span<const Codon> genome, std::size_t max_depth)
    {
        DerivationTree tree;
        tree.grammar_ = &g;
        tree.nodes_.push_back(DerivationNode{Symbol{false, g.start()}, 1});
        tree.depth_ = 1;

        std::vector<std::uint32_t> pending{0};
        std::size_t pos = 0;
        while (!pending.empty()) {
            const auto index = pending.back();
            pending.pop_back();

            if (pos == genome.size()) {
                return InvalidDerivation{InvalidReason::CodonsExhausted, pos};
            }
            const Codon codon = genome[pos++];
            const auto nt = tree.nodes_[index].symbol.id;
            const auto rules = g.productions(nt);
            const auto choice = static_cast<std::uint32_t>(codon % rules.size());
            const auto child_depth = tree.nodes_[index].depth + 1;
            if (child_depth > max_depth) {
                return InvalidDerivation{InvalidReason::DepthExceeded, pos};
            }

            const auto& symbols = rules[choice].symbols;
            const auto first = static_cast<std::uint32_t>(tree.nodes_.size());
            {
                auto& n = tree.nodes_[index];
                n.production = choice;
                n.codon = codon;
                n.first_child = first;
                n.child_count = static_cast<std::uint32_t>(symbols.size());
            }
            tree.consumed_.push_back(codon);
            for (const auto& s : symbols) {
                tree.nodes_.push_back(DerivationNode{s, child_depth});
            }
            tree.depth_ = std::max<std::size_t>(tree.depth_, child_depth);
            for (std::size_t k = symbols.size(); k-- > 0;) {
                if (!symbols[k].terminal) {
                    pending.push_back(first + static_cast<std::uint32_t>(k));
                }
            }
        }
        return tree;
    }
};

Derivation derive(const Grammar& grammar, std::span<const Codon> genome, std::size_t max_depth)
{
    return Deriver::run(grammar, genome, max_depth);
}

std::string serialize(const DerivationTree& tree)
{
    std::string out;
    std::vector<std::uint32_t> stack{0};
    const auto nodes = tree.nodes();
    while (!stack.empty()) {
        const auto& n = nodes[stack.back()];
        stack.pop_back();
        if (n.symbol.terminal) {
            out += tree.grammar().terminal_text(n.symbol.id);
            continue;
        }
        for (std::uint32_t k = n.child_count; k-- > 0;) {
            stack.push_back(n.first_child + k);
        }
    }
    return out;
}

} // namespace evoens
