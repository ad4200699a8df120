#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace evoens {

using Codon = std::uint32_t;

// Codons live in [0, kDefaultCodonDomain) unless a run configures otherwise.
inline constexpr Codon kDefaultCodonDomain = 65536;

enum class GrammarErrorKind {
    Syntax,
    UndefinedNonterminal,
    EmptyProduction,
    DuplicateDefinition,
    SymbolConflict,
};

class GrammarError : public std::runtime_error {
public:
    GrammarError(GrammarErrorKind kind, std::size_t line, const std::string& message);

    GrammarErrorKind kind() const noexcept { return kind_; }
    std::size_t line() const noexcept { return line_; }

private:
    GrammarErrorKind kind_;
    std::size_t line_;
};

struct Symbol {
    bool terminal = false;
    std::uint32_t id = 0; // index into the grammar's terminal or nonterminal table

    friend bool operator==(const Symbol&, const Symbol&) = default;
};

struct Production {
    std::vector<Symbol> symbols;
    // Smallest height (in nodes, terminal leaves included) of any subtree
    // that starts with this production. kUnbounded when it cannot terminate.
    std::size_t min_height = 0;
};

// Context-free grammar read from BNF. Production order is significant:
// a codon c selects production (c mod r) of the nonterminal being expanded.
class Grammar {
public:
    static constexpr std::size_t kUnbounded = SIZE_MAX;

    static Grammar parse(std::string_view text);

    std::uint32_t start() const noexcept { return start_; }
    std::size_t nonterminal_count() const noexcept { return nonterminals_.size(); }
    std::size_t terminal_count() const noexcept { return terminals_.size(); }

    const std::string& nonterminal_name(std::uint32_t id) const { return nonterminals_.at(id); }
    const std::string& terminal_text(std::uint32_t id) const { return terminals_.at(id); }
    std::optional<std::uint32_t> find_nonterminal(std::string_view name) const;

    std::span<const Production> productions(std::uint32_t nonterminal) const
    {
        return rules_.at(nonterminal);
    }

    // Smallest derivable subtree height for a nonterminal, kUnbounded if none.
    std::size_t min_height(std::uint32_t nonterminal) const { return min_height_.at(nonterminal); }

private:
    Grammar() = default;
    void compute_heights();

    std::vector<std::string> nonterminals_;
    std::vector<std::string> terminals_;
    std::vector<std::vector<Production>> rules_;
    std::vector<std::size_t> min_height_;
    std::uint32_t start_ = 0;
};

inline Grammar parse_grammar(std::string_view text) { return Grammar::parse(text); }

struct DerivationNode {
    Symbol symbol;
    std::uint32_t depth = 1;          // root is depth 1
    std::uint32_t production = 0;     // chosen production, nonterminals only
    Codon codon = 0;                  // codon consumed, nonterminals only
    std::uint32_t first_child = 0;    // children are stored contiguously
    std::uint32_t child_count = 0;
};

// Complete derivation tree. Holds a pointer to the grammar it was derived
// from; the grammar must outlive the tree.
class DerivationTree {
public:
    const Grammar& grammar() const noexcept { return *grammar_; }
    const DerivationNode& root() const noexcept { return nodes_.front(); }
    const DerivationNode& node(std::size_t i) const { return nodes_.at(i); }
    std::span<const DerivationNode> nodes() const noexcept { return nodes_; }

    std::span<const DerivationNode> children(const DerivationNode& n) const
    {
        return std::span<const DerivationNode>(nodes_).subspan(n.first_child, n.child_count);
    }

    // Max root-to-leaf node count.
    std::size_t depth() const noexcept { return depth_; }

    // Codons in the order the derivation consumed them (an effective genome prefix).
    std::span<const Codon> consumed_codons() const noexcept { return consumed_; }
    std::size_t codons_used() const noexcept { return consumed_.size(); }

private:
    friend struct Deriver;

    const Grammar* grammar_ = nullptr;
    std::vector<DerivationNode> nodes_;
    std::vector<Codon> consumed_;
    std::size_t depth_ = 0;
};

enum class InvalidReason { CodonsExhausted, DepthExceeded };

struct InvalidDerivation {
    InvalidReason reason;
    std::size_t codons_consumed = 0;

    friend bool operator==(const InvalidDerivation&, const InvalidDerivation&) = default;
};

using Derivation = std::variant<DerivationTree, InvalidDerivation>;

inline bool is_complete(const Derivation& d) noexcept { return std::holds_alternative<DerivationTree>(d); }

// Leftmost derivation from the start symbol. Every nonterminal expansion,
// including those with a single production, consumes one codon. There is no
// wrapping: running out of codons yields InvalidDerivation, as does a tree
// deeper than max_depth.
Derivation derive(const Grammar& grammar, std::span<const Codon> genome, std::size_t max_depth);

// Terminal leaves concatenated left to right.
std::string serialize(const DerivationTree& tree);

} // namespace evoens
