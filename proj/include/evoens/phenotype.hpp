#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "evoens/grammar.hpp"
#include "evoens/matrix.hpp"

namespace evoens {

enum class Op : std::uint8_t {
    Add,
    Sub,
    Mul,
    ProtectedDiv,
    ProtectedSqrt,
    ProtectedLog,
    Sin,
    Tanh,
    Exp,
    Feature,
    Constant,
};

constexpr std::size_t arity(Op op) noexcept
{
    switch (op) {
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::ProtectedDiv:
        return 2;
    case Op::Feature:
    case Op::Constant:
        return 0;
    default:
        return 1;
    }
}

// Totalized operators. Division by |b| <= 1e-9 yields 1.
namespace protected_ops {

inline constexpr double kDivisionEpsilon = 1e-9;
inline constexpr double kExpLimit = 700.0;

inline double pdiv(double a, double b) noexcept { return std::abs(b) <= kDivisionEpsilon ? 1.0 : a / b; }
inline double psqrt(double a) noexcept { return std::sqrt(std::abs(a)); }
inline double plog(double a) noexcept { return std::log1p(std::abs(a)); }

// exp with saturation; `saturated` is set when the argument exceeds kExpLimit.
inline double pexp(double a, bool& saturated) noexcept
{
    if (a > kExpLimit) {
        saturated = true;
        return std::exp(kExpLimit);
    }
    return std::exp(a);
}

} // namespace protected_ops

class MalformedExpression : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExprNode {
    Op op = Op::Constant;
    std::uint32_t feature = 0; // Op::Feature only
    double value = 0.0;        // Op::Constant only

    friend bool operator==(const ExprNode&, const ExprNode&) = default;
};

// Arithmetic expression over feature columns, stored in postfix order.
// Immutable once built.
class Expression {
public:
    static Expression feature(std::uint32_t index);
    static Expression constant(double value);
    static Expression unary(Op op, const Expression& operand);
    static Expression binary(Op op, const Expression& lhs, const Expression& rhs);

    std::span<const ExprNode> nodes() const noexcept { return nodes_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t depth() const noexcept { return depth_; }

    // Largest referenced feature index, if any feature is referenced.
    std::optional<std::uint32_t> max_feature() const noexcept;

    friend bool operator==(const Expression& a, const Expression& b) { return a.nodes_ == b.nodes_; }

private:
    friend class ExpressionBuilder;
    Expression() = default;

    std::vector<ExprNode> nodes_;
    std::size_t depth_ = 0;
};

// Parses the grammar surface syntax: + - * with the usual precedence and left
// associativity, pdiv(a,b), psqrt(a), plog(a), np.sin(a), np.tanh(a),
// np.exp(a), feature references x[:,k] (or the short form xk), decimal
// constants, and parentheses.
Expression parse_expression(std::string_view text);

// Derivation trees are compiled through their text, so the structure follows
// how the emitted formula reads rather than the shape of the derivation.
Expression compile(const DerivationTree& tree);

// Surface-syntax text. parse_expression(to_text(e)) == e.
std::string to_text(const Expression& expr);

struct PredictionVector {
    std::vector<double> values;
    bool finite = true;
};

// Column-wise evaluation. Requires every feature index < features.cols().
PredictionVector evaluate(const Expression& expr, const FeatureMatrix& features);

// Single-row evaluation; clears `finite` on saturation or a non-finite result.
double evaluate_row(const Expression& expr, std::span<const double> row, bool& finite);

} // namespace evoens
