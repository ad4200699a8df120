#include "evoens/phenotype.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include <fmt/core.h>

namespace evoens {

class ExpressionBuilder {
public:
    static Expression finish(std::vector<ExprNode> nodes)
    {
        Expression e;
        std::vector<std::size_t> depths;
        for (const auto& n : nodes) {
            const auto k = arity(n.op);
            if (depths.size() < k) {
                throw MalformedExpression("operator is missing operands");
            }
            std::size_t d = 0;
            for (std::size_t i = 0; i < k; ++i) {
                d = std::max(d, depths.back());
                depths.pop_back();
            }
            depths.push_back(d + 1);
        }
        if (depths.size() != 1) {
            throw MalformedExpression("expression does not reduce to a single value");
        }
        e.nodes_ = std::move(nodes);
        e.depth_ = depths.front();
        return e;
    }

    static std::vector<ExprNode> take(const Expression& e) { return e.nodes_; }
};

Expression Expression::feature(std::uint32_t index)
{
    return ExpressionBuilder::finish({ExprNode{Op::Feature, index, 0.0}});
}

Expression Expression::constant(double value)
{
    return ExpressionBuilder::finish({ExprNode{Op::Constant, 0, value}});
}

Expression Expression::unary(Op op, const Expression& operand)
{
    if (arity(op) != 1) {
        throw MalformedExpression("not a unary operator");
    }
    auto nodes = ExpressionBuilder::take(operand);
    nodes.push_back(ExprNode{op});
    return ExpressionBuilder::finish(std::move(nodes));
}

Expression Expression::binary(Op op, const Expression& lhs, const Expression& rhs)
{
    if (arity(op) != 2) {
        throw MalformedExpression("not a binary operator");
    }
    auto nodes = ExpressionBuilder::take(lhs);
    const auto right = ExpressionBuilder::take(rhs);
    nodes.insert(nodes.end(), right.begin(), right.end());
    nodes.push_back(ExprNode{op});
    return ExpressionBuilder::finish(std::move(nodes));
}

std::optional<std::uint32_t> Expression::max_feature() const noexcept
{
    std::optional<std::uint32_t> best;
    for (const auto& n : nodes_) {
        if (n.op == Op::Feature && (!best || n.feature > *best)) {
            best = n.feature;
        }
    }
    return best;
}

namespace {

struct FunctionName {
    std::string_view name;
    Op op;
};

constexpr FunctionName kFunctions[] = {
    {"pdiv", Op::ProtectedDiv},
    {"psqrt", Op::ProtectedSqrt},
    {"plog", Op::ProtectedLog},
    {"np.sin", Op::Sin},
    {"np.tanh", Op::Tanh},
    {"np.exp", Op::Exp},
};

std::string_view function_name(Op op)
{
    for (const auto& f : kFunctions) {
        if (f.op == op) {
            return f.name;
        }
    }
    return {};
}

// Recursive descent over the surface syntax, emitting postfix nodes.
class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    std::vector<ExprNode> parse()
    {
        sum();
        skip_space();
        if (pos_ != text_.size()) {
            fail("unexpected trailing input");
        }
        return std::move(out_);
    }

private:
    [[noreturn]] void fail(std::string_view what) const
    {
        throw MalformedExpression(fmt::format("{} at offset {} in '{}'", what, pos_, text_));
    }

    void skip_space()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(char c)
    {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c)) {
            fail(fmt::format("expected '{}'", c));
        }
    }

    void sum()
    {
        product();
        for (;;) {
            if (accept('+')) {
                product();
                out_.push_back(ExprNode{Op::Add});
            } else if (accept('-')) {
                product();
                out_.push_back(ExprNode{Op::Sub});
            } else {
                return;
            }
        }
    }

    void product()
    {
        primary();
        while (accept('*')) {
            primary();
            out_.push_back(ExprNode{Op::Mul});
        }
    }

    void number(bool negative)
    {
        const auto begin = pos_;
        auto digits = [&] {
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
            }
        };
        digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            digits();
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
                ++pos_;
            }
            digits();
        }
        double value = 0.0;
        const auto* first = text_.data() + begin;
        const auto* last = text_.data() + pos_;
        const auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc{} || ptr != last) {
            fail("malformed number");
        }
        out_.push_back(ExprNode{Op::Constant, 0, negative ? -value : value});
    }

    std::uint32_t index()
    {
        skip_space();
        const auto begin = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        std::uint32_t k = 0;
        const auto [ptr, ec] = std::from_chars(text_.data() + begin, text_.data() + pos_, k);
        if (begin == pos_ || ec != std::errc{}) {
            fail("expected a feature index");
        }
        return k;
    }

    void primary()
    {
        skip_space();
        if (pos_ >= text_.size()) {
            fail("unexpected end of expression");
        }
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            sum();
            expect(')');
            return;
        }
        if (c == '-' && pos_ + 1 < text_.size()
            && (std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) || text_[pos_ + 1] == '.')) {
            ++pos_;
            number(true);
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            number(false);
            return;
        }
        if (!(std::isalpha(static_cast<unsigned char>(c)) || c == '_')) {
            fail("unexpected character");
        }

        const auto begin = pos_;
        while (pos_ < text_.size()
            && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' || text_[pos_] == '.')) {
            ++pos_;
        }
        const auto ident = text_.substr(begin, pos_ - begin);

        if (ident == "x") {
            expect('[');
            expect(':');
            expect(',');
            const auto k = index();
            expect(']');
            out_.push_back(ExprNode{Op::Feature, k, 0.0});
            return;
        }
        if (ident.size() > 1 && ident.front() == 'x'
            && std::all_of(ident.begin() + 1, ident.end(), [](char d) { return std::isdigit(static_cast<unsigned char>(d)); })) {
            std::uint32_t k = 0;
            std::from_chars(ident.data() + 1, ident.data() + ident.size(), k);
            out_.push_back(ExprNode{Op::Feature, k, 0.0});
            return;
        }
        for (const auto& f : kFunctions) {
            if (ident == f.name) {
                expect('(');
                sum();
                if (arity(f.op) == 2) {
                    expect(',');
                    sum();
                }
                expect(')');
                out_.push_back(ExprNode{f.op});
                return;
            }
        }
        pos_ = begin;
        fail(fmt::format("unknown identifier '{}'", ident));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::vector<ExprNode> out_;
};

int precedence(Op op)
{
    switch (op) {
    case Op::Add:
    case Op::Sub:
        return 1;
    case Op::Mul:
        return 2;
    default:
        return 3;
    }
}

} // namespace

Expression parse_expression(std::string_view text)
{
    return ExpressionBuilder::finish(Parser(text).parse());
}

Expression compile(const DerivationTree& tree) { return parse_expression(serialize(tree)); }

std::string to_text(const Expression& expr)
{
    struct Piece {
        std::string text;
        int prec;
    };
    std::vector<Piece> stack;
    for (const auto& n : expr.nodes()) {
        switch (n.op) {
        case Op::Feature:
            stack.push_back({fmt::format("x[:,{}]", n.feature), 3});
            break;
        case Op::Constant:
            stack.push_back({n.value < 0 ? fmt::format("({})", n.value) : fmt::format("{}", n.value), 3});
            break;
        case Op::Add:
        case Op::Sub:
        case Op::Mul: {
            auto rhs = std::move(stack.back());
            stack.pop_back();
            auto lhs = std::move(stack.back());
            stack.pop_back();
            const int p = precedence(n.op);
            // Left-associative parse: a right operand of equal precedence needs parentheses.
            auto l = lhs.prec < p ? "(" + lhs.text + ")" : lhs.text;
            auto r = rhs.prec <= p ? "(" + rhs.text + ")" : rhs.text;
            const char* sym = n.op == Op::Add ? "+" : n.op == Op::Sub ? "-" : "*";
            stack.push_back({l + sym + r, p});
            break;
        }
        case Op::ProtectedDiv: {
            auto rhs = std::move(stack.back());
            stack.pop_back();
            auto lhs = std::move(stack.back());
            stack.pop_back();
            stack.push_back({fmt::format("pdiv({},{})", lhs.text, rhs.text), 3});
            break;
        }
        default: {
            auto arg = std::move(stack.back());
            stack.pop_back();
            stack.push_back({fmt::format("{}({})", function_name(n.op), arg.text), 3});
            break;
        }
        }
    }
    return stack.empty() ? std::string{} : stack.back().text;
}

namespace {

double apply_unary(Op op, double a, bool& saturated)
{
    switch (op) {
    case Op::ProtectedSqrt:
        return protected_ops::psqrt(a);
    case Op::ProtectedLog:
        return protected_ops::plog(a);
    case Op::Sin:
        return std::sin(a);
    case Op::Tanh:
        return std::tanh(a);
    case Op::Exp:
        return protected_ops::pexp(a, saturated);
    default:
        return a;
    }
}

double apply_binary(Op op, double a, double b)
{
    switch (op) {
    case Op::Add:
        return a + b;
    case Op::Sub:
        return a - b;
    case Op::Mul:
        return a * b;
    case Op::ProtectedDiv:
        return protected_ops::pdiv(a, b);
    default:
        return a;
    }
}

void check_features(const Expression& expr, std::size_t cols)
{
    if (const auto k = expr.max_feature(); k && *k >= cols) {
        throw std::out_of_range(fmt::format("feature x[:,{}] referenced but only {} columns exist", *k, cols));
    }
}

} // namespace

PredictionVector evaluate(const Expression& expr, const FeatureMatrix& features)
{
    check_features(expr, features.cols());
    const auto rows = features.rows();
    bool saturated = false;
    std::vector<std::vector<double>> stack;
    for (const auto& n : expr.nodes()) {
        switch (arity(n.op)) {
        case 0:
            if (n.op == Op::Feature) {
                const auto col = features.column(n.feature);
                stack.emplace_back(col.begin(), col.end());
            } else {
                stack.emplace_back(rows, n.value);
            }
            break;
        case 1:
            for (auto& v : stack.back()) {
                v = apply_unary(n.op, v, saturated);
            }
            break;
        default: {
            auto rhs = std::move(stack.back());
            stack.pop_back();
            auto& lhs = stack.back();
            for (std::size_t i = 0; i < rows; ++i) {
                lhs[i] = apply_binary(n.op, lhs[i], rhs[i]);
            }
            break;
        }
        }
    }
    PredictionVector out;
    out.values = std::move(stack.back());
    out.finite = !saturated && std::all_of(out.values.begin(), out.values.end(), [](double v) { return std::isfinite(v); });
    return out;
}

double evaluate_row(const Expression& expr, std::span<const double> row, bool& finite)
{
    check_features(expr, row.size());
    bool saturated = false;
    std::vector<double> stack;
    for (const auto& n : expr.nodes()) {
        switch (arity(n.op)) {
        case 0:
            stack.push_back(n.op == Op::Feature ? row[n.feature] : n.value);
            break;
        case 1:
            stack.back() = apply_unary(n.op, stack.back(), saturated);
            break;
        default: {
            const double b = stack.back();
            stack.pop_back();
            stack.back() = apply_binary(n.op, stack.back(), b);
            break;
        }
        }
    }
    const double v = stack.back();
    if (saturated || !std::isfinite(v)) {
        finite = false;
    }
    return v;
}

} // namespace evoens
