#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "evoens/data.hpp"
#include "evoens/evolution.hpp"
#include "evoens/phenotype.hpp"
#include "properties.hpp"

using namespace evoens;

namespace {

const Grammar& ensemble()
{
    static const Grammar g = [] {
        std::ifstream in(EVOENS_SOURCE_DIR "/grammars/ensemble.bnf");
        std::ostringstream s;
        s << in.rdbuf();
        return parse_grammar(s.str());
    }();
    return g;
}

Expression compiled(std::vector<Codon> genome)
{
    const auto d = derive(ensemble(), genome, 18);
    REQUIRE(is_complete(d));
    return compile(std::get<DerivationTree>(d));
}

// Counts <expr> nodes by recursion over the derivation tree.
std::size_t count_expr_nodes(const DerivationTree& tree, const DerivationNode& node, std::uint32_t expr)
{
    if (node.symbol.terminal) {
        return 0;
    }
    std::size_t n = node.symbol.id == expr ? 1 : 0;
    for (const auto& child : tree.children(node)) {
        n += count_expr_nodes(tree, child, expr);
    }
    return n;
}

template <class F>
void for_random_expressions(std::size_t count, std::uint64_t seed, F&& f)
{
    const auto msg = props::for_complete_derivations(ensemble(), count, seed, [&](const Genome&, const DerivationTree& tree) {
        f(tree, compile(tree));
        return std::string();
    });
    CHECK(msg == "");
}

} // namespace

TEST_CASE("compile leaves")
{
    const auto x0 = parse_expression("x[:,0]");
    CHECK(x0 == Expression::feature(0));
    CHECK(x0.node_count() == 1);
    CHECK(x0.depth() == 1);

    const auto c = parse_expression("71.24");
    REQUIRE(c.node_count() == 1);
    CHECK(c.nodes()[0].op == Op::Constant);
    CHECK(c.nodes()[0].value == 71.24);
    CHECK(compiled({14, 7, 1, 2, 4}) == c);
}

TEST_CASE("compile pdiv")
{
    const auto e = compiled({3, 10, 10});
    CHECK(e == Expression::binary(Op::ProtectedDiv, Expression::feature(1), Expression::feature(1)));
    CHECK(e.node_count() == 3);
    CHECK(e.depth() == 2);
}

TEST_CASE("compile maps every function name")
{
    const auto x = Expression::feature(4);
    CHECK(parse_expression("psqrt(x[:,4])") == Expression::unary(Op::ProtectedSqrt, x));
    CHECK(parse_expression("plog(x[:,4])") == Expression::unary(Op::ProtectedLog, x));
    CHECK(parse_expression("np.sin(x[:,4])") == Expression::unary(Op::Sin, x));
    CHECK(parse_expression("np.tanh(x[:,4])") == Expression::unary(Op::Tanh, x));
    CHECK(parse_expression("np.exp(x[:,4])") == Expression::unary(Op::Exp, x));
    CHECK(parse_expression("x4") == x);
    CHECK(compiled({5, 11}) == Expression::unary(Op::Sin, Expression::feature(2)));
}

TEST_CASE("precedence and associativity")
{
    const auto a = Expression::feature(0);
    const auto b = Expression::feature(1);
    const auto c = Expression::feature(2);
    CHECK(parse_expression("x0-x1+x2") == Expression::binary(Op::Add, Expression::binary(Op::Sub, a, b), c));
    CHECK(parse_expression("x0-x1*x2") == Expression::binary(Op::Sub, a, Expression::binary(Op::Mul, b, c)));
    CHECK(parse_expression("x0-(x1-x2)") == Expression::binary(Op::Sub, a, Expression::binary(Op::Sub, b, c)));
    CHECK(parse_expression("x3 * x3 * x4")
        == Expression::binary(Op::Mul, Expression::binary(Op::Mul, Expression::feature(3), Expression::feature(3)),
            Expression::feature(4)));
}

TEST_CASE("malformed text")
{
    CHECK_THROWS_AS(parse_expression("x[:,0]+"), MalformedExpression);
    CHECK_THROWS_AS(parse_expression("foo(x0)"), MalformedExpression);
    CHECK_THROWS_AS(parse_expression("pdiv(x0)"), MalformedExpression);
    CHECK_THROWS_AS(parse_expression("(x0"), MalformedExpression);
    CHECK_THROWS_AS(parse_expression(""), MalformedExpression);
    CHECK_THROWS_AS(parse_expression("x0 x1"), MalformedExpression);
}

TEST_CASE("structural counts")
{
    const auto sum = Expression::binary(Op::Add, Expression::feature(0), Expression::feature(1));
    CHECK(sum.node_count() == 3);
    CHECK(sum.depth() == 2);
    const auto nested = Expression::unary(Op::Sin, sum);
    CHECK(nested.node_count() == 4);
    CHECK(nested.depth() == 3);
    CHECK(nested.max_feature() == 1u);
    CHECK_FALSE(Expression::constant(2.0).max_feature());
}

TEST_CASE("node count of a grown seed-7 genome")
{
    Rng rng(7);
    const auto genome = grow_genome(ensemble(), 10, kDefaultCodonDomain, rng);
    const auto d = derive(ensemble(), genome, 18);
    REQUIRE(is_complete(d));
    const auto& tree = std::get<DerivationTree>(d);
    const auto expected = count_expr_nodes(tree, tree.root(), ensemble().start());
    CHECK(expected > 1);
    CHECK(compile(tree).node_count() == expected);
}

TEST_CASE("node count matches the derivation for random genomes")
{
    for_random_expressions(300, 21, [](const DerivationTree& tree, const Expression& e) {
        CHECK(e.node_count() == count_expr_nodes(tree, tree.root(), ensemble().start()));
    });
}

TEST_CASE("protected operators")
{
    using namespace protected_ops;
    CHECK(pdiv(1.0, 0.0) == 1.0);
    CHECK(pdiv(1.0, 1e-9) == 1.0);
    CHECK(pdiv(1.0, -1e-9) == 1.0);
    CHECK(pdiv(1.0, 2e-9) == doctest::Approx(5e8));
    CHECK(pdiv(3.0, 2.0) == 1.5);
    CHECK(psqrt(-4.0) == 2.0);
    CHECK(plog(-1.0) == doctest::Approx(std::log(2.0)));
    CHECK(plog(0.0) == 0.0);
    bool saturated = false;
    CHECK(pexp(1.0, saturated) == doctest::Approx(std::exp(1.0)));
    CHECK_FALSE(saturated);
    CHECK(std::isfinite(pexp(701.0, saturated)));
    CHECK(saturated);
}

TEST_CASE("evaluate examples")
{
    const auto ratio = parse_expression("pdiv(x[:,0],x[:,1])");
    const auto one_row = FeatureMatrix::from_rows({{1.0, 0.0}});
    const auto p = evaluate(ratio, one_row);
    CHECK(p.values == std::vector<double>{1.0});
    CHECK(p.finite);

    const auto root = Expression::unary(Op::ProtectedSqrt, Expression::constant(-4.0));
    const auto rows = FeatureMatrix::from_rows({{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}});
    CHECK(evaluate(root, rows).values == std::vector<double>{2.0, 2.0, 2.0});

    const auto blowup = parse_expression("np.exp(np.exp(x[:,0]))");
    const auto big = FeatureMatrix::from_rows({{1.0}, {7.0}});
    const auto q = evaluate(blowup, big);
    CHECK_FALSE(q.finite);
    CHECK(std::isfinite(q.values[1]));

    CHECK_THROWS_AS(evaluate(parse_expression("x[:,5]"), rows), std::out_of_range);
}

TEST_CASE("row-wise evaluation equals batch evaluation")
{
    const auto mc30 = bundled("mc30");
    for_random_expressions(300, 22, [&](const DerivationTree&, const Expression& e) {
        const auto batch = evaluate(e, mc30.features);
        bool all_finite = true;
        for (std::size_t r = 0; r < mc30.rows(); ++r) {
            bool finite = true;
            const auto v = evaluate_row(e, mc30.features.row(r), finite);
            all_finite = all_finite && finite;
            CHECK(std::memcmp(&v, &batch.values[r], sizeof v) == 0);
        }
        CHECK(all_finite == batch.finite);
    });
}

TEST_CASE("protected operators are total on finite inputs")
{
    Rng rng(23);
    FeatureMatrix m(50, 5);
    for (std::size_t r = 0; r < 50; ++r) {
        for (std::size_t c = 0; c < 5; ++c) {
            m(r, c) = (rng.uniform() - 0.5) * std::pow(10.0, static_cast<double>(rng.below(7)) - 3.0);
        }
        m(r, rng.below(5)) = 0.0;
    }
    for_random_expressions(500, 24, [&](const DerivationTree&, const Expression& e) {
        const auto p = evaluate(e, m);
        for (double v : p.values) {
            if (!std::isfinite(v)) {
                CHECK_FALSE(p.finite);
            }
        }
    });
}

TEST_CASE("text round trip is idempotent")
{
    for_random_expressions(500, 25, [](const DerivationTree& tree, const Expression& e) {
        const auto text = to_text(e);
        const auto again = parse_expression(text);
        CHECK(again == e);
        CHECK(to_text(again) == text);
        CHECK(parse_expression(serialize(tree)) == e);
    });
}

TEST_CASE("to_text keeps the grammar surface syntax")
{
    CHECK(to_text(parse_expression("np.sin(x2)")) == "np.sin(x[:,2])");
    CHECK(to_text(parse_expression("x0-(x1-x2)")) == "x[:,0]-(x[:,1]-x[:,2])");
    CHECK(to_text(parse_expression("(x0-x1)-x2")) == "x[:,0]-x[:,1]-x[:,2]");
    CHECK(to_text(parse_expression("(x0+x1)*x2")) == "(x[:,0]+x[:,1])*x[:,2]");
    CHECK(to_text(parse_expression("pdiv(71.24,x0)")) == "pdiv(71.24,x[:,0])");
    CHECK(to_text(Expression::constant(-2.5)) == "(-2.5)");
    CHECK(parse_expression(to_text(Expression::constant(-2.5))) == Expression::constant(-2.5));
}

TEST_CASE("evaluation is deterministic")
{
    const auto mc30 = bundled("mc30");
    const auto e = parse_expression("pdiv(71.24,x[:,0])*np.tanh(x[:,3])-plog(x[:,4])");
    const auto a = evaluate(e, mc30.features);
    const auto b = evaluate(e, mc30.features);
    CHECK(std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) == 0);
}
