#include "nwr/polynomial.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace nwr;

namespace {

std::vector<std::string> const xy{"x", "y"};

// Independent evaluator: walks the term map directly with repeated multiplication.
Rational evaluate_terms(Polynomial const& p, std::vector<Rational> const& point) {
    Rational sum = 0;
    for (auto const& [monomial, coefficient] : p.terms()) {
        Rational term = coefficient;
        for (auto const& [param, exponent] : monomial.powers()) {
            for (std::uint32_t i = 0; i < exponent; ++i) {
                term *= point[param];
            }
        }
        sum += term;
    }
    return sum;
}

}  // namespace

TEST(Polynomial, ParsesTermMap) {
    auto p = parse_polynomial("2*x^2 - y", xy);
    ASSERT_EQ(p.terms().size(), 2u);
    EXPECT_EQ(p.terms().at(Monomial::variable(0, 2)), 2);
    EXPECT_EQ(p.terms().at(Monomial::variable(1)), -1);
}

TEST(Polynomial, ZeroHasNoTerms) {
    EXPECT_TRUE(parse_polynomial("0", xy).is_zero());
    EXPECT_TRUE(parse_polynomial("x - x", xy).is_zero());
    EXPECT_TRUE(parse_polynomial("(x + 1)*0", xy).is_zero());
}

TEST(Polynomial, EvaluatesExactly) {
    ParameterAssignment at{Rational(3, 5), Rational(7, 25)};
    EXPECT_EQ(parse_polynomial("1 - x", xy).evaluate(at), Rational(2, 5));
    // 2*(9/25) - 7/25 = 11/25, computed by hand and by the term walker.
    auto p = parse_polynomial("2*x^2 - y", xy);
    EXPECT_EQ(p.evaluate(at), Rational(11, 25));
    EXPECT_EQ(evaluate_terms(p, {Rational(3, 5), Rational(7, 25)}), Rational(11, 25));
    EXPECT_EQ(Polynomial().evaluate(at), 0);
    EXPECT_EQ(Polynomial(Rational(1)).evaluate({}), 1);
}

TEST(Polynomial, UnassignedParameterThrows) {
    auto p = parse_polynomial("x*y", xy);
    EXPECT_THROW(p.evaluate({Rational(1)}), EvaluationError);
    EXPECT_THROW(p.evaluate({Rational(1), std::nullopt}), EvaluationError);
}

TEST(Polynomial, ParseErrorsCarryPosition) {
    try {
        parse_polynomial("x + * y", xy);
        FAIL() << "expected a parse error";
    } catch (PolynomialParseError const& error) {
        EXPECT_EQ(error.position(), 4u);
    }
    try {
        parse_polynomial("x + z", xy);
        FAIL() << "expected an unknown parameter error";
    } catch (PolynomialParseError const& error) {
        EXPECT_EQ(error.position(), 4u);
        EXPECT_NE(std::string(error.what()).find("unknown parameter 'z'"), std::string::npos);
    }
    EXPECT_THROW(parse_polynomial("(x + 1", xy), PolynomialParseError);
    EXPECT_THROW(parse_polynomial("x^", xy), PolynomialParseError);
    EXPECT_THROW(parse_polynomial("1/0", xy), PolynomialParseError);
    EXPECT_THROW(parse_polynomial("", xy), PolynomialParseError);
}

TEST(Polynomial, RationalLiterals) {
    EXPECT_EQ(parse_polynomial("3/5", xy).constant_term(), Rational(3, 5));
    EXPECT_EQ(parse_polynomial("49/50*x", xy).terms().at(Monomial::variable(0)), Rational(49, 50));
    EXPECT_EQ(parse_polynomial("0.98", xy).constant_term(), Rational(49, 50));
}

TEST(Polynomial, CanonicalPrinting) {
    EXPECT_EQ(to_string(parse_polynomial("-y + x*x*2", xy), xy), "2*x^2 - y");
    EXPECT_EQ(to_string(parse_polynomial("1 - x", xy), xy), "-x + 1");
    EXPECT_EQ(to_string(parse_polynomial("(x+y)^2", xy), xy), "x^2 + 2*x*y + y^2");
    EXPECT_EQ(to_string(parse_polynomial("3/6*y", xy), xy), "1/2*y");
    EXPECT_EQ(to_string(Polynomial(), xy), "0");
}

TEST(Polynomial, RoundTripProperty) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> coefficient(-9, 9);
    std::uniform_int_distribution<int> exponent(0, 3);
    for (int trial = 0; trial < 200; ++trial) {
        Polynomial p;
        for (int t = 0; t < 5; ++t) {
            Monomial m({{0, static_cast<std::uint32_t>(exponent(rng))}, {1, static_cast<std::uint32_t>(exponent(rng))}});
            p.add_term(m, Rational(coefficient(rng), 1 + std::abs(coefficient(rng))));
        }
        auto text = to_string(p, xy);
        EXPECT_EQ(parse_polynomial(text, xy), p) << text;
    }
}

TEST(Polynomial, EvaluationIsLinear) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> small(-5, 5);
    for (int trial = 0; trial < 100; ++trial) {
        Polynomial p;
        Polynomial q;
        for (int t = 0; t < 4; ++t) {
            p.add_term(Monomial({{0, static_cast<std::uint32_t>(t % 3)}, {1, static_cast<std::uint32_t>(t / 2)}}),
                       Rational(small(rng)));
            q.add_term(Monomial({{1, static_cast<std::uint32_t>(t)}}), Rational(small(rng), 3));
        }
        ParameterAssignment at{Rational(small(rng), 7), Rational(small(rng), 4)};
        for (auto& value : at) {
            value->canonicalize();
        }
        EXPECT_EQ((p + q).evaluate(at), p.evaluate(at) + q.evaluate(at));
        EXPECT_EQ((p * q).evaluate(at), p.evaluate(at) * q.evaluate(at));
    }
}

TEST(Polynomial, VariableDetection) {
    EXPECT_EQ(parse_polynomial("y", xy).as_variable(), ParameterId{1});
    EXPECT_FALSE(parse_polynomial("2*y", xy).as_variable());
    EXPECT_FALSE(parse_polynomial("y^2", xy).as_variable());
    EXPECT_FALSE(parse_polynomial("y + 1", xy).as_variable());
}
