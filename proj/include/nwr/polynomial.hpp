#pragma once

#include "nwr/rational.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nwr {

using ParameterId = std::uint32_t;

/// Product of parameter powers, kept sorted by parameter index with positive exponents only.
class Monomial {
   public:
    using Power = std::pair<ParameterId, std::uint32_t>;

    Monomial() = default;
    explicit Monomial(std::vector<Power> powers);

    static Monomial variable(ParameterId param, std::uint32_t exponent = 1);

    std::vector<Power> const& powers() const { return powers_; }
    std::uint32_t degree() const;
    bool is_constant() const { return powers_.empty(); }

    Monomial operator*(Monomial const& other) const;
    bool operator==(Monomial const& other) const = default;

   private:
    std::vector<Power> powers_;
};

/// Graded lexicographic order; greater monomials are printed first.
struct GradedLexLess {
    bool operator()(Monomial const& lhs, Monomial const& rhs) const;
};

/// Parameter assignment indexed by ParameterId; unset entries are unassigned.
using ParameterAssignment = std::vector<std::optional<Rational>>;

class EvaluationError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Sparse multivariate polynomial over the rationals. Zero coefficients are never stored,
/// so the polynomial is syntactically zero exactly when it has no terms.
class Polynomial {
   public:
    using TermMap = std::map<Monomial, Rational, GradedLexLess>;

    Polynomial() = default;
    explicit Polynomial(Rational constant);
    static Polynomial variable(ParameterId param);

    TermMap const& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const;
    /// Constant term (zero when absent).
    Rational constant_term() const;
    std::uint32_t degree() const;
    /// Parameters occurring in some term, ascending.
    std::vector<ParameterId> parameters() const;
    /// True for a single term of the form 1*x.
    std::optional<ParameterId> as_variable() const;

    Rational evaluate(ParameterAssignment const& assignment) const;

    Polynomial operator+(Polynomial const& other) const;
    Polynomial operator-(Polynomial const& other) const;
    Polynomial operator*(Polynomial const& other) const;
    Polynomial operator-() const;
    Polynomial& operator+=(Polynomial const& other);
    bool operator==(Polynomial const& other) const = default;

    void add_term(Monomial const& monomial, Rational const& coefficient);

   private:
    TermMap terms_;
};

class PolynomialParseError : public std::runtime_error {
   public:
    PolynomialParseError(std::string const& message, std::size_t position);
    std::size_t position() const { return position_; }

   private:
    std::size_t position_;
};

/// Parses the expression grammar
///   expr := ['-'] term (('+'|'-') term)* ; term := factor ('*' factor)* ;
///   factor := rational | ident | factor '^' uint | '(' expr ')'
/// where identifiers must be among `params`.
Polynomial parse_polynomial(std::string_view text, std::vector<std::string> const& params);

/// Canonical text, graded-lex descending, e.g. "2*x^2 - y". Reparses to the same term map.
std::string to_string(Polynomial const& poly, std::vector<std::string> const& params);

}  // namespace nwr
