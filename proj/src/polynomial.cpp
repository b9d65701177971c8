#include "nwr/polynomial.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

namespace nwr {

Monomial::Monomial(std::vector<Power> powers) {
    std::sort(powers.begin(), powers.end());
    for (auto const& [param, exponent] : powers) {
        if (exponent == 0) {
            continue;
        }
        if (!powers_.empty() && powers_.back().first == param) {
            powers_.back().second += exponent;
        } else {
            powers_.emplace_back(param, exponent);
        }
    }
}

Monomial Monomial::variable(ParameterId param, std::uint32_t exponent) {
    return Monomial({{param, exponent}});
}

std::uint32_t Monomial::degree() const {
    std::uint32_t result = 0;
    for (auto const& power : powers_) {
        result += power.second;
    }
    return result;
}

Monomial Monomial::operator*(Monomial const& other) const {
    std::vector<Power> merged = powers_;
    merged.insert(merged.end(), other.powers_.begin(), other.powers_.end());
    return Monomial(std::move(merged));
}

bool GradedLexLess::operator()(Monomial const& lhs, Monomial const& rhs) const {
    auto ld = lhs.degree();
    auto rd = rhs.degree();
    if (ld != rd) {
        return ld < rd;
    }
    // Same degree: compare exponent vectors lexicographically, with lower parameter
    // indices being more significant. A higher power of x_0 is the larger monomial.
    auto const& lp = lhs.powers();
    auto const& rp = rhs.powers();
    std::size_t i = 0;
    for (; i < lp.size() && i < rp.size(); ++i) {
        if (lp[i].first != rp[i].first) {
            // lhs has the smaller variable index: lhs carries a positive power where rhs has 0.
            return lp[i].first > rp[i].first;
        }
        if (lp[i].second != rp[i].second) {
            return lp[i].second < rp[i].second;
        }
    }
    // Equal degree and equal common prefix implies equal monomials.
    return false;
}

Polynomial::Polynomial(Rational constant) {
    add_term(Monomial(), constant);
}

Polynomial Polynomial::variable(ParameterId param) {
    Polynomial result;
    result.add_term(Monomial::variable(param), Rational(1));
    return result;
}

bool Polynomial::is_constant() const {
    return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.is_constant());
}

Rational Polynomial::constant_term() const {
    auto it = terms_.find(Monomial());
    return it == terms_.end() ? Rational(0) : it->second;
}

std::uint32_t Polynomial::degree() const {
    return terms_.empty() ? 0 : terms_.rbegin()->first.degree();
}

std::vector<ParameterId> Polynomial::parameters() const {
    std::vector<ParameterId> result;
    for (auto const& [monomial, coefficient] : terms_) {
        for (auto const& power : monomial.powers()) {
            result.push_back(power.first);
        }
    }
    std::sort(result.begin(), result.end());
    result.erase(std::unique(result.begin(), result.end()), result.end());
    return result;
}

std::optional<ParameterId> Polynomial::as_variable() const {
    if (terms_.size() != 1) {
        return std::nullopt;
    }
    auto const& [monomial, coefficient] = *terms_.begin();
    if (coefficient != 1 || monomial.powers().size() != 1 || monomial.powers()[0].second != 1) {
        return std::nullopt;
    }
    return monomial.powers()[0].first;
}

Rational Polynomial::evaluate(ParameterAssignment const& assignment) const {
    Rational result(0);
    for (auto const& [monomial, coefficient] : terms_) {
        Rational term = coefficient;
        for (auto const& [param, exponent] : monomial.powers()) {
            if (param >= assignment.size() || !assignment[param]) {
                throw EvaluationError("parameter #" + std::to_string(param) + " is unassigned");
            }
            Rational const& value = *assignment[param];
            for (std::uint32_t e = 0; e < exponent; ++e) {
                term *= value;
            }
        }
        result += term;
    }
    return result;
}

void Polynomial::add_term(Monomial const& monomial, Rational const& coefficient) {
    if (coefficient == 0) {
        return;
    }
    Rational canonical = coefficient;
    canonical.canonicalize();
    auto [it, inserted] = terms_.try_emplace(monomial, canonical);
    if (!inserted) {
        it->second += canonical;
        if (it->second == 0) {
            terms_.erase(it);
        }
    }
}

Polynomial& Polynomial::operator+=(Polynomial const& other) {
    for (auto const& [monomial, coefficient] : other.terms_) {
        add_term(monomial, coefficient);
    }
    return *this;
}

Polynomial Polynomial::operator+(Polynomial const& other) const {
    Polynomial result = *this;
    result += other;
    return result;
}

Polynomial Polynomial::operator-() const {
    Polynomial result;
    for (auto const& [monomial, coefficient] : terms_) {
        result.terms_.emplace(monomial, -coefficient);
    }
    return result;
}

Polynomial Polynomial::operator-(Polynomial const& other) const {
    return *this + (-other);
}

Polynomial Polynomial::operator*(Polynomial const& other) const {
    Polynomial result;
    for (auto const& [lm, lc] : terms_) {
        for (auto const& [rm, rc] : other.terms_) {
            result.add_term(lm * rm, lc * rc);
        }
    }
    return result;
}

PolynomialParseError::PolynomialParseError(std::string const& message, std::size_t position)
    : std::runtime_error(message + " at position " + std::to_string(position)), position_(position) {}

namespace {

class Parser {
   public:
    Parser(std::string_view text, std::vector<std::string> const& params) : text_(text) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            index_.emplace(params[i], static_cast<ParameterId>(i));
        }
    }

    Polynomial parse() {
        Polynomial result = expr();
        skip_space();
        if (pos_ != text_.size()) {
            throw PolynomialParseError("unexpected '" + std::string(1, text_[pos_]) + "'", pos_);
        }
        return result;
    }

   private:
    Polynomial expr() {
        skip_space();
        bool negate = false;
        if (peek() == '-') {
            negate = true;
            ++pos_;
        }
        Polynomial result = term();
        if (negate) {
            result = -result;
        }
        while (true) {
            skip_space();
            char c = peek();
            if (c != '+' && c != '-') {
                return result;
            }
            ++pos_;
            Polynomial rhs = term();
            result = c == '+' ? result + rhs : result - rhs;
        }
    }

    Polynomial term() {
        Polynomial result = power();
        while (true) {
            skip_space();
            if (peek() != '*') {
                return result;
            }
            ++pos_;
            result = result * power();
        }
    }

    Polynomial power() {
        Polynomial base = atom();
        while (true) {
            skip_space();
            if (peek() != '^') {
                return base;
            }
            ++pos_;
            skip_space();
            std::size_t start = pos_;
            std::uint64_t exponent = 0;
            while (std::isdigit(static_cast<unsigned char>(peek()))) {
                exponent = exponent * 10 + static_cast<std::uint64_t>(text_[pos_] - '0');
                if (exponent > 1024) {
                    throw PolynomialParseError("exponent too large", start);
                }
                ++pos_;
            }
            if (pos_ == start) {
                throw PolynomialParseError("expected unsigned exponent", pos_);
            }
            Polynomial result(Rational(1));
            for (std::uint64_t e = 0; e < exponent; ++e) {
                result = result * base;
            }
            base = std::move(result);
        }
    }

    Polynomial atom() {
        skip_space();
        std::size_t start = pos_;
        char c = peek();
        if (c == '(') {
            ++pos_;
            Polynomial inner = expr();
            skip_space();
            if (peek() != ')') {
                throw PolynomialParseError("expected ')'", pos_);
            }
            ++pos_;
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return Polynomial(number());
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') {
                ++pos_;
            }
            std::string name(text_.substr(start, pos_ - start));
            auto it = index_.find(name);
            if (it == index_.end()) {
                throw PolynomialParseError("unknown parameter '" + name + "'", start);
            }
            return Polynomial::variable(it->second);
        }
        if (c == '\0') {
            throw PolynomialParseError("unexpected end of expression", pos_);
        }
        throw PolynomialParseError("unexpected '" + std::string(1, c) + "'", pos_);
    }

    // int, int/uint, or a plain decimal literal.
    Rational number() {
        std::size_t start = pos_;
        while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.') {
            ++pos_;
        }
        std::size_t end = pos_;
        if (peek() == '/') {
            std::size_t slash = pos_++;
            std::size_t denominator_start = pos_;
            while (std::isdigit(static_cast<unsigned char>(peek()))) {
                ++pos_;
            }
            if (pos_ == denominator_start) {
                throw PolynomialParseError("expected denominator", pos_);
            }
            if (text_.substr(start, slash - start).find('.') != std::string_view::npos) {
                throw PolynomialParseError("decimal numerator in fraction", start);
            }
            end = pos_;
        }
        try {
            return parse_rational(text_.substr(start, end - start));
        } catch (RationalParseError const& error) {
            throw PolynomialParseError(error.what(), start);
        }
    }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::unordered_map<std::string, ParameterId> index_;
};

std::string monomial_text(Monomial const& monomial, std::vector<std::string> const& params) {
    std::string result;
    for (auto const& [param, exponent] : monomial.powers()) {
        if (!result.empty()) {
            result += '*';
        }
        result += param < params.size() ? params[param] : "p" + std::to_string(param);
        if (exponent > 1) {
            result += '^' + std::to_string(exponent);
        }
    }
    return result;
}

}  // namespace

Polynomial parse_polynomial(std::string_view text, std::vector<std::string> const& params) {
    return Parser(text, params).parse();
}

std::string to_string(Polynomial const& poly, std::vector<std::string> const& params) {
    if (poly.is_zero()) {
        return "0";
    }
    std::string result;
    for (auto it = poly.terms().rbegin(); it != poly.terms().rend(); ++it) {
        auto const& [monomial, coefficient] = *it;
        bool negative = coefficient < 0;
        Rational magnitude = negative ? Rational(-coefficient) : coefficient;
        if (result.empty()) {
            result += negative ? "-" : "";
        } else {
            result += negative ? " - " : " + ";
        }
        if (monomial.is_constant()) {
            result += to_string(magnitude);
        } else if (magnitude == 1) {
            result += monomial_text(monomial, params);
        } else {
            result += to_string(magnitude) + "*" + monomial_text(monomial, params);
        }
    }
    return result;
}

}  // namespace nwr
