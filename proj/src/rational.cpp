#include "nwr/rational.hpp"

#include <cctype>
#include <cmath>

namespace nwr {

namespace {

bool is_integer_literal(std::string_view text) {
    std::size_t i = 0;
    if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
        ++i;
    }
    if (i == text.size()) {
        return false;
    }
    for (; i < text.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
            return false;
        }
    }
    return true;
}

mpz_class parse_integer(std::string_view text) {
    if (!is_integer_literal(text)) {
        throw RationalParseError("invalid integer literal '" + std::string(text) + "'");
    }
    std::string digits(text);
    if (digits.front() == '+') {
        digits.erase(0, 1);
    }
    return mpz_class(digits, 10);
}

Rational parse_decimal(std::string_view text) {
    std::string_view mantissa = text;
    long exponent = 0;
    if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
        mantissa = text.substr(0, e);
        std::string exp_text(text.substr(e + 1));
        if (!is_integer_literal(exp_text)) {
            throw RationalParseError("invalid exponent in '" + std::string(text) + "'");
        }
        exponent = std::stol(exp_text);
    }
    std::string digits;
    bool negative = false;
    std::size_t i = 0;
    if (i < mantissa.size() && (mantissa[i] == '-' || mantissa[i] == '+')) {
        negative = mantissa[i] == '-';
        ++i;
    }
    bool seen_point = false;
    bool seen_digit = false;
    for (; i < mantissa.size(); ++i) {
        char c = mantissa[i];
        if (c == '.' && !seen_point) {
            seen_point = true;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            digits.push_back(c);
            seen_digit = true;
            if (seen_point) {
                --exponent;
            }
        } else {
            throw RationalParseError("invalid number '" + std::string(text) + "'");
        }
    }
    if (!seen_digit) {
        throw RationalParseError("invalid number '" + std::string(text) + "'");
    }
    mpz_class numerator(digits, 10);
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
    Rational result = exponent >= 0 ? Rational(numerator * scale) : Rational(numerator, scale);
    result.canonicalize();
    return negative ? Rational(-result) : result;
}

std::string_view trim(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) {
        text.remove_prefix(1);
    }
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) {
        text.remove_suffix(1);
    }
    return text;
}

}  // namespace

Rational parse_rational(std::string_view text) {
    text = trim(text);
    if (text.empty()) {
        throw RationalParseError("empty rational literal");
    }
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        mpz_class numerator = parse_integer(trim(text.substr(0, slash)));
        mpz_class denominator = parse_integer(trim(text.substr(slash + 1)));
        if (denominator == 0) {
            throw RationalParseError("zero denominator in '" + std::string(text) + "'");
        }
        Rational result(numerator, denominator);
        result.canonicalize();
        return result;
    }
    if (is_integer_literal(text)) {
        return Rational(parse_integer(text));
    }
    return parse_decimal(text);
}

std::string to_string(Rational const& value) {
    return value.get_str();
}

double to_double(Rational const& value) {
    return value.get_d();
}

Rational from_double(double value) {
    if (!std::isfinite(value)) {
        throw RationalParseError("non-finite value cannot be converted to a rational");
    }
    Rational result(value);
    result.canonicalize();
    return result;
}

}  // namespace nwr
