#pragma once

#include <gmpxx.h>

#include <stdexcept>
#include <string>
#include <string_view>

namespace nwr {

/// Exact rational number, always kept in canonical (lowest-terms) form.
using Rational = mpq_class;

class RationalParseError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Parses "a", "-a", "a/b" and plain decimals such as "0.98" or "1e-3".
Rational parse_rational(std::string_view text);

/// Canonical text: "a" for integers, "a/b" otherwise.
std::string to_string(Rational const& value);

double to_double(Rational const& value);

/// Exact conversion of a finite double (every double is a dyadic rational).
Rational from_double(double value);

}  // namespace nwr
