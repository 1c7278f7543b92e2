#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <optional>
#include <string>

namespace cspop {

// Exact coefficient type. All polynomial arithmetic is carried out over the
// rationals; conversion to binary64 happens explicitly at SDP-assembly and
// evaluation boundaries.
using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

// Parses "p", "p/q" or a plain decimal like "-3.25" into an exact rational.
std::optional<Rational> parse_rational(const std::string& text);

// Prints as "p" or "p/q".
std::string rational_to_string(const Rational& r);

// Nearest rational with small denominator (continued fractions); used to lift
// floating-point solver output back into exact arithmetic before verification.
Rational reconstruct_rational(double x, long long max_den = 1'000'000);

}  // namespace cspop
