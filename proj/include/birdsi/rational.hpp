#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <string>

namespace birdsi {

// All retrieval metrics are computed in exact rational arithmetic so that
// golden values compare bit-stably and aggregate means stay exact no matter
// how many queries are averaged.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;
using Count = std::int64_t;

// Ceiling of a rational, exact (no floating point involved).
Count ceil_rational(const Rational& value);

double to_double(const Rational& value);

// "3/4" for non-integers, "3" when the denominator is 1.
std::string to_fraction_string(const Rational& value);

// Fixed-point decimal rendering with exact round-half-up, e.g. 1/3 -> "0.333333".
std::string format_fixed(const Rational& value, int places = 6);

// Parses "1.25", "5/4", or "3" into an exact rational. Throws InputError on
// malformed text.
Rational parse_rational(const std::string& text);

}  // namespace birdsi
