#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace rilab {

/// Exact rational used for every interval endpoint, length and weight.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// num / 2^exp
Rational dyadic(std::int64_t num, int exp);

/// 2^k for any integer k.
Rational pow2(int k);

double to_double(const Rational& r);

/// Exact conversion; every finite double is a dyadic rational.
Rational from_double(double x);

/// Level of a dyadic rational: smallest m with r * 2^m integral.
/// Empty when the denominator is not a power of two.
std::optional<int> dyadic_level(const Rational& r);

/// Bit length of the reduced denominator.
int denominator_bits(const Rational& r);

Rational abs(const Rational& r);

/// Integer power, negative exponents allowed for nonzero base.
Rational pow(const Rational& base, int exponent);

/// "p/q" or "p" for integers.
std::string to_string(const Rational& r);

/// Accepts "3", "-3/4", "0.25" (decimal literal parsed exactly).
Rational parse_rational(std::string_view text);

/// Small-height rational approximation r/s of x with s <= max_den, returned
/// only when r/s converts back to exactly x.
std::optional<std::pair<std::int64_t, std::int64_t>> exact_small_fraction(double x,
                                                                          std::int64_t max_den = 64);

}  // namespace rilab
