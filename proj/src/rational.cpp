#include "rilab/rational.hpp"

#include <cmath>
#include <stdexcept>

namespace rilab {

Rational pow2(int k) {
  BigInt one = 1;
  if (k >= 0) return Rational(one << k);
  return Rational(one, one << (-k));
}

Rational dyadic(std::int64_t num, int exp) { return Rational(num) * pow2(-exp); }

double to_double(const Rational& r) { return r.convert_to<double>(); }

Rational from_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("from_double: non-finite value");
  int e = 0;
  double m = std::frexp(x, &e);  // x = m * 2^e, |m| in [0.5, 1)
  auto mant = static_cast<std::int64_t>(std::ldexp(m, 53));
  return Rational(mant) * pow2(e - 53);
}

std::optional<int> dyadic_level(const Rational& r) {
  BigInt den = boost::multiprecision::denominator(r);
  int level = 0;
  while (den > 1) {
    if ((den & 1) != 0) return std::nullopt;
    den >>= 1;
    ++level;
  }
  return level;
}

int denominator_bits(const Rational& r) {
  BigInt den = boost::multiprecision::denominator(r);
  if (den <= 1) return 0;
  return static_cast<int>(boost::multiprecision::msb(den)) + 1;
}

Rational abs(const Rational& r) { return r < 0 ? Rational(-r) : r; }

Rational pow(const Rational& base, int exponent) {
  if (exponent < 0) {
    if (base == 0) throw std::domain_error("pow: zero to a negative power");
    return pow(Rational(1) / base, -exponent);
  }
  Rational result = 1;
  Rational b = base;
  while (exponent > 0) {
    if (exponent & 1) result *= b;
    b *= b;
    exponent >>= 1;
  }
  return result;
}

std::string to_string(const Rational& r) {
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw std::invalid_argument("parse_rational: empty string");
  try {
    if (auto slash = s.find('/'); slash != std::string::npos) {
      BigInt num(s.substr(0, slash));
      BigInt den(s.substr(slash + 1));
      if (den == 0) throw std::invalid_argument("parse_rational: zero denominator");
      return Rational(num, den);
    }
    if (auto dot = s.find('.'); dot != std::string::npos) {
      bool negative = s[0] == '-';
      std::string int_part = s.substr(negative ? 1 : 0, dot - (negative ? 1 : 0));
      std::string frac_part = s.substr(dot + 1);
      if (int_part.empty()) int_part = "0";
      BigInt scale = 1;
      for (std::size_t i = 0; i < frac_part.size(); ++i) scale *= 10;
      BigInt num(int_part + frac_part);
      Rational r(num, scale);
      return negative ? Rational(-r) : r;
    }
    return Rational(BigInt(s));
  } catch (const std::runtime_error&) {
    throw std::invalid_argument("parse_rational: malformed '" + s + "'");
  }
}

std::optional<std::pair<std::int64_t, std::int64_t>> exact_small_fraction(double x,
                                                                          std::int64_t max_den) {
  if (!std::isfinite(x)) return std::nullopt;
  for (std::int64_t den = 1; den <= max_den; ++den) {
    double scaled = x * static_cast<double>(den);
    double num = std::round(scaled);
    if (std::abs(num) > 1e15) return std::nullopt;
    if (num / static_cast<double>(den) == x && std::abs(scaled - num) < 1e-9) {
      return std::pair{static_cast<std::int64_t>(num), den};
    }
  }
  return std::nullopt;
}

}  // namespace rilab
