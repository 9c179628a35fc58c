#include "birdsi/rational.hpp"

#include <cctype>

#include "birdsi/errors.hpp"

namespace birdsi {

Count ceil_rational(const Rational& value) {
  BigInt num = numerator(value);
  BigInt den = denominator(value);  // always > 0 in canonical form
  BigInt q = num / den;             // truncates toward zero
  if (num > 0 && q * den != num) ++q;
  return q.convert_to<Count>();
}

double to_double(const Rational& value) { return value.convert_to<double>(); }

std::string to_fraction_string(const Rational& value) {
  if (denominator(value) == 1) return numerator(value).str();
  return numerator(value).str() + "/" + denominator(value).str();
}

std::string format_fixed(const Rational& value, int places) {
  BigInt scale = 1;
  for (int i = 0; i < places; ++i) scale *= 10;
  BigInt num = numerator(value) * scale;
  BigInt den = denominator(value);
  bool negative = num < 0;
  if (negative) num = -num;
  BigInt rounded = (2 * num + den) / (2 * den);  // round half up in magnitude
  std::string digits = rounded.str();
  if (static_cast<int>(digits.size()) <= places)
    digits.insert(0, places + 1 - digits.size(), '0');
  digits.insert(digits.size() - places, ".");
  if (negative && rounded != 0) digits.insert(0, "-");
  return digits;
}

namespace {

// Decimal-only integer parse; cpp_int's string constructor would read a
// leading zero as an octal prefix.
BigInt parse_digits(const std::string& text, const std::string& original) {
  std::string body = text;
  bool negative = false;
  if (!body.empty() && (body[0] == '-' || body[0] == '+')) {
    negative = body[0] == '-';
    body.erase(0, 1);
  }
  if (body.empty())
    throw InputError("malformed rational: '" + original + "'");
  BigInt value = 0;
  for (char c : body) {
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw InputError("malformed rational: '" + original + "'");
    value = value * 10 + (c - '0');
  }
  return negative ? -value : value;
}

}  // namespace

Rational parse_rational(const std::string& text) {
  if (text.empty()) throw InputError("malformed rational: ''");
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    BigInt num = parse_digits(text.substr(0, slash), text);
    BigInt den = parse_digits(text.substr(slash + 1), text);
    if (den == 0) throw InputError("malformed rational: '" + text + "'");
    return Rational(num, den);
  }
  auto dot = text.find('.');
  if (dot == std::string::npos) return Rational(parse_digits(text, text));
  std::string whole = text.substr(0, dot);
  std::string frac = text.substr(dot + 1);
  bool negative = !whole.empty() && whole[0] == '-';
  BigInt whole_part =
      (whole.empty() || whole == "-" || whole == "+") ? BigInt(0)
                                                      : parse_digits(whole, text);
  BigInt frac_part = parse_digits(frac, text);
  if (frac_part < 0) throw InputError("malformed rational: '" + text + "'");
  BigInt scale = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
  BigInt num = whole_part * scale + (negative ? -frac_part : frac_part);
  return Rational(num, scale);
}

}  // namespace birdsi
