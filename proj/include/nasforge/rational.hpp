#pragma once

// Exact rationals for expansion ratios. Ratios like 2.25 or 0.75 are not
// representable cleanly in binary floating point, and mid-channel widths
// must round identically everywhere, so grids are enumerated exactly.

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace nasforge {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (den == 0) throw std::invalid_argument("Rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  explicit Rational(std::int64_t n) : num(n), den(1) {}

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
  bool operator!=(const Rational& o) const { return !(*this == o); }
  bool operator<(const Rational& o) const { return num * o.den < o.num * den; }
  bool operator<=(const Rational& o) const { return num * o.den <= o.num * den; }
  bool operator>(const Rational& o) const { return o < *this; }
  bool operator>=(const Rational& o) const { return o <= *this; }

  Rational operator+(const Rational& o) const {
    return Rational(num * o.den + o.num * den, den * o.den);
  }
  Rational operator-(const Rational& o) const {
    return Rational(num * o.den - o.num * den, den * o.den);
  }
  Rational operator*(const Rational& o) const { return Rational(num * o.num, den * o.den); }

  // floor((num*c)/den + 1/2): round half away from zero for positive values.
  std::int64_t round_half_up_times(std::int64_t c) const {
    const std::int64_t a = num * c;
    if (a < 0) throw std::invalid_argument("round_half_up_times: negative product");
    return (2 * a + den) / (2 * den);
  }

  bool is_integer() const { return den == 1; }

  // Decimal string when the denominator divides a power of ten, else "num/den".
  std::string str() const {
    std::int64_t d = den;
    int tens = 0;
    while (d % 2 == 0) {
      d /= 2;
      ++tens;
    }
    int fives = 0;
    while (d % 5 == 0) {
      d /= 5;
      ++fives;
    }
    if (d != 1) return std::to_string(num) + "/" + std::to_string(den);
    const int digits = tens > fives ? tens : fives;
    std::int64_t scale = 1;
    for (int i = 0; i < digits; ++i) scale *= 10;
    const std::int64_t scaled = num * (scale / den);
    std::string whole = std::to_string(scaled / scale);
    if (digits == 0) return whole;
    std::string frac = std::to_string(scaled % scale);
    while (static_cast<int>(frac.size()) < digits) frac = "0" + frac;
    while (frac.size() > 1 && frac.back() == '0') frac.pop_back();
    if (frac == "0") return whole;
    return whole + "." + frac;
  }

  static Rational parse(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("Rational::parse: empty string");
    const auto slash = s.find('/');
    if (slash != std::string::npos) {
      return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
    }
    const auto dot = s.find('.');
    if (dot == std::string::npos) return Rational(std::stoll(s));
    const std::string whole = s.substr(0, dot);
    const std::string frac = s.substr(dot + 1);
    if (frac.empty()) return Rational(std::stoll(whole));
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    const bool neg = !whole.empty() && whole[0] == '-';
    const std::int64_t w = whole == "-" || whole.empty() ? 0 : std::stoll(whole);
    const std::int64_t f = std::stoll(frac);
    const std::int64_t n = (neg ? -1 : 1) * ((w < 0 ? -w : w) * scale + f);
    return Rational(n, scale);
  }
};

}  // namespace nasforge
