#include "lendsim/fixed.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include "lendsim/errors.hpp"

namespace lendsim {

namespace {

using boost::multiprecision::uint256_t;

u128 narrow(const uint256_t& value) {
  if (value > uint256_t(~u128(0))) throw ProtocolError(ErrorCode::overflow, "fixed-point result exceeds 128 bits");
  return static_cast<u128>(value);
}

u128 pow10(int exponent) {
  u128 result = 1;
  for (int i = 0; i < exponent; ++i) {
    if (result > (~u128(0)) / 10) throw ProtocolError(ErrorCode::overflow, "power of ten");
    result *= 10;
  }
  return result;
}

}  // namespace

u128 mul_div(u128 a, u128 b, u128 d, Rounding rounding) {
  if (d == 0) throw ProtocolError(ErrorCode::division_by_zero, "mul_div");
  u128 product;
  if (!__builtin_mul_overflow(a, b, &product)) {
    u128 q = product / d;
    if (rounding == Rounding::up && product % d != 0) ++q;
    return q;
  }
  uint256_t n = uint256_t(a) * uint256_t(b);
  uint256_t q = n / d;
  if (rounding == Rounding::up && q * d != n) ++q;
  return narrow(q);
}

u128 mul_mul_div(u128 a, u128 b, u128 c, u128 d, u128 e, Rounding rounding) {
  using boost::multiprecision::uint512_t;
  uint512_t den = uint512_t(d) * uint512_t(e);
  if (den == 0) throw ProtocolError(ErrorCode::division_by_zero, "mul_mul_div");
  uint512_t num = uint512_t(a) * uint512_t(b) * uint512_t(c);
  uint512_t q = num / den;
  if (rounding == Rounding::up && q * den != num) ++q;
  if (q > uint512_t(~u128(0))) throw ProtocolError(ErrorCode::overflow, "mul_mul_div result exceeds 128 bits");
  return static_cast<u128>(q);
}

Wad Wad::parse(std::string_view text) {
  auto fail = [&](const char* why) {
    return ProtocolError(ErrorCode::parse_error, std::string("invalid amount '") + std::string(text) + "': " + why);
  };
  if (text.empty()) throw fail("empty");
  std::size_t i = 0;
  if (text[i] == '+') ++i;
  u128 digits = 0;
  int frac_len = 0;
  bool seen_digit = false;
  bool in_frac = false;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (c == '.') {
      if (in_frac) throw fail("second decimal point");
      in_frac = true;
      continue;
    }
    if (c == 'e' || c == 'E') break;
    if (c < '0' || c > '9') throw fail("unexpected character");
    seen_digit = true;
    if (digits > ((~u128(0)) - 9) / 10) throw fail("too many digits");
    digits = digits * 10 + static_cast<u128>(c - '0');
    if (in_frac) ++frac_len;
  }
  if (!seen_digit) throw fail("no digits");
  int exponent = 0;
  if (i < text.size()) {
    ++i;
    bool negative = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
      negative = text[i] == '-';
      ++i;
    }
    if (i >= text.size()) throw fail("empty exponent");
    for (; i < text.size(); ++i) {
      char c = text[i];
      if (c < '0' || c > '9') throw fail("bad exponent");
      exponent = exponent * 10 + (c - '0');
      if (exponent > 80) throw fail("exponent out of range");
    }
    if (negative) exponent = -exponent;
  }
  int shift = exponent - frac_len + kDecimals;
  if (shift >= 0) {
    u128 factor = pow10(shift);
    u128 raw;
    if (__builtin_mul_overflow(digits, factor, &raw)) throw fail("out of range");
    return from_raw(raw);
  }
  u128 divisor = pow10(-shift);
  if (digits % divisor != 0) throw fail("more than 18 decimal places");
  return from_raw(digits / divisor);
}

std::string u128_to_string(u128 value) {
  if (value == 0) return "0";
  std::string out;
  while (value > 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
    value /= 10;
  }
  return {out.rbegin(), out.rend()};
}

std::string Wad::to_string() const {
  std::string whole = u128_to_string(raw_ / kScale);
  u128 frac = raw_ % kScale;
  if (frac == 0) return whole;
  std::string digits = u128_to_string(frac);
  std::string padded(static_cast<std::size_t>(kDecimals) - digits.size(), '0');
  padded += digits;
  while (!padded.empty() && padded.back() == '0') padded.pop_back();
  return whole + "." + padded;
}

double Wad::to_double() const noexcept {
  return static_cast<double>(raw_ / kScale) + static_cast<double>(raw_ % kScale) / 1e18;
}

Wad& Wad::operator+=(Wad other) {
  if (__builtin_add_overflow(raw_, other.raw_, &raw_)) throw ProtocolError(ErrorCode::overflow, "wad addition");
  return *this;
}

Wad& Wad::operator-=(Wad other) {
  if (other.raw_ > raw_) throw ProtocolError(ErrorCode::underflow, "wad subtraction");
  raw_ -= other.raw_;
  return *this;
}

SignedWad SignedWad::difference(Wad after, Wad before) {
  constexpr u128 limit = static_cast<u128>(~u128(0)) >> 1;
  if (after.raw() > limit || before.raw() > limit) throw ProtocolError(ErrorCode::overflow, "signed difference");
  return from_raw(static_cast<i128>(after.raw()) - static_cast<i128>(before.raw()));
}

std::string SignedWad::to_string() const {
  if (raw_ < 0) return "-" + Wad::from_raw(static_cast<u128>(-raw_)).to_string();
  return Wad::from_raw(static_cast<u128>(raw_)).to_string();
}

double SignedWad::to_double() const noexcept {
  if (raw_ < 0) return -Wad::from_raw(static_cast<u128>(-raw_)).to_double();
  return Wad::from_raw(static_cast<u128>(raw_)).to_double();
}

}  // namespace lendsim
