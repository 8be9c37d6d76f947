#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace lendsim {

using u128 = unsigned __int128;
using i128 = __int128;

enum class Rounding { down, up };

/// Unsigned fixed-point number with 18 implied decimals ("wad").
///
/// Amounts, prices, USD values, per-step rates and indices all use this one
/// representation so protocol state never touches floating point. Arithmetic
/// throws ProtocolError(overflow/underflow) instead of wrapping.
class Wad {
 public:
  static constexpr u128 kScale = 1'000'000'000'000'000'000ULL;
  static constexpr int kDecimals = 18;

  constexpr Wad() = default;

  static constexpr Wad from_raw(u128 raw) noexcept {
    Wad w;
    w.raw_ = raw;
    return w;
  }
  static constexpr Wad units(std::uint64_t whole) noexcept { return from_raw(u128(whole) * kScale); }
  static constexpr Wad one() noexcept { return from_raw(kScale); }
  static constexpr Wad zero() noexcept { return {}; }
  static constexpr Wad max() noexcept { return from_raw(~u128(0)); }

  /// Parses "123", "0.5", "9.37e9". More than 18 significant decimals is a
  /// ParseError rather than a silent truncation.
  static Wad parse(std::string_view text);

  constexpr u128 raw() const noexcept { return raw_; }
  constexpr bool is_zero() const noexcept { return raw_ == 0; }

  /// Canonical decimal form: no exponent, trailing zeros trimmed.
  std::string to_string() const;
  double to_double() const noexcept;

  friend constexpr auto operator<=>(Wad, Wad) = default;

  Wad& operator+=(Wad other);
  Wad& operator-=(Wad other);
  friend Wad operator+(Wad a, Wad b) { return a += b; }
  friend Wad operator-(Wad a, Wad b) { return a -= b; }

 private:
  u128 raw_{0};
};

using Amount = Wad;

/// floor or ceil of a*b/d with a 256-bit intermediate.
u128 mul_div(u128 a, u128 b, u128 d, Rounding rounding = Rounding::down);

inline Wad mul(Wad a, Wad b, Rounding r = Rounding::down) {
  return Wad::from_raw(mul_div(a.raw(), b.raw(), Wad::kScale, r));
}
inline Wad div(Wad a, Wad b, Rounding r = Rounding::down) {
  return Wad::from_raw(mul_div(a.raw(), Wad::kScale, b.raw(), r));
}
inline Wad mul_div(Wad a, Wad b, Wad d, Rounding r = Rounding::down) {
  return Wad::from_raw(mul_div(a.raw(), b.raw(), d.raw(), r));
}

/// a*b*c / (d*e) with a single final rounding.
u128 mul_mul_div(u128 a, u128 b, u128 c, u128 d, u128 e, Rounding rounding);

/// Saturating difference, zero when b > a.
inline Wad sub_floor(Wad a, Wad b) noexcept { return a > b ? Wad::from_raw(a.raw() - b.raw()) : Wad{}; }

/// Basis points as a wad fraction (30 -> 0.003).
inline Wad from_bps(std::uint32_t bps) noexcept { return Wad::from_raw(u128(bps) * (Wad::kScale / 10'000)); }

/// Signed fixed-point, used only for reporting deltas (profit, P&L).
class SignedWad {
 public:
  constexpr SignedWad() = default;
  static SignedWad difference(Wad after, Wad before);
  static constexpr SignedWad from_raw(i128 raw) noexcept {
    SignedWad s;
    s.raw_ = raw;
    return s;
  }
  constexpr i128 raw() const noexcept { return raw_; }
  std::string to_string() const;
  double to_double() const noexcept;
  friend constexpr auto operator<=>(SignedWad, SignedWad) = default;
  SignedWad& operator+=(SignedWad o) noexcept {
    raw_ += o.raw_;
    return *this;
  }

 private:
  i128 raw_{0};
};

std::string u128_to_string(u128 value);

}  // namespace lendsim
