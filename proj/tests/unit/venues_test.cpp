#include <gtest/gtest.h>

#include <random>

#include "lendsim/errors.hpp"
#include "lendsim/venues.hpp"
#include "support.hpp"

using namespace testing_support;

namespace {

struct Exchange {
  Desk d;
  AssetId xyz = d.asset("XYZ", "10");
  AssetId usdc = d.asset("USDC", "1");
  AccountId trader = d.user("trader", {{xyz, "1000"}, {usdc, "100000"}});

  VenueId quote(const char* id, const char* price, std::uint32_t fee_bps, const char* inventory_usdc,
                const char* inventory_xyz = "0") {
    VenueId v = d.w.venues.add_quote_venue(id, usdc, {{xyz, QuoteSource{W(price), Wad::one()}}}, fee_bps);
    d.fund(d.w.venues.account(v), usdc, W(inventory_usdc));
    d.fund(d.w.venues.account(v), xyz, W(inventory_xyz));
    return v;
  }
  VenueId amm(const char* r0, const char* r1, std::uint32_t fee_bps) {
    VenueId v = d.w.venues.add_amm("amm", xyz, usdc, fee_bps);
    d.fund(d.w.venues.account(v), xyz, W(r0));
    d.fund(d.w.venues.account(v), usdc, W(r1));
    return v;
  }
  Venues& v() { return d.w.venues; }
};

// Exact constant-product output before rounding.
cpp_rational amm_exact(const cpp_rational& x, const cpp_rational& y, const cpp_rational& in, std::uint32_t fee_bps) {
  cpp_rational eff = in * cpp_rational(10000 - fee_bps, 10000);
  return y * eff / (x + eff);
}

}  // namespace

TEST(QuoteVenue, LinearPayoffs) {
  Exchange ex;
  VenueId a = ex.quote("A", "11", 0, "1000");
  VenueId b = ex.quote("B", "10", 0, "0", "100");
  EXPECT_EQ(ex.v().sell(ex.trader, a, ex.xyz, W("10"), 0), W("110"));
  EXPECT_EQ(ex.v().buy(ex.trader, b, ex.xyz, W("10"), 0), W("100"));
  EXPECT_EQ(ex.d.w.ledger.balance(ex.trader, ex.usdc), W("100010"));
}

TEST(QuoteVenue, FeeMatchesRational) {
  Exchange ex;
  VenueId a = ex.quote("A", "11", 30, "1000");
  EXPECT_EQ(ex.v().quote_sell(a, ex.xyz, W("10"), 0), W("109.67"));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    Wad amt = Wad::from_raw(rng() % (u128(10'000) * Wad::kScale));
    cpp_rational sell = Q(amt) * 11 * cpp_rational(9970, 10000);
    cpp_rational buy = Q(amt) * 11 / cpp_rational(9970, 10000);
    Wad s = ex.v().quote_sell(a, ex.xyz, amt, 0);
    Wad b = ex.v().quote_buy(a, ex.xyz, amt, 0);
    ASSERT_LE(Q(s), sell);
    ASSERT_LT(sell - Q(s), Q(Wad::from_raw(1)));
    ASSERT_GE(Q(b), buy);
    ASSERT_LT(Q(b) - buy, Q(Wad::from_raw(1)));
  }
}

TEST(QuoteVenue, InventoryGuardAndConservation) {
  Exchange ex;
  VenueId a = ex.quote("A", "11", 0, "50");
  try {
    ex.v().sell(ex.trader, a, ex.xyz, W("10"), 0);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.code(), ErrorCode::insufficient_inventory);
  }
  Wad xyz_before = ex.d.w.ledger.supply(ex.xyz);
  Wad usdc_before = ex.d.w.ledger.supply(ex.usdc);
  ex.v().sell(ex.trader, a, ex.xyz, W("4"), 0);
  EXPECT_EQ(ex.d.w.ledger.supply(ex.xyz), xyz_before);
  EXPECT_EQ(ex.d.w.ledger.supply(ex.usdc), usdc_before);
  EXPECT_EQ(ex.d.w.ledger.balance(ex.trader, ex.usdc) + ex.d.w.ledger.balance(ex.v().account(a), ex.usdc),
            W("100050"));
}

TEST(QuoteVenue, OracleLinkedQuote) {
  Exchange ex;
  VenueId v = ex.v().add_quote_venue("otc", ex.usdc, {{ex.xyz, QuoteSource{std::nullopt, W("1.02")}}}, 0);
  EXPECT_EQ(ex.v().quote_price(v, ex.xyz, 0), W("10.2"));
}

TEST(Amm, ExampleAndProductInvariant) {
  Exchange ex;
  VenueId a = ex.amm("1000", "1000", 0);
  Wad out = ex.v().amm_swap(ex.trader, a, ex.xyz, W("100"));
  cpp_rational exact = amm_exact(1000, 1000, 100, 0);  // 90.9090...
  EXPECT_LE(Q(out), exact);
  EXPECT_LT(exact - Q(out), Q(Wad::from_raw(1)));
  auto [x, y] = ex.v().reserves(a);
  EXPECT_EQ(x, W("1100"));
  EXPECT_GE(Q(x) * Q(y), cpp_rational(1000 * 1000));
  EXPECT_EQ(ex.v().amm_out(a, ex.xyz, Wad{}), Wad{});
}

TEST(Amm, ProductNeverDecreasesStrictWithFee) {
  std::mt19937_64 rng(21);
  for (std::uint32_t fee : {0u, 30u, 100u}) {
    Exchange ex;
    VenueId a = ex.amm("500", "5000", fee);
    ex.d.fund(ex.trader, ex.xyz, W("100000"));
    ex.d.fund(ex.trader, ex.usdc, W("1000000"));
    for (int i = 0; i < 300; ++i) {
      auto [x0, y0] = ex.v().reserves(a);
      AssetId in = rng() % 2 ? ex.xyz : ex.usdc;
      Wad amt = Wad::from_raw(rng() % (u128(100) * Wad::kScale) + 1);
      ex.v().amm_swap(ex.trader, a, in, amt);
      auto [x1, y1] = ex.v().reserves(a);
      cpp_int k0 = big(x0.raw()) * big(y0.raw()), k1 = big(x1.raw()) * big(y1.raw());
      ASSERT_GE(k1, k0);
      if (fee > 0 && amt.raw() > 10'000) ASSERT_GT(k1, k0);
    }
  }
}

TEST(Amm, SplitSwapsVersusCombined) {
  // Grid over split points. Without a fee the two paths agree up to
  // rounding. With a fee the first leg's fee deepens the reserve the second
  // leg trades against, so splitting can only lose.
  for (std::uint32_t fee : {0u, 30u}) {
    for (int total = 10; total <= 200; total += 38) {
      for (int first = 1; first < total; first += 7) {
        Exchange one, two;
        VenueId a1 = one.amm("1000", "1000", fee);
        VenueId a2 = two.amm("1000", "1000", fee);
        Wad combined = one.v().amm_swap(one.trader, a1, one.xyz, Wad::units(static_cast<std::uint64_t>(total)));
        Wad s1 = two.v().amm_swap(two.trader, a2, two.xyz, Wad::units(static_cast<std::uint64_t>(first)));
        Wad s2 = two.v().amm_swap(two.trader, a2, two.xyz, Wad::units(static_cast<std::uint64_t>(total - first)));
        cpp_rational sequential = Q(s1) + Q(s2);
        if (fee == 0) {
          ASSERT_LE(Q(combined), sequential + Q(Wad::from_raw(2)));
          ASSERT_LE(sequential, Q(combined) + Q(Wad::from_raw(2)));
        } else {
          ASSERT_GE(Q(combined) + Q(Wad::from_raw(2)), sequential);
        }
      }
    }
  }
}

TEST(Amm, InForOutIsMinimal) {
  std::mt19937_64 rng(77);
  Exchange ex;
  VenueId a = ex.amm("3000", "7000", 30);
  for (int i = 0; i < 500; ++i) {
    Wad want = Wad::from_raw(rng() % (u128(6000) * Wad::kScale) + 1);
    Wad in = ex.v().amm_in_for_out(a, ex.usdc, want);
    ASSERT_GE(ex.v().amm_out(a, ex.xyz, in), want);
    ASSERT_LT(ex.v().amm_out(a, ex.xyz, in - Wad::from_raw(1)), want);
  }
  EXPECT_THROW(ex.v().amm_in_for_out(a, ex.usdc, W("7000")), ProtocolError);
}

TEST(Amm, ConvertAndAcquireRouteThroughBothKinds) {
  Exchange ex;
  VenueId q = ex.quote("Q", "10", 0, "10000", "1000");
  VenueId a = ex.amm("1000", "10000", 0);
  EXPECT_TRUE(ex.v().converts(q, ex.xyz, ex.usdc));
  EXPECT_TRUE(ex.v().converts(a, ex.usdc, ex.xyz));
  EXPECT_FALSE(ex.v().converts(q, ex.xyz, ex.xyz));
  // Buying exactly 5 XYZ costs 50 on the quote venue.
  EXPECT_EQ(ex.v().acquire(ex.trader, q, ex.usdc, ex.xyz, W("5"), 0), W("50"));
  Wad before = ex.d.w.ledger.balance(ex.trader, ex.xyz);
  Wad quoted = ex.v().cost_of(a, ex.usdc, ex.xyz, W("5"), 0);
  EXPECT_EQ(ex.v().acquire(ex.trader, a, ex.usdc, ex.xyz, W("5"), 0), quoted);
  EXPECT_GE(ex.d.w.ledger.balance(ex.trader, ex.xyz) - before, W("5"));
  EXPECT_EQ(ex.v().mid_price(q, ex.xyz, ex.usdc, 0), W("10"));
}
