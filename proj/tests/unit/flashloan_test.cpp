#include <gtest/gtest.h>

#include <random>

#include "lendsim/errors.hpp"
#include "lendsim/flashloan.hpp"
#include "lendsim/liquidation.hpp"
#include "support.hpp"

using namespace testing_support;

namespace {

PoolParams flash_pool(AssetId asset, const char* fee = "0") {
  PoolParams p = pool_params(asset);
  p.flash_fee = W(fee);
  return p;
}

// Flash loan 1 setting: XYZ pool, venue A bids P_A, venue B asks P_B.
struct Arb {
  Desk d;
  AssetId xyz = d.asset("XYZ", "10");
  AssetId usdc = d.asset("USDC", "1");
  PoolId pool;
  VenueId a, b;
  AccountId trader = d.user("trader");

  Arb(const char* pa, const char* pb, const char* phi = "0", std::uint32_t fee_bps = 0) {
    pool = d.pool("xyz", flash_pool(xyz, phi), "1000");
    a = d.w.venues.add_quote_venue("A", usdc, {{xyz, QuoteSource{W(pa), Wad::one()}}}, fee_bps);
    b = d.w.venues.add_quote_venue("B", usdc, {{xyz, QuoteSource{W(pb), Wad::one()}}}, fee_bps);
    d.fund(d.w.venues.account(a), usdc, W("100000"));
    d.fund(d.w.venues.account(b), xyz, W("10000"));
    d.w.gas_asset = usdc;
  }
  FlashPlan plan(const char* size) {
    return FlashPlan{trader, xyz, W(size), {plan::SellOn{a, xyz}, plan::BuyOn{b, xyz}}, usdc};
  }
};

// Serialised journal, for byte comparisons.
std::vector<std::string> journal_lines(const Ledger& l) {
  std::vector<std::string> out;
  for (const auto& r : l.journal()) out.push_back(l.journal_line(r));
  return out;
}

cpp_rational amm_out_exact(const cpp_rational& x, const cpp_rational& y, const cpp_rational& in, int fee_bps) {
  cpp_rational eff = in * cpp_rational(10000 - fee_bps, 10000);
  return y * eff / (x + eff);
}

cpp_rational floor_wad(const cpp_rational& q) { return Q(Wad::from_raw(to_raw(q))); }

}  // namespace

TEST(FlashLoan1, ProfitIsSizeTimesGap) {
  Arb arb("11", "10");
  FlashOutcome o = execute(arb.d.w, arb.plan("10"), 0);
  ASSERT_TRUE(o.committed()) << o.detail;
  EXPECT_EQ(o.profit, SignedWad::difference(W("10"), Wad{}));
  EXPECT_EQ(o.repaid, W("10"));
  EXPECT_EQ(arb.d.w.lending.cash(arb.pool), W("1000"));
  EXPECT_EQ(arb.d.w.ledger.balance(arb.trader, arb.usdc), W("10"));
  EXPECT_EQ(arb.d.w.ledger.balance(arb.trader, arb.xyz), Wad{});
  arb.d.w.ledger.audit();
}

TEST(FlashLoan1, EqualPricesCostOnlyGas) {
  Arb arb("10", "10");
  arb.d.w.gas_fee = W("0.5");
  arb.d.fund(arb.trader, arb.usdc, W("1"));
  FlashOutcome o = execute(arb.d.w, arb.plan("10"), 0);
  ASSERT_TRUE(o.committed());
  EXPECT_EQ(o.profit, SignedWad::difference(Wad{}, W("0.5")));
  EXPECT_EQ(arb.d.w.ledger.balance(arb.d.w.fee_sink, arb.usdc), W("0.5"));
}

TEST(FlashLoan1, FlashFeeIsPaidToThePool) {
  Arb arb("11", "10", "0.0009");
  FlashOutcome o = execute(arb.d.w, arb.plan("100"), 0);
  ASSERT_TRUE(o.committed());
  EXPECT_EQ(o.repaid, W("100.09"));
  EXPECT_EQ(arb.d.w.lending.cash(arb.pool), W("1000.09"));
  // Sell 100 at 11, buy back 100.09 at 10.
  EXPECT_EQ(o.profit, SignedWad::difference(W("1100"), W("1000.9")));
}

TEST(FlashLoan1, ShortfallRevertsAndKeepsOnlyGas) {
  Arb arb("10", "11");
  arb.d.w.gas_fee = W("0.25");
  arb.d.fund(arb.trader, arb.usdc, W("5"));
  auto journal = journal_lines(arb.d.w.ledger);
  auto snap = arb.d.w.snapshot();
  FlashOutcome o = execute(arb.d.w, arb.plan("10"), 0);
  EXPECT_FALSE(o.committed());
  ASSERT_TRUE(o.reason.has_value());
  EXPECT_EQ(*o.reason, ErrorCode::insufficient_balance);
  auto after = journal_lines(arb.d.w.ledger);
  ASSERT_EQ(after.size(), journal.size() + 1);
  EXPECT_TRUE(std::equal(journal.begin(), journal.end(), after.begin()));
  EXPECT_NE(after.back().find("\"tag\":\"gas_fee\""), std::string::npos);
  EXPECT_EQ(arb.d.w.snapshot(), snap);
  EXPECT_EQ(o.profit, SignedWad::difference(Wad{}, W("0.25")));
}

TEST(FlashLoan1, PreChecksThrowBeforeAnyMutation) {
  Arb arb("11", "10");
  std::size_t journal = arb.d.w.ledger.journal().size();
  try {
    execute(arb.d.w, arb.plan("1000.000000000000000001"), 0);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.code(), ErrorCode::insufficient_pool_liquidity);
  }
  arb.d.w.gas_fee = W("1");
  EXPECT_THROW(execute(arb.d.w, arb.plan("10"), 0), ProtocolError);
  EXPECT_EQ(arb.d.w.ledger.journal().size(), journal);
}

TEST(FlashLoan, RandomPlansAreAtomic) {
  std::mt19937_64 rng(1234);
  int reverted = 0, committed = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const char* prices[] = {"9", "10", "10.5", "11", "12"};
    Arb arb(prices[rng() % 5], prices[rng() % 5], rng() % 2 ? "0" : "0.0009", static_cast<std::uint32_t>(rng() % 50));
    arb.d.w.gas_fee = W("0.01");
    arb.d.fund(arb.trader, arb.usdc, W("0.01") + Wad::from_raw(rng() % (u128(5) * Wad::kScale)));
    Wad size = Wad::from_raw(rng() % (u128(1000) * Wad::kScale) + 1);
    FlashPlan fp{arb.trader, arb.xyz, size, {plan::SellOn{arb.a, arb.xyz}, plan::BuyOn{arb.b, arb.xyz}}, arb.usdc};
    auto journal = journal_lines(arb.d.w.ledger);
    auto snap = arb.d.w.snapshot();
    Wad pool_cash = arb.d.w.lending.cash(arb.pool);
    FlashOutcome o = execute(arb.d.w, fp, 0);
    auto after = journal_lines(arb.d.w.ledger);
    if (o.committed()) {
      ++committed;
      ASSERT_EQ(arb.d.w.lending.cash(arb.pool), pool_cash + (o.repaid - size));
      ASSERT_EQ(o.repaid, flash_repayment(arb.d.w, arb.xyz, size));
    } else {
      ++reverted;
      ASSERT_EQ(after.size(), journal.size() + 1);
      ASSERT_TRUE(std::equal(journal.begin(), journal.end(), after.begin()));
      ASSERT_EQ(arb.d.w.snapshot(), snap);
    }
    arb.d.w.ledger.audit();
  }
  EXPECT_GT(reverted, 50);
  EXPECT_GT(committed, 50);
}

namespace {

// Flash loan 2 setting: bob borrows DAI against ETH, ETH crashes, a keeper
// flash-borrows DAI, liquidates, and sells seized ETH on an AMM.
struct Crash {
  Desk d;
  AssetId eth = d.asset("ETH", "2000");
  AssetId dai = d.asset("DAI", "1");
  PoolId eth_pool, dai_pool;
  VenueId amm;
  AccountId bob = d.user("bob", {{eth, "10"}});
  AccountId keeper = d.user("keeper");

  Crash(const char* amm_eth, const char* amm_dai, std::uint32_t amm_fee, const char* phi = "0.0009") {
    d.w.oracle.set_feed(eth, PriceFeed::replay({{0, W("2000")}, {1, W("1400")}}));
    eth_pool = d.pool("eth", pool_params(eth));
    dai_pool = d.pool("dai", flash_pool(dai, phi), "1000000");
    d.w.lending.deposit(bob, eth_pool, W("10"));
    d.w.lending.borrow(bob, dai_pool, W("15000"), RateMode::variable, 0);
    amm = d.w.venues.add_amm("uni", eth, dai, amm_fee);
    d.fund(d.w.venues.account(amm), eth, W(amm_eth));
    d.fund(d.w.venues.account(amm), dai, W(amm_dai));
    d.w.gas_asset = dai;
  }
};

}  // namespace

TEST(FlashLoan2, EndToEndProfitMatchesClosedForm) {
  Crash c("5000", "7000000", 30);
  c.d.w.gas_fee = W("2");
  c.d.fund(c.keeper, c.dai, W("2"));
  ASSERT_TRUE(health(c.d.w.lending, c.bob, 1).liquidatable());
  Wad x1 = max_liquidation_repay(c.d.w.lending, c.bob, c.dai);
  EXPECT_EQ(x1, W("7500"));
  auto [rx, ry] = c.d.w.venues.reserves(c.amm);
  FlashPlan fp{c.keeper, c.dai, x1, {plan::Liquidate{c.bob, c.dai, c.eth}, plan::AmmSwap{c.amm, c.eth}}, c.dai};
  FlashOutcome o = execute(c.d.w, fp, 1);
  ASSERT_TRUE(o.committed()) << o.detail;

  // Independent recomputation: seized ETH at 1.05 bonus, then the AMM leg.
  cpp_rational seized = floor_wad(Q(x1) * cpp_rational(105, 100) / 1400);
  cpp_rational x2 = floor_wad(amm_out_exact(Q(rx), Q(ry), seized, 30));
  cpp_rational owed = Q(x1) + Q(x1) * cpp_rational(9, 10000);
  cpp_rational expected = x2 - owed - 2;
  EXPECT_GT(x2, Q(x1));
  cpp_rational got(o.profit.raw() >= 0 ? big(static_cast<u128>(o.profit.raw())) : -big(static_cast<u128>(-o.profit.raw())),
                   big(Wad::kScale));
  EXPECT_LE(abs(got - expected), Q(Wad::from_raw(1)));
  c.d.w.ledger.audit();
}

TEST(ScanArbitrage, QuoteGapGivesOneOpportunity) {
  Arb arb("11", "10");
  auto ops = scan_arbitrage(arb.d.w, 0, arb.trader);
  ASSERT_EQ(ops.size(), 1u);
  // Sized by pool cash (1000): profit 1 per unit.
  EXPECT_EQ(ops[0].plan.amount, W("1000"));
  EXPECT_EQ(ops[0].expected_profit, SignedWad::difference(W("1000"), Wad{}));
  EXPECT_EQ(ops[0].venue_or_target, "A->B");
  EXPECT_EQ(opportunity_json(arb.d.w, ops[0]),
            R"({"step":0,"kind":"arbitrage","asset":"XYZ","size":"1000","expected_profit":"1000","venue_or_target":"A->B"})");

  Arb flat("10", "10");
  EXPECT_TRUE(scan_arbitrage(flat.d.w, 0, flat.trader).empty());
}

TEST(ScanArbitrage, InventoryBoundsTheSize) {
  Arb arb("11", "10");
  // A can pay out only 5500 USDC: 500 XYZ.
  arb.d.w.ledger.transfer(arb.d.w.venues.account(arb.a), arb.trader, arb.usdc, W("94500"), JournalTag::transfer);
  auto ops = scan_arbitrage(arb.d.w, 0, arb.trader);
  ASSERT_EQ(ops.size(), 1u);
  EXPECT_EQ(ops[0].plan.amount, W("500"));
  EXPECT_EQ(ops[0].expected_profit, SignedWad::difference(W("500"), Wad{}));
}

TEST(ScanArbitrage, AmmSizingMatchesGridSearch) {
  for (std::uint32_t fee : {0u, 30u}) {
    Desk d;
    AssetId xyz = d.asset("XYZ", "10");
    AssetId usdc = d.asset("USDC", "1");
    PoolId pool = d.pool("xyz", flash_pool(xyz, "0.0009"), "20000");
    // AMM prices XYZ at 12; the quote desk sells at 10.
    VenueId amm = d.w.venues.add_amm("amm", xyz, usdc, fee);
    d.fund(d.w.venues.account(amm), xyz, W("10000"));
    d.fund(d.w.venues.account(amm), usdc, W("120000"));
    VenueId desk = d.w.venues.add_quote_venue("desk", usdc, {{xyz, QuoteSource{W("10"), Wad::one()}}}, fee);
    d.fund(d.w.venues.account(desk), xyz, W("100000"));
    AccountId t = d.user("t");
    auto ops = scan_arbitrage(d.w, 0, t);
    ASSERT_FALSE(ops.empty());
    const Opportunity& best = ops.front();
    EXPECT_EQ(best.venue_or_target, "amm->desk");

    // Grid oracle over 10^4 sizes in (0, pool cash], exact rational profit.
    cpp_rational cash = Q(d.w.lending.cash(pool));
    cpp_rational keep = cpp_rational(10000 - fee, 10000);
    cpp_rational grid_best = 0;
    for (int i = 1; i <= 10000; ++i) {
      cpp_rational size = cash * i / 10000;
      cpp_rational proceeds = amm_out_exact(10000, 120000, size, static_cast<int>(fee));
      cpp_rational cost = size * cpp_rational(10009, 10000) * 10 / keep;
      if (proceeds - cost > grid_best) grid_best = proceeds - cost;
    }
    double got = best.expected_profit.to_double();
    double want = to_double(grid_best);
    EXPECT_GT(want, 0.0);
    EXPECT_GE(got, want * (1 - 1e-3)) << "fee " << fee;
    EXPECT_LE(got, want * (1 + 1e-3)) << "fee " << fee;
    // Executing it now reproduces the scratch result.
    FlashOutcome o = execute(d.w, best.plan, 0);
    ASSERT_TRUE(o.committed());
    EXPECT_EQ(o.profit, best.expected_profit);
  }
}

TEST(ScanLiquidations, DeepMarketEarnsTheBonus) {
  Crash c("500000", "700000000", 0, "0");
  auto journal = c.d.w.ledger.journal().size();
  auto snap = c.d.w.snapshot();
  auto ops = scan_liquidations(c.d.w, 1, c.keeper);
  // Scanning leaves no trace.
  EXPECT_EQ(c.d.w.ledger.journal().size(), journal);
  EXPECT_EQ(c.d.w.snapshot(), snap);
  ASSERT_EQ(ops.size(), 1u);
  EXPECT_EQ(ops[0].venue_or_target, "bob");
  EXPECT_EQ(ops[0].plan.amount, W("7500"));
  // Closed form: seized ETH sold into a 1400-priced pool with no fee.
  cpp_rational seized = floor_wad(cpp_rational(7500) * cpp_rational(105, 100) / 1400);
  cpp_rational x2 = floor_wad(amm_out_exact(500000, 700000000, seized, 0));
  double closed = to_double(x2 - 7500);
  EXPECT_NEAR(ops[0].expected_profit.to_double(), closed, 1e-12 * closed);
  // About 5% of the repay value, less a sliver of price impact.
  EXPECT_NEAR(ops[0].expected_profit.to_double() / 7500.0, 0.05, 0.001);

  FlashOutcome o = execute(c.d.w, ops[0].plan, 1);
  ASSERT_TRUE(o.committed());
  EXPECT_EQ(o.profit, ops[0].expected_profit);
}

TEST(ScanLiquidations, SlippageEatingTheBonusIsExcluded) {
  Crash shallow("10", "14000", 30);
  EXPECT_TRUE(health(shallow.d.w.lending, shallow.bob, 1).liquidatable());
  EXPECT_TRUE(scan_liquidations(shallow.d.w, 1, shallow.keeper).empty());
}

TEST(ScanLiquidations, HealthyWorldIsEmpty) {
  Crash c("5000", "7000000", 30);
  EXPECT_TRUE(scan_liquidations(c.d.w, 0, c.keeper).empty());
}

TEST(ScanLiquidations, UnsafeVaultIsFlashLiquidated) {
  Desk d;
  AssetId eth = d.asset("ETH", "2000");
  AssetId dai = d.asset("DAI", "1", {Authority::genesis, Authority::cdp});
  d.w.oracle.set_feed(eth, PriceFeed::replay({{0, W("2000")}, {1, W("1400")}}));
  d.pool("dai", flash_pool(dai), "100000");
  CdpParams p;
  p.stablecoin = dai;
  p.issuance_fraction[eth] = W("0.6");
  p.liquidation_penalty = W("0.1");
  VaultEngine& cdp = d.w.enable_cdp(p);
  AccountId owner = d.user("owner", {{eth, "10"}});
  VaultId v = cdp.open_vault(owner);
  cdp.lock(v, eth, W("10"));
  cdp.draw(v, W("10000"), 0);
  VenueId amm = d.w.venues.add_amm("uni", eth, dai, 0);
  d.fund(d.w.venues.account(amm), eth, W("100000"));
  d.fund(d.w.venues.account(amm), dai, W("140000000"));
  AccountId keeper = d.user("keeper");
  auto ops = scan_liquidations(d.w, 1, keeper);
  ASSERT_EQ(ops.size(), 1u);
  EXPECT_EQ(ops[0].venue_or_target, "vault#0");
  FlashOutcome o = execute(d.w, ops[0].plan, 1);
  ASSERT_TRUE(o.committed());
  EXPECT_EQ(cdp.debt(v), Wad{});
  EXPECT_NEAR(o.profit.to_double(), 1000.0, 1.0);  // 10% penalty on 10000
  d.w.ledger.audit();
}
