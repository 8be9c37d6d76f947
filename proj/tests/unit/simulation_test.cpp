#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "lendsim/scenario.hpp"
#include "lendsim/simulation.hpp"
#include "support.hpp"

using namespace testing_support;

namespace {

std::string fixture(const char* name) { return std::string(LENDSIM_SCENARIO_DIR) + "/" + name; }

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<nlohmann::json> events_of(const std::string& text) {
  std::vector<nlohmann::json> out;
  for (const auto& line : lines_of(text)) out.push_back(nlohmann::json::parse(line));
  return out;
}

struct Spiral {
  Desk d;
  AssetId usdc = d.asset("USDC", "1");
  AssetId usdt = d.asset("USDT", "1");
  PoolId up = d.pool("usdc", pool_params(usdc, "0.75", "0.8"), "1000000");
  PoolId tp = d.pool("usdt", pool_params(usdt, "0.75", "0.8"), "1000000");
  AccountId agent = d.user("farmer", {{usdc, "100"}});
};

// Geometric partial sums of the spiral with ratio c: deposits D_n and borrows B_n.
std::pair<cpp_rational, cpp_rational> geometric(const cpp_rational& c, int n) {
  cpp_rational d = 100, b = 0, last = 100;
  for (int i = 0; i < n; ++i) {
    last *= c;
    b += last;
    d += last;
  }
  return {d, b};
}

}  // namespace

TEST(BorrowSpiral, TwoIterations) {
  Spiral s;
  SpiralParams p;
  p.max_iterations = 2;
  SpiralReport r = run_borrow_spiral(s.d.w, s.agent, s.up, W("100"), p, 0);
  EXPECT_EQ(r.iterations, 2u);
  EXPECT_EQ(r.total_deposited, W("231.25"));
  EXPECT_EQ(r.total_borrowed, W("131.25"));
  auto [d, b] = geometric(cpp_rational(3, 4), 2);
  EXPECT_EQ(Q(r.total_deposited), d);
  EXPECT_EQ(Q(r.total_borrowed), b);
}

TEST(BorrowSpiral, PartialSumsFollowGeometry) {
  Spiral s;
  SpiralParams p;
  p.max_iterations = 12;
  p.buffer = W("0.15");
  SpiralReport r = run_borrow_spiral(s.d.w, s.agent, s.up, W("100"), p, 0);
  ASSERT_EQ(r.borrows.size(), 12u);
  for (int n = 1; n <= 12; ++n) {
    auto [d, b] = geometric(cpp_rational(6, 10), n);
    // Each borrow floors once, so errors stay within n raw units.
    ASSERT_LE(b - Q(r.borrows[n - 1]), cpp_rational(n, 1) * Q(Wad::from_raw(1)));
    ASSERT_GE(b, Q(r.borrows[n - 1]));
    ASSERT_LE(d - Q(r.deposits[n]), cpp_rational(n, 1) * Q(Wad::from_raw(1)));
  }
}

TEST(BorrowSpiral, ConvergesToLimit) {
  Spiral s;
  SpiralParams p;
  p.max_iterations = 500;
  p.min_action = Wad::from_raw(1000);
  SpiralReport r = run_borrow_spiral(s.d.w, s.agent, s.up, W("100"), p, 0);
  EXPECT_NEAR(r.total_deposited.to_double(), 400.0, 1e-6);
  EXPECT_NEAR(r.total_borrowed.to_double(), 300.0, 1e-6);
  EXPECT_FALSE(r.stopped_by.has_value());
}

TEST(BorrowSpiral, ZeroFactorIsSingleDeposit) {
  Spiral s;
  SpiralParams p;
  p.buffer = W("0.75");
  SpiralReport r = run_borrow_spiral(s.d.w, s.agent, s.up, W("100"), p, 0);
  EXPECT_EQ(r.iterations, 0u);
  EXPECT_EQ(r.total_deposited, W("100"));
  EXPECT_EQ(r.total_borrowed, Wad{});
}

TEST(LeverageSpiral, EquivalentUnderUnitPricesWithoutFee) {
  Spiral a, b;
  VenueId v = b.d.w.venues.add_quote_venue("par", b.usdt, {{b.usdc, QuoteSource{W("1"), Wad::one()}}}, 0);
  b.d.fund(b.d.w.venues.account(v), b.usdc, W("10000"));
  SpiralParams p;
  p.max_iterations = 10;
  SpiralReport spiral = run_borrow_spiral(a.d.w, a.agent, a.up, W("100"), p, 0);
  SpiralReport lever = run_leverage_spiral(b.d.w, b.agent, b.up, b.tp, v, W("100"), p, 0);
  EXPECT_EQ(lever.iterations, spiral.iterations);
  EXPECT_EQ(lever.total_deposited, spiral.total_deposited);
  EXPECT_EQ(lever.total_borrowed, spiral.total_borrowed);
}

TEST(LeverageSpiral, FeeLowersExposure) {
  Spiral a, b;
  auto venue = [](Spiral& s, std::uint32_t fee) {
    VenueId v = s.d.w.venues.add_quote_venue("par", s.usdt, {{s.usdc, QuoteSource{W("1"), Wad::one()}}}, fee);
    s.d.fund(s.d.w.venues.account(v), s.usdc, W("10000"));
    return v;
  };
  VenueId free = venue(a, 0), paid = venue(b, 30);
  SpiralParams p;
  p.max_iterations = 10;
  SpiralReport r0 = run_leverage_spiral(a.d.w, a.agent, a.up, a.tp, free, W("100"), p, 0);
  SpiralReport r1 = run_leverage_spiral(b.d.w, b.agent, b.up, b.tp, paid, W("100"), p, 0);
  EXPECT_LT(r1.total_deposited, r0.total_deposited);
  // With a 30 bps haircut on each swap the ratio is 0.75 * 0.997.
  cpp_rational ratio = cpp_rational(3, 4) * cpp_rational(997, 1000);
  auto [d, unused] = geometric(ratio, 10);
  EXPECT_NEAR(r1.total_deposited.to_double(), to_double(d), 1e-9);
}

TEST(Shuffle, IsPermutationAndSeedDependent) {
  std::set<std::vector<std::size_t>> seen;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto order = shuffled_order(6, step_seed(42, seed));
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < 6; ++i) ASSERT_EQ(sorted[i], i);
    seen.insert(order);
  }
  EXPECT_GT(seen.size(), 30u);
  EXPECT_EQ(shuffled_order(6, 99), shuffled_order(6, 99));
  EXPECT_NE(step_seed(1, 0), step_seed(2, 0));
}

TEST(Simulation, EmptyScenarioWritesOneRowPerStep) {
  Scenario s = parse_scenario(R"({
    "schema_version": 1, "horizon": 100, "seed": 1, "assets": ["USDC"],
    "feeds": {"USDC": {"kind": "replay", "points": [[0, "1"]]}},
    "pools": [{"id": "p", "asset": "USDC", "collateral_factor": "0.5", "liquidation_threshold": "0.6",
               "liquidation_bonus": "0.05",
               "rate_model": {"base_rate": "0", "slope1": "0.001", "slope2": "0.01", "kink": "0.8"}}]
  })");
  Simulation sim(s);
  sim.run();
  auto rows = lines_of(sim.pools_csv());
  ASSERT_EQ(rows.size(), 101u);
  EXPECT_EQ(rows[1].rfind("0,p,USDC,", 0), 0u);
  EXPECT_EQ(rows[100].rfind("99,p,USDC,", 0), 0u);
  EXPECT_TRUE(sim.events().empty());
  EXPECT_THROW(sim.step(), ProtocolError);
}

TEST(Simulation, SameSeedSameOutputs) {
  Scenario s = load_scenario(fixture("crash.json"));
  Simulation a(s), b(s);
  a.run();
  b.run();
  EXPECT_EQ(a.pools_csv(), b.pools_csv());
  EXPECT_EQ(a.events(), b.events());
  EXPECT_EQ(a.summary_json(), b.summary_json());
}

TEST(Simulation, SeedChangesAgentOrder) {
  Scenario s = load_scenario(fixture("crash.json"));
  Simulation a(s, RunOptions{1, std::nullopt}), b(s, RunOptions{2, std::nullopt});
  bool differs = false;
  while (!a.done()) {
    a.step();
    b.step();
    differs = differs || a.last_order() != b.last_order();
  }
  EXPECT_TRUE(differs);
  Simulation c(s, RunOptions{std::nullopt, 3});
  c.run();
  EXPECT_EQ(c.next_step(), 3u);
}

TEST(Simulation, CrashLiquidatesTheLeverager) {
  Simulation sim(load_scenario(fixture("crash.json")));
  sim.run();
  EXPECT_GE(sim.totals().liquidations, 1u);
  std::size_t exposures = 0, liquidations = 0;
  for (const auto& e : events_of(sim.events())) {
    const std::string kind = e["event"];
    if (kind == "exposure") ++exposures;
    bool liquidation = kind == "liquidation" || (kind == "flash_loan" && e["kind"] == "liquidation");
    if (!liquidation) continue;
    ++liquidations;
    // Nothing is liquidatable before the price drop.
    EXPECT_GE(e["step"].get<std::size_t>(), 10u);
  }
  EXPECT_GT(exposures, 0u);
  EXPECT_GE(liquidations, 1u);
  sim.world().ledger.audit();
  EXPECT_TRUE(sim.world().ledger.replay_matches());
}

TEST(Simulation, SecondLiquidatorActsOnStaleScan) {
  Simulation sim(load_scenario(fixture("crash.json")));
  while (sim.next_step() < 10) sim.step();
  // leverager, keeper-1 (flash), keeper-2 (direct): let the direct keeper go first.
  sim.force_order({0, 2, 1});
  sim.step();
  EXPECT_EQ(sim.last_order(), (std::vector<std::size_t>{0, 2, 1}));
  std::vector<nlohmann::json> step10;
  for (const auto& e : events_of(sim.events()))
    if (e["step"] == 10) step10.push_back(e);
  std::size_t first = 0, second = 0;
  for (std::size_t i = 0; i < step10.size(); ++i) {
    if (step10[i].value("liquidator", "") == "keeper-2") first = i + 1;
    if (step10[i].value("agent", "") == "keeper-1") second = i + 1;
  }
  ASSERT_GT(first, 0u);
  ASSERT_GT(second, first);
  const std::string late = step10[second - 1].dump();
  bool stale = late.find("NotLiquidatable") != std::string::npos ||
               late.find("ExceedsCloseFactor") != std::string::npos;
  EXPECT_TRUE(stale) << late;
  EXPECT_EQ(sim.totals().liquidations, 1u);
}

TEST(Simulation, RewardsConserveAcrossRun) {
  Scenario s = load_scenario(fixture("table1.json"));
  Simulation sim(s, RunOptions{std::nullopt, 60});
  sim.run();
  ASSERT_NE(sim.rewards(), nullptr);
  const RewardLedger& r = *sim.rewards();
  Wad emitted = Wad::from_raw(W("10").raw() * 60 * sim.world().lending.pool_count());
  EXPECT_EQ(r.total_distributed() + r.dust(), emitted);
  Wad sum{};
  for (const auto& [a, amount] : r.accounts()) sum += amount;
  EXPECT_EQ(sum, r.total_distributed());
}

TEST(Simulation, WritesOutputFiles) {
  Simulation sim(load_scenario(fixture("flash_arbitrage.json")));
  sim.run();
  auto dir = std::filesystem::temp_directory_path() / "lendsim_sim_test";
  std::filesystem::remove_all(dir);
  sim.write_outputs(dir);
  for (const char* f : {"pools.csv", "vaults.csv", "events.jsonl", "rewards.csv", "summary.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  std::ifstream in(dir / "summary.json");
  std::stringstream body;
  body << in.rdbuf();
  EXPECT_EQ(body.str(), sim.summary_json());
  EXPECT_EQ(sim.totals().flash_committed, 1u);
  std::filesystem::remove_all(dir);
}
