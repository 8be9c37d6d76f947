#include "lendsim/flashloan.hpp"

#include <algorithm>
#include <map>

#include "json.hpp"
#include "lendsim/errors.hpp"
#include "lendsim/liquidation.hpp"

namespace lendsim {

namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

/// Asset a venue pays for `asset`: the numeraire of a quote venue, the other side of an AMM.
std::optional<AssetId> counter_asset(const Venues& venues, VenueId id, AssetId asset) {
  return std::visit(overloaded{
                        [&](const QuoteVenue& q) -> std::optional<AssetId> {
                          if (q.quotes.contains(asset)) return q.numeraire;
                          return std::nullopt;
                        },
                        [&](const AmmVenue& a) -> std::optional<AssetId> {
                          if (a.asset0 == asset) return a.asset1;
                          if (a.asset1 == asset) return a.asset0;
                          return std::nullopt;
                        },
                    },
                    venues.venue(id));
}

class PlanRunner {
 public:
  PlanRunner(World& world, const FlashPlan& plan, std::size_t step, Wad owed)
      : world_(world), plan_(plan), step_(step), owed_(owed) {}

  void run() {
    holdings_[plan_.asset.index] = plan_.amount;
    for (const PlanStep& s : plan_.steps) std::visit([this](const auto& st) { apply(st); }, s);
  }

 private:
  Wad& held(AssetId asset) { return holdings_[asset.index]; }

  void apply(const plan::SellOn& s) {
    auto to = counter_asset(world_.venues, s.venue, s.asset);
    if (!to) throw ProtocolError(ErrorCode::unsupported_trade, "venue does not trade the sold asset");
    Wad amount = std::exchange(held(s.asset), Wad{});
    held(*to) += world_.venues.convert(plan_.borrower, s.venue, s.asset, *to, amount, step_);
  }

  void apply(const plan::BuyOn& s) {
    auto pay = counter_asset(world_.venues, s.venue, s.asset);
    if (!pay) throw ProtocolError(ErrorCode::unsupported_trade, "venue does not trade the bought asset");
    Wad target = s.asset == plan_.asset ? owed_ : Wad{};
    if (held(s.asset) >= target) return;
    Wad need = target - held(s.asset);
    Wad paid = world_.venues.acquire(plan_.borrower, s.venue, *pay, s.asset, need, step_);
    held(*pay) = sub_floor(held(*pay), paid);
    held(s.asset) += need;
  }

  void apply(const plan::AmmSwap& s) {
    auto to = counter_asset(world_.venues, s.venue, s.asset_in);
    if (!to || !world_.venues.is_amm(s.venue)) throw ProtocolError(ErrorCode::unsupported_trade, "not an AMM leg");
    Wad amount = std::exchange(held(s.asset_in), Wad{});
    held(*to) += world_.venues.amm_swap(plan_.borrower, s.venue, s.asset_in, amount);
  }

  void apply(const plan::Liquidate& s) {
    LendingMarket& market = world_.lending;
    LiquidationResult r =
        liquidate(market, plan_.borrower, s.target, s.repay_asset, s.seize_asset, held(s.repay_asset), step_);
    held(s.repay_asset) -= r.repaid;
    held(s.seize_asset) += market.redeem_raw(plan_.borrower, market.pool_for(s.seize_asset), r.seized_iou, step_);
  }

  void apply(const plan::LiquidateVault& s) {
    if (!world_.cdp) throw ProtocolError(ErrorCode::unknown_vault, "no cdp engine");
    VaultEngine& cdp = *world_.cdp;
    AssetId stable = cdp.stablecoin();
    VaultLiquidation r = cdp.liquidate(plan_.borrower, s.vault, held(stable), s.seize_asset, step_);
    held(stable) -= r.repaid;
    held(s.seize_asset) += r.seized;
  }

  World& world_;
  const FlashPlan& plan_;
  std::size_t step_;
  Wad owed_;
  std::map<std::uint32_t, Wad> holdings_;
};

void charge_gas(World& world, AccountId borrower, FlashOutcome& outcome) {
  if (world.gas_fee.is_zero()) return;
  world.ledger.transfer(borrower, world.fee_sink, world.gas_asset, world.gas_fee, JournalTag::gas_fee);
  outcome.gas_charged = world.gas_fee;
}

}  // namespace

Wad flash_repayment(const World& world, AssetId asset, Wad amount) {
  const auto& pool = world.lending.pool(world.lending.pool_for(asset));
  return amount + mul(amount, pool.params.flash_fee, Rounding::up);
}

FlashOutcome execute(World& world, const FlashPlan& fp, std::size_t step) {
  PoolId pool_id = world.lending.pool_for(fp.asset);
  const auto& pool = world.lending.pool(pool_id);
  if (world.lending.cash(pool_id) < fp.amount)
    throw ProtocolError(ErrorCode::insufficient_pool_liquidity,
                        "pool " + pool.id + " cash " + world.lending.cash(pool_id).to_string());
  if (world.ledger.balance(fp.borrower, world.gas_asset) < world.gas_fee)
    throw ProtocolError(ErrorCode::insufficient_balance, world.ledger.name(fp.borrower) + " cannot pay gas");

  AssetId profit_asset = fp.profit_asset.value_or(fp.asset);
  Wad before = world.ledger.balance(fp.borrower, profit_asset);
  Wad owed = flash_repayment(world, fp.asset, fp.amount);
  FlashOutcome outcome;
  // Gas is owed whatever happens, and the plan may spend the wallet, so it
  // is taken before the loan is opened.
  charge_gas(world, fp.borrower, outcome);

  WorldCheckpoint cp = world.checkpoint();
  try {
    world.ledger.transfer(pool.account, fp.borrower, fp.asset, fp.amount, JournalTag::flash_borrow);
    PlanRunner(world, fp, step, owed).run();
    world.ledger.transfer(fp.borrower, pool.account, fp.asset, owed, JournalTag::flash_repay);
  } catch (const ProtocolError& e) {
    world.rollback(cp);
    outcome.status = FlashOutcome::Status::reverted;
    outcome.reason = e.code();
    outcome.detail = e.what();
    outcome.profit = SignedWad::difference(world.ledger.balance(fp.borrower, profit_asset), before);
    return outcome;
  }
  world.commit(cp);
  outcome.status = FlashOutcome::Status::committed;
  outcome.repaid = owed;
  outcome.profit = SignedWad::difference(world.ledger.balance(fp.borrower, profit_asset), before);
  return outcome;
}

std::string_view to_string(Opportunity::Kind kind) noexcept {
  return kind == Opportunity::Kind::arbitrage ? "arbitrage" : "liquidation";
}

std::string opportunity_json(const World& world, const Opportunity& o) {
  nlohmann::ordered_json j;
  j["step"] = o.computed_at_step;
  j["kind"] = to_string(o.kind);
  j["asset"] = world.ledger.symbol(o.plan.asset);
  j["size"] = o.plan.amount.to_string();
  j["expected_profit"] = o.expected_profit.to_string();
  j["venue_or_target"] = o.venue_or_target;
  return j.dump();
}

std::optional<SignedWad> arbitrage_profit(const World& world, AssetId asset, AssetId numeraire, VenueId sell_venue,
                                          VenueId buy_venue, Wad size, std::size_t step) {
  const Venues& venues = world.venues;
  try {
    Wad proceeds = venues.convert_out(sell_venue, asset, numeraire, size, step);
    if (!venues.is_amm(sell_venue) &&
        world.ledger.balance(venues.account(sell_venue), numeraire) < proceeds)
      return std::nullopt;
    Wad owed = flash_repayment(world, asset, size);
    if (!venues.is_amm(buy_venue) && world.ledger.balance(venues.account(buy_venue), asset) < owed)
      return std::nullopt;
    Wad cost = venues.cost_of(buy_venue, numeraire, asset, owed, step);
    return SignedWad::difference(proceeds, cost);
  } catch (const ProtocolError&) {
    return std::nullopt;
  }
}

namespace {

std::optional<FlashOutcome> scratch_execute(World& world, const FlashPlan& fp, std::size_t step) {
  WorldCheckpoint cp = world.checkpoint();
  std::optional<FlashOutcome> outcome;
  try {
    outcome = execute(world, fp, step);
  } catch (const ProtocolError&) {
    outcome.reset();
  }
  world.rollback(cp);
  return outcome;
}

/// Largest size in [0, hi] for which the arbitrage is feasible (monotone).
Wad feasible_limit(const World& world, AssetId asset, AssetId numeraire, VenueId a, VenueId b, Wad hi,
                   std::size_t step) {
  if (arbitrage_profit(world, asset, numeraire, a, b, hi, step)) return hi;
  u128 lo = 0;
  u128 high = hi.raw();
  while (high - lo > 1) {
    u128 mid = lo + (high - lo) / 2;
    if (arbitrage_profit(world, asset, numeraire, a, b, Wad::from_raw(mid), step))
      lo = mid;
    else
      high = mid;
  }
  return Wad::from_raw(lo);
}

i128 profit_or_min(const World& world, AssetId asset, AssetId numeraire, VenueId a, VenueId b, u128 size,
                   std::size_t step) {
  auto p = arbitrage_profit(world, asset, numeraire, a, b, Wad::from_raw(size), step);
  return p ? p->raw() : std::numeric_limits<i128>::min();
}

/// Ternary search for the maximum of a unimodal profit curve on [0, hi].
Wad best_size(const World& world, AssetId asset, AssetId numeraire, VenueId a, VenueId b, Wad hi,
              std::size_t step) {
  u128 lo = 0;
  u128 high = hi.raw();
  while (high - lo > 2) {
    u128 third = (high - lo) / 3;
    u128 m1 = lo + third;
    u128 m2 = high - third;
    if (profit_or_min(world, asset, numeraire, a, b, m1, step) < profit_or_min(world, asset, numeraire, a, b, m2, step))
      lo = m1 + 1;
    else
      high = m2;
  }
  u128 best = lo;
  for (u128 s = lo + 1; s <= high; ++s)
    if (profit_or_min(world, asset, numeraire, a, b, s, step) > profit_or_min(world, asset, numeraire, a, b, best, step))
      best = s;
  return Wad::from_raw(best);
}

void sort_by_profit(std::vector<Opportunity>& out) {
  std::stable_sort(out.begin(), out.end(),
                   [](const Opportunity& x, const Opportunity& y) { return x.expected_profit > y.expected_profit; });
}

}  // namespace

std::vector<Opportunity> scan_arbitrage(World& world, std::size_t step, AccountId borrower) {
  std::vector<Opportunity> out;
  const Venues& venues = world.venues;
  const std::size_t n = venues.count();
  for (std::size_t p = 0; p < world.lending.pool_count(); ++p) {
    PoolId pool_id{static_cast<std::uint32_t>(p)};
    const auto& pool = world.lending.pool(pool_id);
    AssetId asset = pool.params.asset;
    Wad one_plus_fee = Wad::one() + pool.params.flash_fee;
    for (std::size_t i = 0; i < n; ++i) {
      VenueId sell{static_cast<std::uint32_t>(i)};
      auto numeraire = counter_asset(venues, sell, asset);
      if (!numeraire) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i) continue;
        VenueId buy{static_cast<std::uint32_t>(k)};
        if (counter_asset(venues, buy, asset) != numeraire) continue;
        Wad sell_mid, buy_mid;
        try {
          sell_mid = venues.mid_price(sell, asset, *numeraire, step);
          buy_mid = venues.mid_price(buy, asset, *numeraire, step);
        } catch (const ProtocolError&) {
          continue;
        }
        // P_sell (1 - fee_sell) > P_buy / (1 - fee_buy) * (1 + flash fee)
        Wad bid = mul(sell_mid, Wad::one() - from_bps(venues.fee_bps(sell)));
        Wad ask = mul(div(buy_mid, Wad::one() - from_bps(venues.fee_bps(buy)), Rounding::up), one_plus_fee,
                      Rounding::up);
        if (bid <= ask) continue;

        Wad limit = feasible_limit(world, asset, *numeraire, sell, buy, world.lending.cash(pool_id), step);
        if (limit.is_zero()) continue;
        bool linear = !venues.is_amm(sell) && !venues.is_amm(buy);
        Wad size = linear ? limit : best_size(world, asset, *numeraire, sell, buy, limit, step);
        if (size.is_zero()) continue;

        FlashPlan fp{borrower, asset, size, {plan::SellOn{sell, asset}, plan::BuyOn{buy, asset}}, *numeraire};
        auto outcome = scratch_execute(world, fp, step);
        if (!outcome || !outcome->committed() || outcome->profit <= SignedWad{}) continue;
        out.push_back(Opportunity{Opportunity::Kind::arbitrage, std::move(fp), outcome->profit, step,
                                  venues.name(sell) + "->" + venues.name(buy)});
      }
    }
  }
  sort_by_profit(out);
  return out;
}

namespace {

/// Venue turning `from` into the most `to` for `amount`, with the step that does it.
std::optional<PlanStep> best_exit(const World& world, AssetId from, AssetId to, Wad amount, std::size_t step) {
  std::optional<PlanStep> best;
  Wad best_out;
  const Venues& venues = world.venues;
  for (std::size_t i = 0; i < venues.count(); ++i) {
    VenueId v{static_cast<std::uint32_t>(i)};
    if (!venues.converts(v, from, to)) continue;
    Wad out;
    try {
      out = venues.convert_out(v, from, to, amount, step);
    } catch (const ProtocolError&) {
      continue;
    }
    if (best && out <= best_out) continue;
    best_out = out;
    if (venues.is_amm(v))
      best = plan::AmmSwap{v, from};
    else if (counter_asset(venues, v, from) == to)
      best = plan::SellOn{v, from};
    else
      best = plan::BuyOn{v, to};
  }
  return best;
}

}  // namespace

std::vector<Opportunity> scan_liquidations(World& world, std::size_t step, AccountId borrower) {
  std::vector<Opportunity> out;
  LendingMarket& market = world.lending;
  const Ledger& ledger = world.ledger;

  for (AccountId target : market.borrowers()) {
    if (target == borrower) continue;
    if (!health(market, target, step).liquidatable()) continue;
    std::optional<PoolId> repay_pool, seize_pool;
    Wad best_debt, best_coll;
    for (std::size_t p = 0; p < market.pool_count(); ++p) {
      PoolId id{static_cast<std::uint32_t>(p)};
      AssetId asset = market.pool(id).params.asset;
      Wad debt = world.oracle.value_usd(market.debt_of(target, id), asset, step);
      if (!debt.is_zero() && debt > best_debt) {
        best_debt = debt;
        repay_pool = id;
      }
      if (!market.collateral_enabled(target, id)) continue;
      Wad coll = world.oracle.value_usd(market.underlying_balance(target, id), asset, step);
      if (!coll.is_zero() && coll > best_coll) {
        best_coll = coll;
        seize_pool = id;
      }
    }
    if (!repay_pool || !seize_pool) continue;
    AssetId repay_asset = market.pool(*repay_pool).params.asset;
    AssetId seize_asset = market.pool(*seize_pool).params.asset;
    Wad repay = std::min(max_liquidation_repay(market, target, repay_asset), market.cash(*repay_pool));
    if (repay.is_zero()) continue;

    FlashPlan fp{borrower, repay_asset, repay, {plan::Liquidate{target, repay_asset, seize_asset}}, repay_asset};
    if (seize_asset != repay_asset) {
      Wad bonus = Wad::one() + market.pool(*repay_pool).params.liquidation_bonus;
      Wad est = Wad::from_raw(mul_mul_div(repay.raw(), world.oracle.price_at(repay_asset, step).raw(), bonus.raw(),
                                          world.oracle.price_at(seize_asset, step).raw(), Wad::kScale,
                                          Rounding::down));
      auto exit = best_exit(world, seize_asset, repay_asset, est, step);
      if (!exit) continue;
      fp.steps.push_back(*exit);
    }
    auto outcome = scratch_execute(world, fp, step);
    if (!outcome || !outcome->committed() || outcome->profit <= SignedWad{}) continue;
    out.push_back(Opportunity{Opportunity::Kind::liquidation, std::move(fp), outcome->profit, step,
                              ledger.name(target)});
  }

  if (world.cdp) {
    VaultEngine& cdp = *world.cdp;
    AssetId stable = cdp.stablecoin();
    if (auto stable_pool = market.find_pool(stable)) {
      for (VaultId vault : cdp.unsafe_vaults(step)) {
        const Vault& v = cdp.vault(vault);
        if (v.owner == borrower) continue;
        std::optional<AssetId> seize_asset;
        Wad best;
        for (const auto& [asset, amount] : v.collateral) {
          Wad value = world.oracle.value_usd(amount, asset, step);
          if (value > best) {
            best = value;
            seize_asset = asset;
          }
        }
        if (!seize_asset) continue;
        Wad repay = std::min(cdp.debt(vault), market.cash(*stable_pool));
        if (repay.is_zero()) continue;
        FlashPlan fp{borrower, stable, repay, {plan::LiquidateVault{vault, *seize_asset}}, stable};
        if (*seize_asset != stable) {
          Wad factor = Wad::one() + cdp.params().liquidation_penalty;
          Wad est = std::min(v.collateral.at(*seize_asset),
                             Wad::from_raw(mul_mul_div(repay.raw(), factor.raw(), Wad::kScale,
                                                       world.oracle.price_at(*seize_asset, step).raw(), Wad::kScale,
                                                       Rounding::down)));
          auto exit = best_exit(world, *seize_asset, stable, est, step);
          if (!exit) continue;
          fp.steps.push_back(*exit);
        }
        auto outcome = scratch_execute(world, fp, step);
        if (!outcome || !outcome->committed() || outcome->profit <= SignedWad{}) continue;
        out.push_back(Opportunity{Opportunity::Kind::liquidation, std::move(fp), outcome->profit, step,
                                  "vault#" + std::to_string(vault.index)});
      }
    }
  }
  sort_by_profit(out);
  return out;
}

}  // namespace lendsim
