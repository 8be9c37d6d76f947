#include "agents.hpp"

#include <algorithm>

#include "lendsim/errors.hpp"
#include "lendsim/liquidation.hpp"

namespace lendsim {

using nlohmann::ordered_json;

namespace {

/// (c - buffer) of `deposit`'s value, expressed in the borrow asset and
/// capped by what the pool and the account can actually support.
Wad spiral_borrow(World& world, AccountId agent, PoolId collateral_pool, PoolId borrow_pool, Wad deposit,
                  const SpiralParams& params, std::size_t step) {
  const LendingMarket& m = world.lending;
  Wad factor = sub_floor(m.pool(collateral_pool).params.collateral_factor, params.buffer);
  AssetId ca = m.pool(collateral_pool).params.asset;
  AssetId ba = m.pool(borrow_pool).params.asset;
  Wad want = Wad::from_raw(mul_mul_div(deposit.raw(), world.oracle.price_at(ca, step).raw(), factor.raw(),
                                       world.oracle.price_at(ba, step).raw(), Wad::kScale, Rounding::down));
  return std::min(want, m.max_borrow(agent, borrow_pool, step));
}

}  // namespace

SpiralReport run_borrow_spiral(World& world, AccountId agent, PoolId pool, Wad initial_deposit,
                               const SpiralParams& params, std::size_t step) {
  SpiralReport report;
  LendingMarket& m = world.lending;
  try {
    Wad latest = initial_deposit;
    m.deposit(agent, pool, latest);
    report.total_deposited += latest;
    report.deposits.push_back(report.total_deposited);
    while (report.iterations < params.max_iterations) {
      Wad amount = spiral_borrow(world, agent, pool, pool, latest, params, step);
      if (amount < params.min_action) break;
      m.borrow(agent, pool, amount, params.rate_mode, step);
      report.total_borrowed += amount;
      report.borrows.push_back(report.total_borrowed);
      ++report.iterations;
      m.deposit(agent, pool, amount);
      report.total_deposited += amount;
      report.deposits.push_back(report.total_deposited);
      latest = amount;
    }
  } catch (const ProtocolError& e) {
    report.stopped_by = e.code();
  }
  return report;
}

SpiralReport run_leverage_spiral(World& world, AccountId agent, PoolId collateral_pool, PoolId borrow_pool,
                                 VenueId venue, Wad initial_deposit, const SpiralParams& params, std::size_t step) {
  SpiralReport report;
  LendingMarket& m = world.lending;
  AssetId ca = m.pool(collateral_pool).params.asset;
  AssetId ba = m.pool(borrow_pool).params.asset;
  try {
    Wad latest = initial_deposit;
    m.deposit(agent, collateral_pool, latest);
    report.total_deposited += latest;
    report.deposits.push_back(report.total_deposited);
    while (report.iterations < params.max_iterations) {
      Wad amount = spiral_borrow(world, agent, collateral_pool, borrow_pool, latest, params, step);
      if (amount < params.min_action) break;
      m.borrow(agent, borrow_pool, amount, params.rate_mode, step);
      report.total_borrowed += amount;
      report.borrows.push_back(report.total_borrowed);
      ++report.iterations;
      Wad bought = world.venues.convert(agent, venue, ba, ca, amount, step);
      if (bought.is_zero()) break;
      m.deposit(agent, collateral_pool, bought);
      report.total_deposited += bought;
      report.deposits.push_back(report.total_deposited);
      latest = bought;
    }
  } catch (const ProtocolError& e) {
    report.stopped_by = e.code();
  }
  return report;
}

void StepContext::emit(ordered_json event) {
  sim_.events_ += event.dump();
  sim_.events_ += '\n';
}

void StepContext::error(const std::string& agent, std::string_view action, const ProtocolError& e) {
  ++sim_.totals_.agent_errors;
  ordered_json j;
  j["step"] = step_;
  j["event"] = "error";
  j["agent"] = agent;
  j["action"] = action;
  j["code"] = to_string(e.code());
  j["detail"] = e.what();
  emit(std::move(j));
}

const std::vector<Opportunity>& StepContext::liquidations(AccountId asker) {
  if (!liquidations_) liquidations_ = scan_liquidations(world(), step_, asker);
  return *liquidations_;
}

const std::vector<Opportunity>& StepContext::arbitrages(AccountId asker) {
  if (!arbitrages_) arbitrages_ = scan_arbitrage(world(), step_, asker);
  return *arbitrages_;
}

namespace {

ordered_json spiral_event(std::size_t step, const std::string& agent, std::string_view kind, const SpiralReport& r) {
  ordered_json j;
  j["step"] = step;
  j["event"] = kind;
  j["agent"] = agent;
  j["iterations"] = r.iterations;
  j["deposited"] = r.total_deposited.to_string();
  j["borrowed"] = r.total_borrowed.to_string();
  if (r.stopped_by) j["stopped_by"] = to_string(*r.stopped_by);
  return j;
}

class Depositor final : public Agent {
 public:
  Depositor(AgentSpec spec, AccountId account, std::uint64_t seed, PoolId pool)
      : Agent(std::move(spec), account, seed), pool_(pool) {}

  void act(StepContext& ctx) override {
    LendingMarket& m = ctx.world().lending;
    AssetId asset = m.pool(pool_).params.asset;
    Wad wallet = m.ledger().balance(account_, asset);
    if (!entered_) {
      entered_ = true;
      supply(ctx, spec_.amount ? std::min(*spec_.amount, wallet) : wallet);
      return;
    }
    if (spec_.churn <= 0 || uniform() >= spec_.churn) return;
    // Half the time top up from the wallet, otherwise withdraw part of the position.
    Wad fraction = Wad::from_raw(static_cast<u128>(uniform() * 0.5 * 1e18));
    if (uniform() < 0.5) {
      supply(ctx, mul(wallet, fraction));
    } else {
      Wad iou = mul(m.iou_balance(account_, pool_), fraction);
      if (iou < spec_.min_action) return;
      try {
        Wad paid = m.redeem_raw(account_, pool_, iou, ctx.step());
        log(ctx, "redeem", paid);
      } catch (const ProtocolError& e) {
        ctx.error(spec_.name, "redeem", e);
      }
    }
  }

 private:
  void supply(StepContext& ctx, Wad amount) {
    if (amount < spec_.min_action) return;
    try {
      ctx.world().lending.deposit(account_, pool_, amount);
      log(ctx, "deposit", amount);
    } catch (const ProtocolError& e) {
      ctx.error(spec_.name, "deposit", e);
    }
  }

  void log(StepContext& ctx, std::string_view what, Wad amount) {
    ordered_json j;
    j["step"] = ctx.step();
    j["event"] = what;
    j["agent"] = spec_.name;
    j["pool"] = ctx.world().lending.pool(pool_).id;
    j["amount"] = amount.to_string();
    ctx.emit(std::move(j));
  }

  PoolId pool_;
  bool entered_{false};
};

SpiralParams spiral_params(const AgentSpec& spec) {
  SpiralParams p;
  p.buffer = spec.buffer;
  p.max_iterations = spec.max_iterations;
  p.min_action = spec.min_action;
  return p;
}

class BorrowSpiral final : public Agent {
 public:
  BorrowSpiral(AgentSpec spec, AccountId account, std::uint64_t seed, PoolId pool)
      : Agent(std::move(spec), account, seed), pool_(pool) {}

  void act(StepContext& ctx) override {
    if (done_) return;
    done_ = true;
    World& w = ctx.world();
    Wad start = w.ledger.balance(account_, w.lending.pool(pool_).params.asset);
    if (spec_.amount) start = std::min(start, *spec_.amount);
    SpiralReport r = run_borrow_spiral(w, account_, pool_, start, spiral_params(spec_), ctx.step());
    ctx.emit(spiral_event(ctx.step(), spec_.name, "borrow_spiral", r));
  }

 private:
  PoolId pool_;
  bool done_{false};
};

class LeverageSpiral final : public Agent {
 public:
  LeverageSpiral(AgentSpec spec, AccountId account, std::uint64_t seed, PoolId collateral, PoolId debt, VenueId venue)
      : Agent(std::move(spec), account, seed), collateral_(collateral), debt_(debt), venue_(venue) {}

  void act(StepContext& ctx) override {
    World& w = ctx.world();
    if (!done_) {
      done_ = true;
      Wad start = w.ledger.balance(account_, w.lending.pool(collateral_).params.asset);
      if (spec_.amount) start = std::min(start, *spec_.amount);
      SpiralReport r =
          run_leverage_spiral(w, account_, collateral_, debt_, venue_, start, spiral_params(spec_), ctx.step());
      ctx.emit(spiral_event(ctx.step(), spec_.name, "leverage_spiral", r));
    }
    // Long exposure, reported only when it moves.
    Wad exposure = w.lending.underlying_balance(account_, collateral_);
    Wad debt = w.lending.debt_of(account_, debt_);
    if (exposure == last_exposure_ && debt == last_debt_) return;
    last_exposure_ = exposure;
    last_debt_ = debt;
    HealthReport h = health(w.lending, account_, ctx.step());
    ordered_json j;
    j["step"] = ctx.step();
    j["event"] = "exposure";
    j["agent"] = spec_.name;
    j["collateral"] = exposure.to_string();
    j["debt"] = debt.to_string();
    j["health_factor"] = h.has_debt() ? h.health_factor().to_string() : "inf";
    ctx.emit(std::move(j));
  }

 private:
  PoolId collateral_, debt_;
  VenueId venue_;
  bool done_{false};
  Wad last_exposure_{Wad::max()}, last_debt_{};
};

ordered_json flash_event(StepContext& ctx, const std::string& agent, const Opportunity& o, const FlashOutcome& out) {
  const World& w = ctx.world();
  ordered_json j;
  j["step"] = ctx.step();
  j["event"] = "flash_loan";
  j["agent"] = agent;
  j["kind"] = to_string(o.kind);
  j["asset"] = w.ledger.symbol(o.plan.asset);
  j["amount"] = o.plan.amount.to_string();
  j["venue_or_target"] = o.venue_or_target;
  j["status"] = out.committed() ? "committed" : "reverted";
  j["profit"] = out.profit.to_string();
  j["gas"] = out.gas_charged.to_string();
  if (out.reason) j["reason"] = to_string(*out.reason);
  return j;
}

/// Executes an opportunity found by the shared scan on the agent's own
/// account and books the result.
void run_flash(StepContext& ctx, const AgentSpec& spec, AccountId account, Opportunity o) {
  o.plan.borrower = account;
  World& w = ctx.world();
  try {
    FlashOutcome out = execute(w, o.plan, ctx.step());
    RunTotals& t = ctx.totals();
    if (out.committed()) {
      ++t.flash_committed;
      if (o.kind == Opportunity::Kind::liquidation) ++t.liquidations;
      AssetId profit_asset = o.plan.profit_asset.value_or(o.plan.asset);
      Wad price = w.oracle.price_at(profit_asset, ctx.step());
      i128 raw = out.profit.raw();
      u128 mag = raw < 0 ? u128(-raw) : u128(raw);
      i128 usd = static_cast<i128>(mul_div(mag, price.raw(), Wad::kScale));
      t.flash_profit_usd += SignedWad::from_raw(raw < 0 ? -usd : usd);
    } else {
      ++t.flash_reverted;
    }
    ctx.emit(flash_event(ctx, spec.name, o, out));
  } catch (const ProtocolError& e) {
    ctx.error(spec.name, "flash_loan", e);
  }
}

class Liquidator final : public Agent {
 public:
  using Agent::Agent;

  void act(StepContext& ctx) override {
    const auto& found = ctx.liquidations(account_);
    if (found.empty()) return;
    if (spec_.use_flash)
      run_flash(ctx, spec_, account_, found.front());
    else
      direct(ctx, found.front());
  }

 private:
  /// Same target and assets as the flash plan, paid from the agent's wallet;
  /// the seized collateral is kept rather than sold.
  void direct(StepContext& ctx, const Opportunity& o) {
    World& w = ctx.world();
    Wad funds = std::min(o.plan.amount, w.ledger.balance(account_, o.plan.asset));
    const PlanStep& first = o.plan.steps.front();
    try {
      if (funds.is_zero()) throw ProtocolError(ErrorCode::insufficient_balance, "no funds to repay");
      if (const auto* l = std::get_if<plan::Liquidate>(&first)) {
        LiquidationResult r = liquidate(w.lending, account_, l->target, l->repay_asset, l->seize_asset, funds, ctx.step());
        w.lending.redeem_raw(account_, w.lending.pool_for(l->seize_asset), r.seized_iou, ctx.step());
        ctx.emit(ordered_json::parse(liquidation_event_json(w.ledger, ctx.step(), account_, l->target, l->repay_asset,
                                                            l->seize_asset, r)));
      } else if (const auto* v = std::get_if<plan::LiquidateVault>(&first)) {
        VaultLiquidation r = w.cdp->liquidate(account_, v->vault, funds, v->seize_asset, ctx.step());
        ordered_json j;
        j["step"] = ctx.step();
        j["event"] = "vault_liquidation";
        j["liquidator"] = spec_.name;
        j["vault"] = v->vault.index;
        j["repaid"] = r.repaid.to_string();
        j["seized_asset"] = w.ledger.symbol(v->seize_asset);
        j["seized"] = r.seized.to_string();
        ctx.emit(std::move(j));
      }
      ++ctx.totals().liquidations;
    } catch (const ProtocolError& e) {
      ctx.error(spec_.name, "liquidate", e);
    }
  }
};

class Arbitrageur final : public Agent {
 public:
  using Agent::Agent;

  void act(StepContext& ctx) override {
    const auto& found = ctx.arbitrages(account_);
    if (!found.empty()) run_flash(ctx, spec_, account_, found.front());
  }
};

}  // namespace

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, AccountId account, std::uint64_t seed, const World& world) {
  auto pool = [&](const std::string& id) {
    auto p = world.lending.find_pool(std::string_view(id));
    if (!p) throw ProtocolError(ErrorCode::unknown_pool, id);
    return *p;
  };
  switch (spec.kind) {
    case AgentKind::depositor: return std::make_unique<Depositor>(spec, account, seed, pool(spec.pool));
    case AgentKind::borrow_spiral: return std::make_unique<BorrowSpiral>(spec, account, seed, pool(spec.pool));
    case AgentKind::leverage_spiral: {
      auto venue = world.venues.find(spec.venue);
      if (!venue) throw ProtocolError(ErrorCode::unknown_venue, spec.venue);
      return std::make_unique<LeverageSpiral>(spec, account, seed, pool(spec.pool), pool(spec.borrow_pool), *venue);
    }
    case AgentKind::liquidator: return std::make_unique<Liquidator>(spec, account, seed);
    case AgentKind::arbitrageur: return std::make_unique<Arbitrageur>(spec, account, seed);
  }
  throw ProtocolError(ErrorCode::invalid_argument, "unknown agent kind");
}

}  // namespace lendsim
