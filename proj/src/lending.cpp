#include "lendsim/lending.hpp"

#include "lendsim/errors.hpp"

namespace lendsim {

std::string_view to_string(IouMode mode) noexcept {
  return mode == IouMode::exchange_rate ? "exchange-rate" : "rebasing";
}

std::string_view to_string(RateMode mode) noexcept { return mode == RateMode::variable ? "variable" : "stable"; }

Wad utilization(Wad cash, Wad borrows) {
  Wad total = cash + borrows;
  if (total.is_zero()) return {};
  return div(borrows, total);
}

Wad borrow_rate(const RateModelParams& m, Wad u) {
  if (u <= m.kink) return m.base_rate + mul_div(m.slope1, u, m.kink);
  Wad excess = u - m.kink;
  return m.base_rate + m.slope1 + mul_div(m.slope2, excess, Wad::one() - m.kink);
}

Wad supply_rate(const RateModelParams& m, Wad u) {
  return mul(mul(borrow_rate(m, u), u), Wad::one() - m.reserve_factor);
}

std::vector<std::string> validate(const PoolParams& p, std::vector<std::string>* warnings) {
  std::vector<std::string> errors;
  const Wad one = Wad::one();
  if (p.collateral_factor >= one) errors.push_back("collateral_factor must be < 1");
  if (p.liquidation_threshold <= p.collateral_factor)
    errors.push_back("collateral_factor < liquidation_threshold violated (c=" + p.collateral_factor.to_string() +
                     ", l=" + p.liquidation_threshold.to_string() + ")");
  if (p.liquidation_threshold > one) errors.push_back("liquidation_threshold must be <= 1");
  if (p.close_factor.is_zero() || p.close_factor > one) errors.push_back("close_factor must be in (0, 1]");
  const auto& m = p.rate_model;
  if (m.kink.is_zero() || m.kink >= one) errors.push_back("kink must be in (0, 1)");
  if (m.reserve_factor >= one) errors.push_back("reserve_factor must be < 1");
  if (warnings && p.liquidation_threshold <= one &&
      mul(p.liquidation_threshold, one + p.liquidation_bonus) >= one)
    warnings->push_back("liquidation_threshold * (1 + liquidation_bonus) >= 1: liquidation may not improve health");
  return errors;
}

PoolId LendingMarket::add_pool(std::string id, const PoolParams& params) {
  if (auto errors = validate(params); !errors.empty()) throw ProtocolError(ErrorCode::validation_error, errors.front());
  if (find_pool(params.asset)) throw ProtocolError(ErrorCode::invalid_argument, "asset already has a pool");
  if (find_pool(id)) throw ProtocolError(ErrorCode::invalid_argument, "duplicate pool id " + id);
  const std::string& symbol = ledger_.symbol(params.asset);
  std::string prefix = params.iou_mode == IouMode::exchange_rate ? "c" : "a";
  AccountId account = ledger_.add_account("pool:" + id, AccountKind::pool);
  AssetId iou = ledger_.add_asset(prefix + symbol, {Authority::lending_pool});
  pools_.push_back(Pool{std::move(id), params, account, iou, PoolState{}});
  return PoolId{static_cast<std::uint32_t>(pools_.size() - 1)};
}

const LendingMarket::Pool& LendingMarket::pool(PoolId id) const {
  if (id.index >= pools_.size()) throw ProtocolError(ErrorCode::unknown_pool, "pool #" + std::to_string(id.index));
  return pools_[id.index];
}

LendingMarket::Pool& LendingMarket::pool_mut(PoolId id) {
  if (id.index >= pools_.size()) throw ProtocolError(ErrorCode::unknown_pool, "pool #" + std::to_string(id.index));
  return pools_[id.index];
}

std::optional<PoolId> LendingMarket::find_pool(AssetId asset) const {
  for (std::size_t i = 0; i < pools_.size(); ++i)
    if (pools_[i].params.asset == asset) return PoolId{static_cast<std::uint32_t>(i)};
  return std::nullopt;
}

std::optional<PoolId> LendingMarket::find_pool(std::string_view id) const {
  for (std::size_t i = 0; i < pools_.size(); ++i)
    if (pools_[i].id == id) return PoolId{static_cast<std::uint32_t>(i)};
  return std::nullopt;
}

PoolId LendingMarket::pool_for(AssetId asset) const {
  if (auto id = find_pool(asset)) return *id;
  throw ProtocolError(ErrorCode::unknown_pool, "no pool for " + ledger_.symbol(asset));
}

Wad LendingMarket::cash(PoolId id) const {
  const Pool& p = pool(id);
  return ledger_.balance(p.account, p.params.asset);
}

Wad LendingMarket::total_borrows(PoolId id) const {
  const Pool& p = pool(id);
  return mul(p.state.total_scaled_borrows, p.state.borrow_index, Rounding::up) + p.state.total_stable_debt;
}

Wad LendingMarket::backing(PoolId id) const {
  Wad gross = cash(id) + total_borrows(id);
  Wad res = pool(id).state.reserves;
  if (res > gross) throw ProtocolError(ErrorCode::invariant_violation, "reserves exceed pool assets");
  return gross - res;
}

Wad LendingMarket::iou_supply(PoolId id) const { return ledger_.supply(pool(id).iou); }

Wad LendingMarket::utilization(PoolId id) const { return lendsim::utilization(cash(id), total_borrows(id)); }

Wad LendingMarket::current_borrow_rate(PoolId id) const {
  return lendsim::borrow_rate(pool(id).params.rate_model, utilization(id));
}

Wad LendingMarket::current_supply_rate(PoolId id) const {
  return lendsim::supply_rate(pool(id).params.rate_model, utilization(id));
}

Wad LendingMarket::exchange_rate(PoolId id) const {
  const Pool& p = pool(id);
  if (p.params.iou_mode == IouMode::rebasing) return p.state.liquidity_index;
  Wad supply = iou_supply(id);
  if (supply.is_zero()) return Wad::one();
  return div(backing(id), supply);
}

Wad LendingMarket::underlying_for_iou(PoolId id, Wad raw_iou, Rounding rounding) const {
  const Pool& p = pool(id);
  if (p.params.iou_mode == IouMode::rebasing) return mul(raw_iou, p.state.liquidity_index, rounding);
  Wad supply = iou_supply(id);
  if (supply.is_zero()) return raw_iou;
  return mul_div(raw_iou, backing(id), supply, rounding);
}

Wad LendingMarket::iou_for_underlying(PoolId id, Wad underlying, Rounding rounding) const {
  const Pool& p = pool(id);
  if (p.params.iou_mode == IouMode::rebasing) return div(underlying, p.state.liquidity_index, rounding);
  Wad supply = iou_supply(id);
  if (supply.is_zero()) return underlying;
  Wad back = backing(id);
  if (back.is_zero()) throw ProtocolError(ErrorCode::invariant_violation, "outstanding IOUs with zero backing");
  return mul_div(underlying, supply, back, rounding);
}

Wad LendingMarket::deposit(AccountId account, PoolId id, Wad amount) {
  const Pool& p = pool(id);
  if (p.state.paused) throw ProtocolError(ErrorCode::pool_paused, p.id);
  Wad minted = iou_for_underlying(id, amount, Rounding::down);
  ledger_.transfer(account, p.account, p.params.asset, amount, JournalTag::deposit);
  ledger_.mint(Authority::lending_pool, account, p.iou, minted, JournalTag::deposit);
  return minted;
}

Wad LendingMarket::redeem(AccountId account, PoolId id, Wad iou_amount, std::size_t step) {
  const Pool& p = pool(id);
  if (p.params.iou_mode == IouMode::exchange_rate) {
    Wad payout = underlying_for_iou(id, iou_amount, Rounding::down);
    return redeem_impl(account, id, iou_amount, payout, step);
  }
  // Rebasing: burn enough scaled units to cover the displayed amount.
  Wad held = iou_balance(account, id);
  Wad displayed = mul(held, p.state.liquidity_index);
  if (iou_amount > displayed)
    throw ProtocolError(ErrorCode::insufficient_iou, "displayed balance " + displayed.to_string());
  Wad burn = iou_amount == displayed ? held : std::min(held, div(iou_amount, p.state.liquidity_index, Rounding::up));
  return redeem_impl(account, id, burn, iou_amount, step);
}

Wad LendingMarket::redeem_raw(AccountId account, PoolId id, Wad raw_iou, std::size_t step) {
  return redeem_impl(account, id, raw_iou, underlying_for_iou(id, raw_iou, Rounding::down), step);
}

Wad LendingMarket::redeem_impl(AccountId account, PoolId id, Wad raw_burn, Wad payout, std::size_t step) {
  const Pool& p = pool(id);
  if (iou_balance(account, id) < raw_burn)
    throw ProtocolError(ErrorCode::insufficient_iou, ledger_.name(account) + " in pool " + p.id);
  if (cash(id) < payout)
    throw ProtocolError(ErrorCode::insufficient_liquidity,
                        "pool " + p.id + " cash " + cash(id).to_string() + " < payout " + payout.to_string());
  CheckpointId cp = ledger_.checkpoint();
  ledger_.burn(Authority::lending_pool, account, p.iou, raw_burn, JournalTag::redeem);
  ledger_.transfer(p.account, account, p.params.asset, payout, JournalTag::redeem);
  if (collateral_enabled(account, id) && !healthy(account, step)) {
    ledger_.rollback(cp);
    throw ProtocolError(ErrorCode::would_become_undercollateralized, "redeem from " + p.id);
  }
  ledger_.commit(cp);
  return payout;
}

bool LendingMarket::collateral_enabled(AccountId account, PoolId id) const {
  return !pool(id).state.collateral_disabled.contains(account);
}

void LendingMarket::set_collateral_flag(AccountId account, PoolId id, bool on, std::size_t step) {
  Pool& p = pool_mut(id);
  if (on) {
    p.state.collateral_disabled.erase(account);
    return;
  }
  bool inserted = p.state.collateral_disabled.insert(account).second;
  if (!healthy(account, step)) {
    if (inserted) p.state.collateral_disabled.erase(account);
    throw ProtocolError(ErrorCode::would_become_undercollateralized, "disable collateral in " + p.id);
  }
}

Wad LendingMarket::position_debt(const Pool& p, const BorrowPosition& pos) const {
  if (pos.mode == RateMode::stable) return pos.stable_debt;
  return mul(pos.scaled_principal, p.state.borrow_index, Rounding::up);
}

Wad LendingMarket::debt_of(AccountId account, PoolId id) const {
  const Pool& p = pool(id);
  auto it = p.state.positions.find(account);
  return it == p.state.positions.end() ? Wad{} : position_debt(p, it->second);
}

const BorrowPosition* LendingMarket::position(AccountId account, PoolId id) const {
  const Pool& p = pool(id);
  auto it = p.state.positions.find(account);
  return it == p.state.positions.end() ? nullptr : &it->second;
}

Wad LendingMarket::iou_balance(AccountId account, PoolId id) const { return ledger_.balance(account, pool(id).iou); }

Wad LendingMarket::displayed_balance(AccountId account, PoolId id) const {
  const Pool& p = pool(id);
  Wad raw = iou_balance(account, id);
  return p.params.iou_mode == IouMode::rebasing ? mul(raw, p.state.liquidity_index) : raw;
}

Wad LendingMarket::underlying_balance(AccountId account, PoolId id) const {
  return underlying_for_iou(id, iou_balance(account, id), Rounding::down);
}

void LendingMarket::transfer_iou(AccountId from, AccountId to, PoolId id, Wad raw_iou, JournalTag tag) {
  ledger_.transfer(from, to, pool(id).iou, raw_iou, tag);
}

AccountValuation LendingMarket::valuation(AccountId account, std::size_t step) const {
  AccountValuation v;
  for (std::size_t i = 0; i < pools_.size(); ++i) {
    PoolId id{static_cast<std::uint32_t>(i)};
    const Pool& p = pools_[i];
    Wad raw = ledger_.balance(account, p.iou);
    if (!raw.is_zero() && collateral_enabled(account, id)) {
      Wad value = oracle_.value_usd(underlying_for_iou(id, raw, Rounding::down), p.params.asset, step);
      v.collateral_value += value;
      v.threshold_value += mul(value, p.params.liquidation_threshold);
      v.borrow_power += mul(value, p.params.collateral_factor);
    }
    auto it = p.state.positions.find(account);
    if (it != p.state.positions.end())
      v.debt_value += oracle_.value_usd(position_debt(p, it->second), p.params.asset, step, Rounding::up);
  }
  return v;
}

bool LendingMarket::healthy(AccountId account, std::size_t step) const {
  AccountValuation v = valuation(account, step);
  return v.threshold_value >= v.debt_value;
}

Wad LendingMarket::max_borrow(AccountId account, PoolId id, std::size_t step) const {
  AccountValuation v = valuation(account, step);
  if (v.debt_value >= v.borrow_power) return {};
  Wad headroom_usd = v.borrow_power - v.debt_value;
  Wad price = oracle_.price_at(pool(id).params.asset, step);
  // Largest amount whose rounded-up value still fits.
  Wad amount = div(headroom_usd, price);
  while (!amount.is_zero() && mul(amount, price, Rounding::up) > headroom_usd) amount -= Wad::from_raw(1);
  return std::min(amount, cash(id));
}

void LendingMarket::borrow(AccountId account, PoolId id, Wad amount, RateMode mode, std::size_t step) {
  Pool& p = pool_mut(id);
  if (p.state.paused) throw ProtocolError(ErrorCode::pool_paused, p.id);
  auto existing = p.state.positions.find(account);
  if (existing != p.state.positions.end() && existing->second.mode != mode)
    throw ProtocolError(ErrorCode::rate_mode_mismatch, "open position in pool " + p.id + " is " +
                                                          std::string(to_string(existing->second.mode)));
  if (cash(id) < amount)
    throw ProtocolError(ErrorCode::insufficient_liquidity, "pool " + p.id + " cash " + cash(id).to_string());
  AccountValuation v = valuation(account, step);
  Wad added_value = oracle_.value_usd(amount, p.params.asset, step, Rounding::up);
  if (v.debt_value + added_value > v.borrow_power)
    throw ProtocolError(ErrorCode::exceeds_borrowing_power,
                        "debt " + (v.debt_value + added_value).to_string() + " > power " + v.borrow_power.to_string());
  if (amount.is_zero()) return;
  // Stable borrowers lock the rate implied by utilization after their own draw.
  Wad stable_rate = lendsim::borrow_rate(p.params.rate_model,
                                         lendsim::utilization(cash(id) - amount, total_borrows(id) + amount)) +
                    p.params.stable_rate_premium;
  ledger_.transfer(p.account, account, p.params.asset, amount, JournalTag::borrow);
  BorrowPosition& pos = p.state.positions[account];
  pos.mode = mode;
  if (mode == RateMode::variable) {
    Wad scaled = div(amount, p.state.borrow_index, Rounding::up);
    pos.scaled_principal += scaled;
    p.state.total_scaled_borrows += scaled;
  } else {
    // Debt-weighted blend of the existing and the new snapshot rate.
    Wad total = pos.stable_debt + amount;
    pos.stable_rate = Wad::from_raw(
        mul_div(pos.stable_rate.raw(), pos.stable_debt.raw(), total.raw(), Rounding::up) +
        mul_div(stable_rate.raw(), amount.raw(), total.raw(), Rounding::up));
    pos.stable_debt = total;
    p.state.total_stable_debt += amount;
  }
}

Wad LendingMarket::repay_on_behalf(AccountId payer, AccountId debtor, PoolId id, Wad amount) {
  Pool& p = pool_mut(id);
  auto it = p.state.positions.find(debtor);
  if (it == p.state.positions.end()) throw ProtocolError(ErrorCode::no_debt, ledger_.name(debtor) + " in pool " + p.id);
  BorrowPosition& pos = it->second;
  Wad debt = position_debt(p, pos);
  Wad applied = std::min(amount, debt);
  ledger_.transfer(payer, p.account, p.params.asset, applied, JournalTag::repay);
  if (pos.mode == RateMode::variable) {
    Wad reduce = applied == debt ? pos.scaled_principal
                                 : std::min(pos.scaled_principal, div(applied, p.state.borrow_index, Rounding::down));
    pos.scaled_principal -= reduce;
    p.state.total_scaled_borrows -= reduce;
    if (pos.scaled_principal.is_zero()) p.state.positions.erase(it);
  } else {
    pos.stable_debt -= applied;
    p.state.total_stable_debt -= applied;
    if (pos.stable_debt.is_zero()) p.state.positions.erase(it);
  }
  return applied;
}

void LendingMarket::switch_rate_mode(AccountId account, PoolId id) {
  Pool& p = pool_mut(id);
  auto it = p.state.positions.find(account);
  if (it == p.state.positions.end()) throw ProtocolError(ErrorCode::no_debt, ledger_.name(account) + " in pool " + p.id);
  BorrowPosition& pos = it->second;
  Wad debt = position_debt(p, pos);
  if (pos.mode == RateMode::variable) {
    Wad rate = current_borrow_rate(id) + p.params.stable_rate_premium;
    p.state.total_scaled_borrows -= pos.scaled_principal;
    p.state.total_stable_debt += debt;
    pos = BorrowPosition{RateMode::stable, Wad{}, rate, debt};
  } else {
    Wad scaled = div(debt, p.state.borrow_index, Rounding::up);
    p.state.total_stable_debt -= pos.stable_debt;
    p.state.total_scaled_borrows += scaled;
    pos = BorrowPosition{RateMode::variable, scaled, Wad{}, Wad{}};
  }
}

void LendingMarket::accrue(PoolId id, std::size_t steps) {
  Pool& p = pool_mut(id);
  const RateModelParams& model = p.params.rate_model;
  const Wad one = Wad::one();
  for (std::size_t s = 0; s < steps; ++s) {
    Wad before = total_borrows(id);
    Wad u = lendsim::utilization(cash(id), before);
    Wad rb = lendsim::borrow_rate(model, u);
    Wad rs = lendsim::supply_rate(model, u);
    p.state.borrow_index = mul(p.state.borrow_index, one + rb, Rounding::up);
    p.state.liquidity_index = mul(p.state.liquidity_index, one + rs, Rounding::down);
    for (auto& [account, pos] : p.state.positions) {
      if (pos.mode != RateMode::stable) continue;
      Wad grown = mul(pos.stable_debt, one + pos.stable_rate, Rounding::up);
      p.state.total_stable_debt += grown - pos.stable_debt;
      pos.stable_debt = grown;
    }
    Wad interest = total_borrows(id) - before;
    p.state.reserves += mul(interest, model.reserve_factor, Rounding::up);
  }
}

void LendingMarket::accrue_all(std::size_t steps) {
  for (std::size_t i = 0; i < pools_.size(); ++i) accrue(PoolId{static_cast<std::uint32_t>(i)}, steps);
}

void LendingMarket::set_paused(PoolId id, bool paused) { pool_mut(id).state.paused = paused; }

std::vector<AccountId> LendingMarket::borrowers() const {
  std::set<AccountId> all;
  for (const Pool& p : pools_)
    for (const auto& [account, pos] : p.state.positions) all.insert(account);
  return {all.begin(), all.end()};
}

LendingMarket::State LendingMarket::snapshot() const {
  State s;
  s.reserve(pools_.size());
  for (const Pool& p : pools_) s.push_back(p.state);
  return s;
}

void LendingMarket::restore(const State& state) {
  if (state.size() != pools_.size()) throw ProtocolError(ErrorCode::invariant_violation, "snapshot pool count");
  for (std::size_t i = 0; i < pools_.size(); ++i) pools_[i].state = state[i];
}

}  // namespace lendsim
