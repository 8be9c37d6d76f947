#include "lendsim/liquidation.hpp"

#include <limits>

#include "json.hpp"
#include "lendsim/errors.hpp"

namespace lendsim {

double HealthReport::ltv() const noexcept {
  if (debt_value.is_zero()) return 0.0;
  if (collateral_value.is_zero()) return std::numeric_limits<double>::infinity();
  return debt_value.to_double() / collateral_value.to_double();
}

Wad HealthReport::health_factor() const {
  if (debt_value.is_zero()) return Wad::max();
  return div(threshold_value, debt_value);
}

HealthReport health(const LendingMarket& market, AccountId account, std::size_t step) {
  AccountValuation v = market.valuation(account, step);
  return HealthReport{account, v.collateral_value, v.threshold_value, v.debt_value};
}

Wad max_liquidation_repay(const LendingMarket& market, AccountId target, AssetId repay_asset) {
  PoolId id = market.pool_for(repay_asset);
  return mul(market.debt_of(target, id), market.pool(id).params.close_factor);
}

LiquidationResult liquidate(LendingMarket& market, AccountId liquidator, AccountId target, AssetId repay_asset,
                            AssetId seize_asset, Wad repay_amount, std::size_t step) {
  const Ledger& ledger = market.ledger();
  if (liquidator == target) throw ProtocolError(ErrorCode::self_liquidation, ledger.name(target));
  PoolId repay_pool = market.pool_for(repay_asset);
  PoolId seize_pool = market.pool_for(seize_asset);

  HealthReport before = health(market, target, step);
  if (!before.liquidatable())
    throw ProtocolError(ErrorCode::not_liquidatable, ledger.name(target) + " health factor " +
                                                          before.health_factor().to_string());
  if (market.debt_of(target, repay_pool).is_zero())
    throw ProtocolError(ErrorCode::no_debt, ledger.name(target) + " owes no " + ledger.symbol(repay_asset));
  Wad cap = max_liquidation_repay(market, target, repay_asset);
  if (repay_amount > cap)
    throw ProtocolError(ErrorCode::exceeds_close_factor,
                        "repay " + repay_amount.to_string() + " > close-factor cap " + cap.to_string());
  Wad deposit = market.underlying_balance(target, seize_pool);
  if (deposit.is_zero() || !market.collateral_enabled(target, seize_pool))
    throw ProtocolError(ErrorCode::no_such_collateral, ledger.name(target) + " has no " + ledger.symbol(seize_asset));

  const PriceOracle& oracle = market.oracle();
  Wad repay_price = oracle.price_at(repay_asset, step);
  Wad seize_price = oracle.price_at(seize_asset, step);
  Wad bonus_factor = Wad::one() + market.pool(repay_pool).params.liquidation_bonus;
  // repay * P_repay * (1 + b) / P_seize, one rounding.
  Wad seize = Wad::from_raw(mul_mul_div(repay_amount.raw(), repay_price.raw(), bonus_factor.raw(), seize_price.raw(),
                                        Wad::kScale, Rounding::down));
  Wad repaid = repay_amount;
  if (seize > deposit) {
    repaid = mul_div(repay_amount, deposit, seize, Rounding::up);
    seize = deposit;
  }

  Wad seized_iou;
  if (seize == deposit) {
    seized_iou = market.iou_balance(target, seize_pool);
  } else {
    seized_iou = std::min(market.iou_for_underlying(seize_pool, seize, Rounding::down),
                          market.iou_balance(target, seize_pool));
  }

  market.repay_on_behalf(liquidator, target, repay_pool, repaid);
  market.transfer_iou(target, liquidator, seize_pool, seized_iou, JournalTag::liquidation);

  HealthReport after = health(market, target, step);
  return LiquidationResult{repaid, seize, seized_iou, before.health_factor(), after.health_factor()};
}

std::string liquidation_event_json(const Ledger& ledger, std::size_t step, AccountId liquidator, AccountId target,
                                   AssetId repay_asset, AssetId seize_asset, const LiquidationResult& r) {
  auto hf = [](Wad v) { return v == Wad::max() ? std::string("inf") : v.to_string(); };
  nlohmann::ordered_json j;
  j["event"] = "liquidation";
  j["step"] = step;
  j["liquidator"] = ledger.name(liquidator);
  j["target"] = ledger.name(target);
  j["repay_asset"] = ledger.symbol(repay_asset);
  j["repay_amt"] = r.repaid.to_string();
  j["seize_asset"] = ledger.symbol(seize_asset);
  j["seized_amt"] = r.seized_underlying.to_string();
  j["hf_before"] = hf(r.hf_before);
  j["hf_after"] = hf(r.hf_after);
  return j.dump();
}

}  // namespace lendsim
