#pragma once

#include <optional>
#include <string>

#include "lendsim/fixed.hpp"
#include "lendsim/lending.hpp"

namespace lendsim {

struct HealthReport {
  AccountId account{};
  Wad collateral_value{};
  Wad threshold_value{};
  Wad debt_value{};

  /// debt / collateral; +inf when there is debt but no collateral, 0 with no debt.
  double ltv() const noexcept;
  /// threshold / debt, Wad::max() standing in for infinity when debt is zero.
  Wad health_factor() const;
  bool has_debt() const noexcept { return !debt_value.is_zero(); }
  /// HF < 1, decided on the exact USD sums rather than the rounded ratio.
  bool liquidatable() const noexcept { return threshold_value < debt_value; }
};

HealthReport health(const LendingMarket& market, AccountId account, std::size_t step);

struct LiquidationResult {
  Wad repaid{};            // effective repay after the collateral cap
  Wad seized_underlying{};  // collateral value delivered, in seize-asset units
  Wad seized_iou{};         // raw IOU units moved to the liquidator
  Wad hf_before{};
  Wad hf_after{};
};

/// Any account other than the target may call this. Repays up to
/// close_factor of the target's debt in `repay_asset` and receives
/// repay value * (1 + bonus) of the target's `seize_asset` deposit as an
/// IOU claim. When the deposit is too small the seizure is capped and the
/// repay shrinks proportionally.
LiquidationResult liquidate(LendingMarket& market, AccountId liquidator, AccountId target, AssetId repay_asset,
                            AssetId seize_asset, Wad repay_amount, std::size_t step);

/// Largest repay the close factor allows for `target` in `repay_asset`.
Wad max_liquidation_repay(const LendingMarket& market, AccountId target, AssetId repay_asset);

/// JSONL record for one liquidation.
std::string liquidation_event_json(const Ledger& ledger, std::size_t step, AccountId liquidator, AccountId target,
                                   AssetId repay_asset, AssetId seize_asset, const LiquidationResult& result);

}  // namespace lendsim
