#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lendsim/errors.hpp"
#include "lendsim/fixed.hpp"
#include "lendsim/world.hpp"

namespace lendsim {

namespace plan {

/// Sells everything the plan holds of `asset` on the venue.
struct SellOn {
  VenueId venue;
  AssetId asset;
};
/// Buys `asset` until the plan holds enough to repay the loan.
struct BuyOn {
  VenueId venue;
  AssetId asset;
};
/// Swaps everything the plan holds of `asset_in` on an AMM.
struct AmmSwap {
  VenueId venue;
  AssetId asset_in;
};
/// Repays the target's debt with the plan's holding of `repay_asset`, then
/// redeems the seized IOU claim into the underlying.
struct Liquidate {
  AccountId target;
  AssetId repay_asset;
  AssetId seize_asset;
};
/// Repays an unsafe vault with the plan's stablecoin and takes collateral.
struct LiquidateVault {
  VaultId vault;
  AssetId seize_asset;
};

}  // namespace plan

using PlanStep = std::variant<plan::SellOn, plan::BuyOn, plan::AmmSwap, plan::Liquidate, plan::LiquidateVault>;

/// Straight-line program run inside one atomic transaction. The final
/// repayment of amount * (1 + flash fee) is implicit.
struct FlashPlan {
  AccountId borrower{};
  AssetId asset{};
  Wad amount{};
  std::vector<PlanStep> steps;
  /// Asset whose balance delta is reported as profit; defaults to `asset`.
  std::optional<AssetId> profit_asset;
};

struct FlashOutcome {
  enum class Status : std::uint8_t { committed, reverted };
  Status status{Status::reverted};
  SignedWad profit{};  // borrower's delta in the profit asset, gas included
  Wad gas_charged{};
  Wad repaid{};  // amount * (1 + fee) when committed
  std::optional<ErrorCode> reason;
  std::string detail;

  bool committed() const noexcept { return status == Status::committed; }
};

/// Runs the plan. Pre-checks (pool liquidity, gas affordability) throw;
/// anything failing after the loan is disbursed rolls the world back to the
/// pre-loan state and only the gas fee survives.
FlashOutcome execute(World& world, const FlashPlan& plan, std::size_t step);

/// Flash-loan fee owed on top of `amount` for the pool lending `asset`.
Wad flash_repayment(const World& world, AssetId asset, Wad amount);

struct Opportunity {
  enum class Kind : std::uint8_t { arbitrage, liquidation };
  Kind kind{};
  FlashPlan plan;
  SignedWad expected_profit{};
  std::size_t computed_at_step{};
  std::string venue_or_target;
};

std::string_view to_string(Opportunity::Kind kind) noexcept;
std::string opportunity_json(const World& world, const Opportunity& opportunity);

/// Two-venue price gaps on any asset with a lending pool, sized for maximum
/// profit and checked by executing on a scratch checkpoint. Sorted by
/// expected profit, best first.
std::vector<Opportunity> scan_arbitrage(World& world, std::size_t step, AccountId borrower);

/// Flash-funded liquidations of unhealthy pool accounts and unsafe vaults,
/// kept only when scratch execution is profitable.
std::vector<Opportunity> scan_liquidations(World& world, std::size_t step, AccountId borrower);

/// Pure profit of selling `size` of `asset` on `sell_venue` and buying the
/// repayment back on `buy_venue`, in the counter asset. Empty if infeasible.
std::optional<SignedWad> arbitrage_profit(const World& world, AssetId asset, AssetId numeraire, VenueId sell_venue,
                                          VenueId buy_venue, Wad size, std::size_t step);

}  // namespace lendsim
