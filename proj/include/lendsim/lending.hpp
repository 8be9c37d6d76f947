#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lendsim/fixed.hpp"
#include "lendsim/ledger.hpp"
#include "lendsim/oracle.hpp"

namespace lendsim {

enum class IouMode : std::uint8_t { exchange_rate, rebasing };
enum class RateMode : std::uint8_t { variable, stable };

std::string_view to_string(IouMode mode) noexcept;
std::string_view to_string(RateMode mode) noexcept;

/// Two-slope utilization curve. All rates are per simulation step.
struct RateModelParams {
  Wad base_rate{};
  Wad slope1{};
  Wad slope2{};
  Wad kink{};
  Wad reserve_factor{};
  friend bool operator==(const RateModelParams&, const RateModelParams&) = default;
};

/// borrows / (cash + borrows), zero for an empty market.
Wad utilization(Wad cash, Wad borrows);
Wad borrow_rate(const RateModelParams& model, Wad utilization);
/// borrow_rate * utilization * (1 - reserve_factor)
Wad supply_rate(const RateModelParams& model, Wad utilization);

struct PoolParams {
  AssetId asset{};
  Wad collateral_factor{};
  Wad liquidation_threshold{};
  Wad liquidation_bonus{};
  Wad close_factor{};
  IouMode iou_mode{IouMode::exchange_rate};
  RateModelParams rate_model{};
  Wad flash_fee{};
  Wad stable_rate_premium{};
};

/// Violations of the parameter invariants; empty when valid. `warnings`
/// collects non-fatal findings (threshold * (1 + bonus) >= 1).
std::vector<std::string> validate(const PoolParams& params, std::vector<std::string>* warnings = nullptr);

struct BorrowPosition {
  RateMode mode{RateMode::variable};
  Wad scaled_principal{};  // variable: debt / borrow_index at last touch
  Wad stable_rate{};
  Wad stable_debt{};  // stable: principal compounded at stable_rate
  friend bool operator==(const BorrowPosition&, const BorrowPosition&) = default;
};

struct PoolState {
  Wad total_scaled_borrows{};
  Wad total_stable_debt{};
  Wad reserves{};
  Wad borrow_index{Wad::one()};
  Wad liquidity_index{Wad::one()};
  bool paused{false};
  std::map<AccountId, BorrowPosition> positions;
  std::set<AccountId> collateral_disabled;
  friend bool operator==(const PoolState&, const PoolState&) = default;
};

struct PoolId {
  std::uint32_t index{};
  friend constexpr auto operator<=>(PoolId, PoolId) = default;
};

/// USD sums over every pool for one account.
struct AccountValuation {
  Wad collateral_value{};  // flagged deposits * price
  Wad threshold_value{};   // ... * liquidation_threshold
  Wad borrow_power{};      // ... * collateral_factor
  Wad debt_value{};        // debts * price, rounded up
};

/// All pooled-lending markets of one world. Underlying cash and IOU tokens
/// live in the ledger; debt positions, indices and flags live here.
class LendingMarket {
 public:
  struct Pool {
    std::string id;
    PoolParams params;
    AccountId account;
    AssetId iou;
    PoolState state;
  };
  using State = std::vector<PoolState>;

  LendingMarket(Ledger& ledger, const PriceOracle& oracle) : ledger_(ledger), oracle_(oracle) {}
  LendingMarket(const LendingMarket&) = delete;
  LendingMarket& operator=(const LendingMarket&) = delete;

  /// Registers the pool's ledger account and IOU asset ("c"/"a" + symbol).
  PoolId add_pool(std::string id, const PoolParams& params);

  std::size_t pool_count() const noexcept { return pools_.size(); }
  const Pool& pool(PoolId id) const;
  std::optional<PoolId> find_pool(AssetId asset) const;
  std::optional<PoolId> find_pool(std::string_view id) const;
  PoolId pool_for(AssetId asset) const;

  Wad cash(PoolId id) const;
  Wad total_borrows(PoolId id) const;
  Wad reserves(PoolId id) const { return pool(id).state.reserves; }
  /// cash + borrows - reserves: what IOU holders collectively own.
  Wad backing(PoolId id) const;
  Wad iou_supply(PoolId id) const;
  Wad utilization(PoolId id) const;
  Wad current_borrow_rate(PoolId id) const;
  Wad current_supply_rate(PoolId id) const;
  /// Exchange-rate pools: backing / iou_supply (1 when empty). Rebasing: liquidity index.
  Wad exchange_rate(PoolId id) const;

  Wad deposit(AccountId account, PoolId id, Wad amount);
  /// Exchange-rate pools take an IOU token count; rebasing pools take the
  /// displayed balance, which is paid out one-to-one.
  Wad redeem(AccountId account, PoolId id, Wad iou_amount, std::size_t step);
  /// Redeems a raw ledger IOU quantity regardless of mode.
  Wad redeem_raw(AccountId account, PoolId id, Wad raw_iou, std::size_t step);
  void set_collateral_flag(AccountId account, PoolId id, bool on, std::size_t step);
  bool collateral_enabled(AccountId account, PoolId id) const;
  void borrow(AccountId account, PoolId id, Wad amount, RateMode mode, std::size_t step);
  Wad repay(AccountId account, PoolId id, Wad amount) { return repay_on_behalf(account, account, id, amount); }
  Wad repay_on_behalf(AccountId payer, AccountId debtor, PoolId id, Wad amount);
  void switch_rate_mode(AccountId account, PoolId id);
  void accrue(PoolId id, std::size_t steps = 1);
  void accrue_all(std::size_t steps = 1);
  void set_paused(PoolId id, bool paused);

  Wad debt_of(AccountId account, PoolId id) const;
  const BorrowPosition* position(AccountId account, PoolId id) const;
  /// Raw ledger IOU units (scaled units for rebasing pools).
  Wad iou_balance(AccountId account, PoolId id) const;
  /// What a wallet shows: IOU count, or scaled * liquidity index when rebasing.
  Wad displayed_balance(AccountId account, PoolId id) const;
  Wad underlying_balance(AccountId account, PoolId id) const;
  Wad underlying_for_iou(PoolId id, Wad raw_iou, Rounding rounding) const;
  Wad iou_for_underlying(PoolId id, Wad underlying, Rounding rounding) const;
  void transfer_iou(AccountId from, AccountId to, PoolId id, Wad raw_iou, JournalTag tag);

  AccountValuation valuation(AccountId account, std::size_t step) const;
  /// Threshold value covers debt value (health factor >= 1).
  bool healthy(AccountId account, std::size_t step) const;
  /// Largest amount of the pool's asset the account could still borrow.
  Wad max_borrow(AccountId account, PoolId id, std::size_t step) const;
  /// Accounts holding any debt, ascending by id.
  std::vector<AccountId> borrowers() const;

  State snapshot() const;
  void restore(const State& state);

  Ledger& ledger() noexcept { return ledger_; }
  const Ledger& ledger() const noexcept { return ledger_; }
  const PriceOracle& oracle() const noexcept { return oracle_; }

 private:
  Pool& pool_mut(PoolId id);
  Wad position_debt(const Pool& pool, const BorrowPosition& pos) const;
  Wad redeem_impl(AccountId account, PoolId id, Wad raw_burn, Wad payout, std::size_t step);

  Ledger& ledger_;
  const PriceOracle& oracle_;
  std::vector<Pool> pools_;
};

}  // namespace lendsim
