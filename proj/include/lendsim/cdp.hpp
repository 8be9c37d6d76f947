#pragma once

#include <map>
#include <vector>

#include "lendsim/fixed.hpp"
#include "lendsim/ledger.hpp"
#include "lendsim/oracle.hpp"

namespace lendsim {

struct VaultId {
  std::uint32_t index{};
  friend constexpr auto operator<=>(VaultId, VaultId) = default;
};

/// Maps the stablecoin's oracle price to the next per-step stability fee.
struct FeePolicy {
  enum class Kind : std::uint8_t { constant, proportional };
  Kind kind{Kind::constant};
  Wad gain{};     // proportional: fee change per unit of peg deviation
  Wad max_fee{};  // proportional: upper clamp
  Wad target{Wad::one()};

  /// constant: returns `base`. proportional: base + gain * (target - price),
  /// clamped to [0, max_fee].
  Wad next_fee(Wad base, Wad stablecoin_price) const;
};

struct CdpParams {
  AssetId stablecoin{};
  std::map<AssetId, Wad> issuance_fraction;  // max stablecoin per unit of collateral value
  Wad stability_fee{};                       // per step
  Wad liquidation_penalty{};
  FeePolicy fee_policy{};
};

struct Vault {
  AccountId owner{};
  std::map<AssetId, Wad> collateral;
  Wad debt_scaled{};
  Wad fee_index_at_open{};
  friend bool operator==(const Vault&, const Vault&) = default;
};

struct VaultStatus {
  Wad collateral_value{};
  Wad debt{};
  Wad bound{};  // sum of collateral value * issuance fraction
  bool safe{true};
};

struct VaultLiquidation {
  Wad repaid{};
  Wad seized{};
};

/// Collateralised-debt-position engine. Locked collateral sits in the
/// engine's ledger account; the stablecoin is minted on draw and burned on
/// repay or liquidation. The issuance fraction is also the liquidation bound.
class VaultEngine {
 public:
  struct State {
    std::vector<Vault> vaults;
    Wad fee_index{Wad::one()};
    Wad stability_fee{};
    Wad minted{};
    Wad burned{};
    friend bool operator==(const State&, const State&) = default;
  };

  VaultEngine(Ledger& ledger, const PriceOracle& oracle, CdpParams params, AccountId engine_account);
  VaultEngine(const VaultEngine&) = delete;
  VaultEngine& operator=(const VaultEngine&) = delete;

  VaultId open_vault(AccountId owner);
  void lock(VaultId id, AssetId asset, Wad amount);
  void free(VaultId id, AssetId asset, Wad amount, std::size_t step);
  void draw(VaultId id, Wad amount, std::size_t step);
  Wad repay(VaultId id, Wad amount) { return repay_from(vault(id).owner, id, amount); }
  Wad repay_from(AccountId payer, VaultId id, Wad amount);
  VaultLiquidation liquidate(AccountId liquidator, VaultId id, Wad repay_amount, AssetId seize_asset,
                             std::size_t step);

  void accrue_fee(std::size_t steps = 1);
  void set_fee(Wad fee) { state_.stability_fee = fee; }
  /// Consults the fee policy with the stablecoin's oracle price at `step`.
  void apply_policy(std::size_t step);

  Wad debt(VaultId id) const;
  Wad bound(VaultId id, std::size_t step) const;
  VaultStatus status(VaultId id, std::size_t step) const;
  std::vector<VaultId> unsafe_vaults(std::size_t step) const;

  std::size_t vault_count() const noexcept { return state_.vaults.size(); }
  const Vault& vault(VaultId id) const;
  Wad fee_index() const noexcept { return state_.fee_index; }
  Wad stability_fee() const noexcept { return state_.stability_fee; }
  Wad total_minted() const noexcept { return state_.minted; }
  Wad total_burned() const noexcept { return state_.burned; }
  const CdpParams& params() const noexcept { return params_; }
  AccountId account() const noexcept { return account_; }
  AssetId stablecoin() const noexcept { return params_.stablecoin; }

  const State& snapshot() const noexcept { return state_; }
  void restore(const State& state) { state_ = state; }

 private:
  Vault& vault_mut(VaultId id);
  Wad bound_with(const Vault& v, std::size_t step) const;

  Ledger& ledger_;
  const PriceOracle& oracle_;
  CdpParams params_;
  AccountId account_;
  State state_;
};

}  // namespace lendsim
