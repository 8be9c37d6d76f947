#pragma once

#include <map>
#include <vector>

#include "lendsim/fixed.hpp"
#include "lendsim/lending.hpp"

namespace lendsim {

struct RewardParams {
  Wad emission_per_step{};   // governance tokens per pool per step
  Wad supply_share{Wad::from_raw(Wad::kScale / 2)};  // sigma; the rest goes to borrowers
};

/// What one pool paid out in one step.
struct RewardTranche {
  PoolId pool{};
  Wad supply_side{};
  Wad borrow_side{};
  Wad distributed{};
  Wad dust{};
};

/// Governance-token accrual kept off the ledger: claims are never
/// exercised inside the simulation, so only the running totals matter.
class RewardLedger {
 public:
  explicit RewardLedger(RewardParams params) : params_(params) {}

  /// Splits sigma*E pro rata over IOU holders and (1-sigma)*E over debtors
  /// of every pool, rounding each share down; remainders go to dust.
  std::vector<RewardTranche> distribute(const LendingMarket& market);

  Wad accrued(AccountId account) const;
  const std::map<AccountId, Wad>& accounts() const noexcept { return accrued_; }
  Wad dust() const noexcept { return dust_; }
  Wad total_distributed() const noexcept { return distributed_; }
  const RewardParams& params() const noexcept { return params_; }

 private:
  Wad pay_pro_rata(Wad tranche, const std::vector<std::pair<AccountId, Wad>>& weights);

  RewardParams params_;
  std::map<AccountId, Wad> accrued_;
  Wad dust_{};
  Wad distributed_{};
};

}  // namespace lendsim
