#include "lendsim/rewards.hpp"

namespace lendsim {

Wad RewardLedger::pay_pro_rata(Wad tranche, const std::vector<std::pair<AccountId, Wad>>& weights) {
  u128 total = 0;
  for (const auto& [account, w] : weights) total += w.raw();
  if (total == 0 || tranche.is_zero()) return Wad{};
  Wad paid{};
  for (const auto& [account, w] : weights) {
    Wad share = Wad::from_raw(mul_div(tranche.raw(), w.raw(), total, Rounding::down));
    if (share.is_zero()) continue;
    accrued_[account] += share;
    paid += share;
  }
  return paid;
}

std::vector<RewardTranche> RewardLedger::distribute(const LendingMarket& market) {
  std::vector<RewardTranche> out;
  if (params_.emission_per_step.is_zero()) return out;
  const Ledger& ledger = market.ledger();
  const std::vector<AccountId> debtors = market.borrowers();
  for (std::size_t p = 0; p < market.pool_count(); ++p) {
    PoolId id{static_cast<std::uint32_t>(p)};
    RewardTranche t{id};
    t.supply_side = mul(params_.emission_per_step, params_.supply_share);
    t.borrow_side = params_.emission_per_step - t.supply_side;

    std::vector<std::pair<AccountId, Wad>> weights;
    AssetId iou = market.pool(id).iou;
    for (std::uint32_t a = 0; a < ledger.account_count(); ++a) {
      Wad bal = ledger.balance(AccountId{a}, iou);
      if (!bal.is_zero()) weights.emplace_back(AccountId{a}, bal);
    }
    t.distributed = pay_pro_rata(t.supply_side, weights);

    weights.clear();
    for (AccountId d : debtors) {
      Wad debt = market.debt_of(d, id);
      if (!debt.is_zero()) weights.emplace_back(d, debt);
    }
    t.distributed += pay_pro_rata(t.borrow_side, weights);

    t.dust = params_.emission_per_step - t.distributed;
    dust_ += t.dust;
    distributed_ += t.distributed;
    out.push_back(t);
  }
  return out;
}

Wad RewardLedger::accrued(AccountId account) const {
  auto it = accrued_.find(account);
  return it == accrued_.end() ? Wad{} : it->second;
}

}  // namespace lendsim
