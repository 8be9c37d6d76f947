#include "lendsim/cdp.hpp"

#include "lendsim/errors.hpp"

namespace lendsim {

Wad FeePolicy::next_fee(Wad base, Wad price) const {
  if (kind == Kind::constant) return base;
  Wad fee = price <= target ? base + mul(gain, target - price) : sub_floor(base, mul(gain, price - target));
  return std::min(fee, max_fee);
}

VaultEngine::VaultEngine(Ledger& ledger, const PriceOracle& oracle, CdpParams params, AccountId engine_account)
    : ledger_(ledger), oracle_(oracle), params_(std::move(params)), account_(engine_account) {
  for (const auto& [asset, fraction] : params_.issuance_fraction)
    if (fraction.is_zero() || fraction >= Wad::one())
      throw ProtocolError(ErrorCode::validation_error, "issuance fraction for " + ledger_.symbol(asset) +
                                                           " must be in (0, 1)");
  state_.stability_fee = params_.stability_fee;
}

VaultId VaultEngine::open_vault(AccountId owner) {
  ledger_.name(owner);  // validates the account
  state_.vaults.push_back(Vault{owner, {}, Wad{}, state_.fee_index});
  return VaultId{static_cast<std::uint32_t>(state_.vaults.size() - 1)};
}

const Vault& VaultEngine::vault(VaultId id) const {
  if (id.index >= state_.vaults.size())
    throw ProtocolError(ErrorCode::unknown_vault, "vault #" + std::to_string(id.index));
  return state_.vaults[id.index];
}

Vault& VaultEngine::vault_mut(VaultId id) {
  if (id.index >= state_.vaults.size())
    throw ProtocolError(ErrorCode::unknown_vault, "vault #" + std::to_string(id.index));
  return state_.vaults[id.index];
}

void VaultEngine::lock(VaultId id, AssetId asset, Wad amount) {
  Vault& v = vault_mut(id);
  if (!params_.issuance_fraction.contains(asset))
    throw ProtocolError(ErrorCode::invalid_argument, ledger_.symbol(asset) + " is not accepted as vault collateral");
  ledger_.transfer(v.owner, account_, asset, amount, JournalTag::vault_lock);
  v.collateral[asset] += amount;
}

void VaultEngine::free(VaultId id, AssetId asset, Wad amount, std::size_t step) {
  Vault& v = vault_mut(id);
  auto it = v.collateral.find(asset);
  Wad locked = it == v.collateral.end() ? Wad{} : it->second;
  if (locked < amount)
    throw ProtocolError(ErrorCode::insufficient_balance, "vault holds " + locked.to_string() + " " + ledger_.symbol(asset));
  Vault after = v;
  after.collateral[asset] -= amount;
  Wad d = debt(id);
  if (!d.is_zero() && d > bound_with(after, step))
    throw ProtocolError(ErrorCode::would_breach_issuance_bound, "debt " + d.to_string());
  ledger_.transfer(account_, v.owner, asset, amount, JournalTag::vault_free);
  v.collateral[asset] -= amount;
  if (v.collateral[asset].is_zero()) v.collateral.erase(asset);
}

void VaultEngine::draw(VaultId id, Wad amount, std::size_t step) {
  Vault& v = vault_mut(id);
  if (amount.is_zero()) return;
  Wad scaled = v.debt_scaled + div(amount, state_.fee_index, Rounding::up);
  Wad new_debt = mul(scaled, state_.fee_index, Rounding::up);
  Wad limit = bound_with(v, step);
  if (new_debt > limit)
    throw ProtocolError(ErrorCode::exceeds_issuance_bound, "debt " + new_debt.to_string() + " > bound " + limit.to_string());
  ledger_.mint(Authority::cdp, v.owner, params_.stablecoin, amount, JournalTag::dai_draw);
  v.debt_scaled = scaled;
  state_.minted += amount;
}

Wad VaultEngine::repay_from(AccountId payer, VaultId id, Wad amount) {
  Vault& v = vault_mut(id);
  Wad d = debt(id);
  if (d.is_zero()) throw ProtocolError(ErrorCode::no_debt, "vault #" + std::to_string(id.index));
  Wad applied = std::min(amount, d);
  ledger_.burn(Authority::cdp, payer, params_.stablecoin, applied, JournalTag::dai_repay);
  state_.burned += applied;
  if (applied == d)
    v.debt_scaled = Wad{};
  else
    v.debt_scaled -= std::min(v.debt_scaled, div(applied, state_.fee_index, Rounding::down));
  return applied;
}

VaultLiquidation VaultEngine::liquidate(AccountId liquidator, VaultId id, Wad repay_amount, AssetId seize_asset,
                                        std::size_t step) {
  Vault& v = vault_mut(id);
  VaultStatus s = status(id, step);
  if (s.safe) throw ProtocolError(ErrorCode::vault_safe, "vault #" + std::to_string(id.index));
  auto it = v.collateral.find(seize_asset);
  if (it == v.collateral.end() || it->second.is_zero())
    throw ProtocolError(ErrorCode::no_such_collateral, "vault #" + std::to_string(id.index) + " holds no " +
                                                           ledger_.symbol(seize_asset));
  Wad repaid = std::min(repay_amount, s.debt);
  Wad factor = Wad::one() + params_.liquidation_penalty;
  Wad price = oracle_.price_at(seize_asset, step);
  // Stablecoin counts at par: seized value = repaid * (1 + penalty) USD.
  Wad seize = Wad::from_raw(mul_mul_div(repaid.raw(), factor.raw(), Wad::kScale, price.raw(), Wad::kScale,
                                        Rounding::down));
  Wad available = it->second;
  if (seize > available) {
    repaid = mul_div(repaid, available, seize, Rounding::up);
    seize = available;
  }
  repay_from(liquidator, id, repaid);
  ledger_.transfer(account_, liquidator, seize_asset, seize, JournalTag::liquidation);
  it->second -= seize;
  if (it->second.is_zero()) v.collateral.erase(it);
  return VaultLiquidation{repaid, seize};
}

void VaultEngine::accrue_fee(std::size_t steps) {
  for (std::size_t i = 0; i < steps; ++i)
    state_.fee_index = mul(state_.fee_index, Wad::one() + state_.stability_fee, Rounding::up);
}

void VaultEngine::apply_policy(std::size_t step) {
  if (params_.fee_policy.kind == FeePolicy::Kind::constant) return;
  state_.stability_fee = params_.fee_policy.next_fee(params_.stability_fee, oracle_.price_at(params_.stablecoin, step));
}

Wad VaultEngine::debt(VaultId id) const { return mul(vault(id).debt_scaled, state_.fee_index, Rounding::up); }

Wad VaultEngine::bound_with(const Vault& v, std::size_t step) const {
  Wad total;
  for (const auto& [asset, amount] : v.collateral) {
    auto f = params_.issuance_fraction.find(asset);
    if (f == params_.issuance_fraction.end()) continue;
    total += mul(oracle_.value_usd(amount, asset, step), f->second);
  }
  return total;
}

Wad VaultEngine::bound(VaultId id, std::size_t step) const { return bound_with(vault(id), step); }

VaultStatus VaultEngine::status(VaultId id, std::size_t step) const {
  const Vault& v = vault(id);
  VaultStatus s;
  for (const auto& [asset, amount] : v.collateral) s.collateral_value += oracle_.value_usd(amount, asset, step);
  s.debt = debt(id);
  s.bound = bound_with(v, step);
  s.safe = s.debt <= s.bound;
  return s;
}

std::vector<VaultId> VaultEngine::unsafe_vaults(std::size_t step) const {
  std::vector<VaultId> out;
  for (std::size_t i = 0; i < state_.vaults.size(); ++i) {
    VaultId id{static_cast<std::uint32_t>(i)};
    if (state_.vaults[i].debt_scaled.is_zero()) continue;
    if (!status(id, step).safe) out.push_back(id);
  }
  return out;
}

}  // namespace lendsim
