#include "lendsim/ledger.hpp"

#include <ostream>

#include "json.hpp"

#include "lendsim/errors.hpp"

namespace lendsim {

std::string_view to_string(AccountKind kind) noexcept {
  switch (kind) {
    case AccountKind::user: return "user";
    case AccountKind::pool: return "pool";
    case AccountKind::vault_engine: return "vault-engine";
    case AccountKind::venue: return "venue";
    case AccountKind::fee_sink: return "fee-sink";
  }
  return "?";
}

std::string_view to_string(JournalOp op) noexcept {
  switch (op) {
    case JournalOp::transfer: return "transfer";
    case JournalOp::mint: return "mint";
    case JournalOp::burn: return "burn";
  }
  return "?";
}

std::string_view to_string(JournalTag tag) noexcept {
  switch (tag) {
    case JournalTag::transfer: return "transfer";
    case JournalTag::genesis: return "genesis";
    case JournalTag::deposit: return "deposit";
    case JournalTag::redeem: return "redeem";
    case JournalTag::borrow: return "borrow";
    case JournalTag::repay: return "repay";
    case JournalTag::liquidation: return "liquidation";
    case JournalTag::flash_borrow: return "flash_borrow";
    case JournalTag::flash_repay: return "flash_repay";
    case JournalTag::gas_fee: return "gas_fee";
    case JournalTag::venue_trade: return "venue_trade";
    case JournalTag::vault_lock: return "vault_lock";
    case JournalTag::vault_free: return "vault_free";
    case JournalTag::dai_draw: return "dai_draw";
    case JournalTag::dai_repay: return "dai_repay";
  }
  return "?";
}

AssetId Ledger::add_asset(std::string symbol, std::initializer_list<Authority> authorities) {
  if (symbol.empty()) throw ProtocolError(ErrorCode::invalid_argument, "empty asset symbol");
  if (asset_index_.contains(symbol)) throw ProtocolError(ErrorCode::invalid_argument, "duplicate asset " + symbol);
  std::uint8_t mask = 0;
  for (Authority a : authorities) mask |= static_cast<std::uint8_t>(1u << static_cast<unsigned>(a));
  AssetId id{static_cast<std::uint32_t>(assets_.size())};
  asset_index_.emplace(symbol, id.index);
  assets_.push_back({std::move(symbol), mask});
  supply_.emplace_back();
  return id;
}

AccountId Ledger::add_account(std::string name, AccountKind kind) {
  if (name.empty()) throw ProtocolError(ErrorCode::invalid_argument, "empty account name");
  if (account_index_.contains(name)) throw ProtocolError(ErrorCode::invalid_argument, "duplicate account " + name);
  AccountId id{static_cast<std::uint32_t>(accounts_.size())};
  account_index_.emplace(name, id.index);
  accounts_.push_back({std::move(name), kind});
  balances_.emplace_back();
  return id;
}

std::optional<AssetId> Ledger::find_asset(std::string_view symbol) const {
  auto it = asset_index_.find(std::string(symbol));
  if (it == asset_index_.end()) return std::nullopt;
  return AssetId{it->second};
}

std::optional<AccountId> Ledger::find_account(std::string_view name) const {
  auto it = account_index_.find(std::string(name));
  if (it == account_index_.end()) return std::nullopt;
  return AccountId{it->second};
}

AssetId Ledger::asset(std::string_view symbol) const {
  if (auto id = find_asset(symbol)) return *id;
  throw ProtocolError(ErrorCode::unknown_asset, std::string(symbol));
}

AccountId Ledger::account(std::string_view name) const {
  if (auto id = find_account(name)) return *id;
  throw ProtocolError(ErrorCode::unknown_account, std::string(name));
}

const std::string& Ledger::symbol(AssetId asset) const {
  check_asset(asset);
  return assets_[asset.index].symbol;
}

const std::string& Ledger::name(AccountId account) const {
  check_account(account);
  return accounts_[account.index].name;
}

AccountKind Ledger::kind(AccountId account) const {
  check_account(account);
  return accounts_[account.index].kind;
}

bool Ledger::may_mint(Authority authority, AssetId asset) const {
  check_asset(asset);
  if (authority == Authority::genesis && sealed_) return false;
  return (assets_[asset.index].authority_mask >> static_cast<unsigned>(authority)) & 1u;
}

void Ledger::check_account(AccountId account) const {
  if (account.index >= accounts_.size())
    throw ProtocolError(ErrorCode::unknown_account, "account #" + std::to_string(account.index));
}

void Ledger::check_asset(AssetId asset) const {
  if (asset.index >= assets_.size())
    throw ProtocolError(ErrorCode::unknown_asset, "asset #" + std::to_string(asset.index));
}

Wad Ledger::balance(AccountId account, AssetId asset) const {
  check_account(account);
  check_asset(asset);
  const auto& row = balances_[account.index];
  return asset.index < row.size() ? row[asset.index] : Wad{};
}

Wad Ledger::supply(AssetId asset) const {
  check_asset(asset);
  return supply_[asset.index];
}

Wad& Ledger::slot(AccountId account, AssetId asset) {
  auto& row = balances_[account.index];
  if (row.size() <= asset.index) row.resize(assets_.size());
  return row[asset.index];
}

void Ledger::append(JournalOp op, AccountId from, AccountId to, AssetId asset, Wad amount, JournalTag tag) {
  journal_.push_back({journal_.size() + 1, op, from, to, asset, amount, tag});
}

void Ledger::transfer(AccountId from, AccountId to, AssetId asset, Wad amount, JournalTag tag) {
  check_account(from);
  check_account(to);
  check_asset(asset);
  Wad& src = slot(from, asset);
  if (src < amount)
    throw ProtocolError(ErrorCode::insufficient_balance,
                        name(from) + " holds " + src.to_string() + " " + symbol(asset) + ", needs " + amount.to_string());
  if (from != to) {
    Wad& dst = slot(to, asset);
    Wad new_dst = dst + amount;  // overflow check before mutating anything
    src -= amount;
    dst = new_dst;
  }
  append(JournalOp::transfer, from, to, asset, amount, tag);
}

void Ledger::mint(Authority authority, AccountId to, AssetId asset, Wad amount, JournalTag tag) {
  check_account(to);
  if (!may_mint(authority, asset)) throw ProtocolError(ErrorCode::unauthorized, "mint " + symbol(asset));
  Wad new_supply = supply_[asset.index] + amount;
  Wad& dst = slot(to, asset);
  Wad new_dst = dst + amount;
  supply_[asset.index] = new_supply;
  dst = new_dst;
  append(JournalOp::mint, AccountId{}, to, asset, amount, tag);
}

void Ledger::burn(Authority authority, AccountId from, AssetId asset, Wad amount, JournalTag tag) {
  check_account(from);
  if (!may_mint(authority, asset)) throw ProtocolError(ErrorCode::unauthorized, "burn " + symbol(asset));
  Wad& src = slot(from, asset);
  if (src < amount)
    throw ProtocolError(ErrorCode::insufficient_balance,
                        name(from) + " holds " + src.to_string() + " " + symbol(asset) + ", burning " + amount.to_string());
  src -= amount;
  supply_[asset.index] -= amount;
  append(JournalOp::burn, from, AccountId{}, asset, amount, tag);
}

CheckpointId Ledger::checkpoint() {
  checkpoints_.push_back(journal_.size());
  return CheckpointId{checkpoints_.size()};
}

void Ledger::check_top(CheckpointId cp) const {
  if (checkpoints_.empty() || cp.depth != checkpoints_.size())
    throw ProtocolError(ErrorCode::checkpoint_order_violation,
                        "checkpoint " + std::to_string(cp.depth) + " is not the innermost open checkpoint");
}

void Ledger::rollback(CheckpointId cp) {
  check_top(cp);
  std::size_t target = checkpoints_.back();
  while (journal_.size() > target) {
    const JournalRecord& r = journal_.back();
    switch (r.op) {
      case JournalOp::transfer:
        slot(r.to, r.asset) -= r.amount;
        slot(r.from, r.asset) += r.amount;
        break;
      case JournalOp::mint:
        slot(r.to, r.asset) -= r.amount;
        supply_[r.asset.index] -= r.amount;
        break;
      case JournalOp::burn:
        slot(r.from, r.asset) += r.amount;
        supply_[r.asset.index] += r.amount;
        break;
    }
    journal_.pop_back();
  }
  checkpoints_.pop_back();
}

void Ledger::commit(CheckpointId cp) {
  check_top(cp);
  checkpoints_.pop_back();
}

std::string Ledger::journal_line(const JournalRecord& r) const {
  nlohmann::ordered_json j;
  j["seq"] = r.seq;
  j["op"] = to_string(r.op);
  j["from"] = r.from.valid() ? nlohmann::ordered_json(name(r.from)) : nlohmann::ordered_json(nullptr);
  j["to"] = r.to.valid() ? nlohmann::ordered_json(name(r.to)) : nlohmann::ordered_json(nullptr);
  j["asset"] = symbol(r.asset);
  j["amount"] = r.amount.to_string();
  j["tag"] = to_string(r.tag);
  return j.dump();
}

void Ledger::write_journal(std::ostream& out, std::size_t from) const {
  for (std::size_t i = from; i < journal_.size(); ++i) out << journal_line(journal_[i]) << '\n';
}

void Ledger::audit() const {
  std::vector<Wad> sums(assets_.size());
  for (const auto& row : balances_)
    for (std::size_t a = 0; a < row.size(); ++a) sums[a] += row[a];
  for (std::size_t a = 0; a < assets_.size(); ++a)
    if (sums[a] != supply_[a])
      throw ProtocolError(ErrorCode::invariant_violation, "balances of " + assets_[a].symbol + " sum to " +
                                                              sums[a].to_string() + " but supply is " +
                                                              supply_[a].to_string());
}

bool Ledger::replay_matches() const {
  std::vector<std::vector<Wad>> rebuilt(accounts_.size(), std::vector<Wad>(assets_.size()));
  std::vector<Wad> supply(assets_.size());
  for (const auto& r : journal_) {
    switch (r.op) {
      case JournalOp::transfer:
        rebuilt[r.from.index][r.asset.index] -= r.amount;
        rebuilt[r.to.index][r.asset.index] += r.amount;
        break;
      case JournalOp::mint:
        rebuilt[r.to.index][r.asset.index] += r.amount;
        supply[r.asset.index] += r.amount;
        break;
      case JournalOp::burn:
        rebuilt[r.from.index][r.asset.index] -= r.amount;
        supply[r.asset.index] -= r.amount;
        break;
    }
  }
  if (supply != supply_) return false;
  for (std::size_t acct = 0; acct < accounts_.size(); ++acct)
    for (std::size_t a = 0; a < assets_.size(); ++a)
      if (rebuilt[acct][a] != balance(AccountId{static_cast<std::uint32_t>(acct)}, AssetId{static_cast<std::uint32_t>(a)}))
        return false;
  return true;
}

}  // namespace lendsim
