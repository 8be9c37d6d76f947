#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lendsim/fixed.hpp"

namespace lendsim {

struct AssetId {
  std::uint32_t index{};
  friend constexpr auto operator<=>(AssetId, AssetId) = default;
};

struct AccountId {
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t index{kNone};
  constexpr bool valid() const noexcept { return index != kNone; }
  friend constexpr auto operator<=>(AccountId, AccountId) = default;
};

enum class AccountKind : std::uint8_t { user, pool, vault_engine, venue, fee_sink };

/// Which module may mint or burn an asset. Fixed per asset when it is registered.
enum class Authority : std::uint8_t { genesis, lending_pool, cdp, rewards };

enum class JournalOp : std::uint8_t { transfer, mint, burn };

enum class JournalTag : std::uint8_t {
  transfer,
  genesis,
  deposit,
  redeem,
  borrow,
  repay,
  liquidation,
  flash_borrow,
  flash_repay,
  gas_fee,
  venue_trade,
  vault_lock,
  vault_free,
  dai_draw,
  dai_repay,
};

std::string_view to_string(AccountKind kind) noexcept;
std::string_view to_string(JournalOp op) noexcept;
std::string_view to_string(JournalTag tag) noexcept;

struct JournalRecord {
  std::uint64_t seq{};
  JournalOp op{};
  AccountId from{};  // kNone for mint
  AccountId to{};    // kNone for burn
  AssetId asset{};
  Wad amount{};
  JournalTag tag{};
  friend bool operator==(const JournalRecord&, const JournalRecord&) = default;
};

struct CheckpointId {
  std::size_t depth{};
  friend bool operator==(CheckpointId, CheckpointId) = default;
};

/// Balances of every (account, asset) pair plus an append-only journal of
/// mutations. Checkpoints nest strictly LIFO; rollback undoes journal records
/// in reverse and truncates the journal, so a rolled-back ledger is
/// indistinguishable from one that never saw the mutations.
class Ledger {
 public:
  AssetId add_asset(std::string symbol, std::initializer_list<Authority> authorities);
  AccountId add_account(std::string name, AccountKind kind);

  std::optional<AssetId> find_asset(std::string_view symbol) const;
  std::optional<AccountId> find_account(std::string_view name) const;
  AssetId asset(std::string_view symbol) const;
  AccountId account(std::string_view name) const;

  const std::string& symbol(AssetId asset) const;
  const std::string& name(AccountId account) const;
  AccountKind kind(AccountId account) const;
  std::size_t asset_count() const noexcept { return assets_.size(); }
  std::size_t account_count() const noexcept { return accounts_.size(); }
  bool may_mint(Authority authority, AssetId asset) const;

  Wad balance(AccountId account, AssetId asset) const;
  Wad supply(AssetId asset) const;

  void transfer(AccountId from, AccountId to, AssetId asset, Wad amount, JournalTag tag = JournalTag::transfer);
  void mint(Authority authority, AccountId to, AssetId asset, Wad amount, JournalTag tag);
  void burn(Authority authority, AccountId from, AssetId asset, Wad amount, JournalTag tag);

  /// After sealing, genesis authority can no longer mint.
  void seal_genesis() noexcept { sealed_ = true; }
  bool sealed() const noexcept { return sealed_; }

  CheckpointId checkpoint();
  void rollback(CheckpointId cp);
  void commit(CheckpointId cp);
  std::size_t open_checkpoints() const noexcept { return checkpoints_.size(); }

  std::span<const JournalRecord> journal() const noexcept { return journal_; }
  std::string journal_line(const JournalRecord& record) const;
  void write_journal(std::ostream& out, std::size_t from = 0) const;

  /// Throws invariant_violation if any asset's balances do not sum to its supply.
  void audit() const;
  /// Rebuilds balances from the journal alone and compares with live state.
  bool replay_matches() const;

 private:
  struct AssetInfo {
    std::string symbol;
    std::uint8_t authority_mask{};
  };
  struct AccountInfo {
    std::string name;
    AccountKind kind{};
  };

  void check_account(AccountId account) const;
  void check_asset(AssetId asset) const;
  Wad& slot(AccountId account, AssetId asset);
  void append(JournalOp op, AccountId from, AccountId to, AssetId asset, Wad amount, JournalTag tag);
  void check_top(CheckpointId cp) const;

  std::vector<AssetInfo> assets_;
  std::vector<AccountInfo> accounts_;
  std::unordered_map<std::string, std::uint32_t> asset_index_;
  std::unordered_map<std::string, std::uint32_t> account_index_;
  std::vector<std::vector<Wad>> balances_;  // [account][asset]
  std::vector<Wad> supply_;
  std::vector<JournalRecord> journal_;
  std::vector<std::size_t> checkpoints_;  // journal sizes
  bool sealed_{false};
};

}  // namespace lendsim
