#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lendsim/fixed.hpp"
#include "lendsim/ledger.hpp"
#include "lendsim/oracle.hpp"

namespace lendsim {

struct VenueId {
  std::uint32_t index{};
  friend constexpr auto operator<=>(VenueId, VenueId) = default;
};

/// A fixed quote, or the oracle cross rate asset/numeraire scaled by `multiplier`.
struct QuoteSource {
  std::optional<Wad> fixed;
  Wad multiplier{Wad::one()};
};

/// Exogenous-price venue: trades any quoted asset against one numeraire.
struct QuoteVenue {
  std::string id;
  AccountId account{};
  AssetId numeraire{};
  std::map<AssetId, QuoteSource> quotes;
  std::uint32_t fee_bps{30};
};

/// Constant-product pool over two assets; reserves are the venue account's
/// ledger balances.
struct AmmVenue {
  std::string id;
  AccountId account{};
  AssetId asset0{};
  AssetId asset1{};
  std::uint32_t fee_bps{30};
};

using Venue = std::variant<QuoteVenue, AmmVenue>;

class Venues {
 public:
  Venues(Ledger& ledger, const PriceOracle& oracle) : ledger_(ledger), oracle_(oracle) {}
  Venues(const Venues&) = delete;
  Venues& operator=(const Venues&) = delete;

  VenueId add_quote_venue(std::string id, AssetId numeraire, std::map<AssetId, QuoteSource> quotes,
                          std::uint32_t fee_bps);
  VenueId add_amm(std::string id, AssetId asset0, AssetId asset1, std::uint32_t fee_bps);

  std::size_t count() const noexcept { return venues_.size(); }
  const Venue& venue(VenueId id) const;
  std::optional<VenueId> find(std::string_view id) const;
  const std::string& name(VenueId id) const;
  AccountId account(VenueId id) const;
  std::uint32_t fee_bps(VenueId id) const;
  bool is_amm(VenueId id) const { return std::holds_alternative<AmmVenue>(venue(id)); }

  // Quote venues.
  Wad quote_price(VenueId id, AssetId asset, std::size_t step) const;
  /// amount * P * (1 - fee), rounded down.
  Wad quote_sell(VenueId id, AssetId asset, Wad amount, std::size_t step) const;
  /// amount * P / (1 - fee), rounded up.
  Wad quote_buy(VenueId id, AssetId asset, Wad amount, std::size_t step) const;
  Wad sell(AccountId trader, VenueId id, AssetId asset, Wad amount, std::size_t step);
  Wad buy(AccountId trader, VenueId id, AssetId asset, Wad amount, std::size_t step);

  // AMM venues.
  std::pair<Wad, Wad> reserves(VenueId id) const;
  /// y * dx' / (x + dx') with dx' = amount_in * (1 - fee), rounded down.
  Wad amm_out(VenueId id, AssetId asset_in, Wad amount_in) const;
  /// Smallest input that yields at least `amount_out`.
  Wad amm_in_for_out(VenueId id, AssetId asset_out, Wad amount_out) const;
  Wad amm_swap(AccountId trader, VenueId id, AssetId asset_in, Wad amount_in);

  // Kind-independent conversion used by agents and flash-loan plans.
  bool converts(VenueId id, AssetId from, AssetId to) const;
  /// Output of spending `amount` of `from` on `to`.
  Wad convert_out(VenueId id, AssetId from, AssetId to, Wad amount, std::size_t step) const;
  Wad convert(AccountId trader, VenueId id, AssetId from, AssetId to, Wad amount, std::size_t step);
  /// Input of `pay` needed to receive exactly `want_amount` of `want`.
  Wad cost_of(VenueId id, AssetId pay, AssetId want, Wad want_amount, std::size_t step) const;
  Wad acquire(AccountId trader, VenueId id, AssetId pay, AssetId want, Wad want_amount, std::size_t step);
  /// Marginal price of `asset` in `numeraire` before fees.
  Wad mid_price(VenueId id, AssetId asset, AssetId numeraire, std::size_t step) const;

 private:
  const QuoteVenue& quote_venue(VenueId id) const;
  const AmmVenue& amm_venue(VenueId id) const;
  std::pair<Wad, Wad> oriented(const AmmVenue& v, AssetId asset_in) const;

  Ledger& ledger_;
  const PriceOracle& oracle_;
  std::vector<Venue> venues_;
};

}  // namespace lendsim
