#include "lendsim/venues.hpp"

#include "lendsim/errors.hpp"

namespace lendsim {

namespace {

constexpr u128 kBps = 10'000;

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

}  // namespace

VenueId Venues::add_quote_venue(std::string id, AssetId numeraire, std::map<AssetId, QuoteSource> quotes,
                                std::uint32_t fee_bps) {
  if (fee_bps >= kBps) throw ProtocolError(ErrorCode::invalid_argument, "fee_bps must be < 10000");
  if (find(id)) throw ProtocolError(ErrorCode::invalid_argument, "duplicate venue " + id);
  for (const auto& [asset, source] : quotes) {
    if (asset == numeraire) throw ProtocolError(ErrorCode::invalid_argument, "venue " + id + " quotes its numeraire");
    if (source.fixed && source.fixed->is_zero())
      throw ProtocolError(ErrorCode::invalid_argument, "venue " + id + " has a zero quote");
  }
  AccountId account = ledger_.add_account("venue:" + id, AccountKind::venue);
  venues_.emplace_back(QuoteVenue{std::move(id), account, numeraire, std::move(quotes), fee_bps});
  return VenueId{static_cast<std::uint32_t>(venues_.size() - 1)};
}

VenueId Venues::add_amm(std::string id, AssetId asset0, AssetId asset1, std::uint32_t fee_bps) {
  if (fee_bps >= kBps) throw ProtocolError(ErrorCode::invalid_argument, "fee_bps must be < 10000");
  if (asset0 == asset1) throw ProtocolError(ErrorCode::invalid_argument, "amm pair needs two assets");
  if (find(id)) throw ProtocolError(ErrorCode::invalid_argument, "duplicate venue " + id);
  AccountId account = ledger_.add_account("venue:" + id, AccountKind::venue);
  venues_.emplace_back(AmmVenue{std::move(id), account, asset0, asset1, fee_bps});
  return VenueId{static_cast<std::uint32_t>(venues_.size() - 1)};
}

const Venue& Venues::venue(VenueId id) const {
  if (id.index >= venues_.size()) throw ProtocolError(ErrorCode::unknown_venue, "venue #" + std::to_string(id.index));
  return venues_[id.index];
}

std::optional<VenueId> Venues::find(std::string_view id) const {
  for (std::size_t i = 0; i < venues_.size(); ++i) {
    const std::string& n = std::visit([](const auto& v) -> const std::string& { return v.id; }, venues_[i]);
    if (n == id) return VenueId{static_cast<std::uint32_t>(i)};
  }
  return std::nullopt;
}

const std::string& Venues::name(VenueId id) const {
  return std::visit([](const auto& v) -> const std::string& { return v.id; }, venue(id));
}

AccountId Venues::account(VenueId id) const {
  return std::visit([](const auto& v) { return v.account; }, venue(id));
}

std::uint32_t Venues::fee_bps(VenueId id) const {
  return std::visit([](const auto& v) { return v.fee_bps; }, venue(id));
}

const QuoteVenue& Venues::quote_venue(VenueId id) const {
  if (const auto* q = std::get_if<QuoteVenue>(&venue(id))) return *q;
  throw ProtocolError(ErrorCode::unsupported_trade, name(id) + " is not a quote venue");
}

const AmmVenue& Venues::amm_venue(VenueId id) const {
  if (const auto* a = std::get_if<AmmVenue>(&venue(id))) return *a;
  throw ProtocolError(ErrorCode::unsupported_trade, name(id) + " is not an AMM");
}

Wad Venues::quote_price(VenueId id, AssetId asset, std::size_t step) const {
  const QuoteVenue& v = quote_venue(id);
  auto it = v.quotes.find(asset);
  if (it == v.quotes.end())
    throw ProtocolError(ErrorCode::unsupported_trade, v.id + " does not quote " + ledger_.symbol(asset));
  if (it->second.fixed) return *it->second.fixed;
  Wad cross = div(oracle_.price_at(asset, step), oracle_.price_at(v.numeraire, step));
  Wad price = mul(cross, it->second.multiplier);
  return price.is_zero() ? Wad::from_raw(1) : price;
}

Wad Venues::quote_sell(VenueId id, AssetId asset, Wad amount, std::size_t step) const {
  const QuoteVenue& v = quote_venue(id);
  Wad price = quote_price(id, asset, step);
  return Wad::from_raw(
      mul_mul_div(amount.raw(), price.raw(), kBps - v.fee_bps, Wad::kScale, kBps, Rounding::down));
}

Wad Venues::quote_buy(VenueId id, AssetId asset, Wad amount, std::size_t step) const {
  const QuoteVenue& v = quote_venue(id);
  Wad price = quote_price(id, asset, step);
  return Wad::from_raw(mul_mul_div(amount.raw(), price.raw(), kBps, Wad::kScale, kBps - v.fee_bps, Rounding::up));
}

Wad Venues::sell(AccountId trader, VenueId id, AssetId asset, Wad amount, std::size_t step) {
  const QuoteVenue& v = quote_venue(id);
  Wad out = quote_sell(id, asset, amount, step);
  if (ledger_.balance(v.account, v.numeraire) < out)
    throw ProtocolError(ErrorCode::insufficient_inventory, v.id + " lacks " + out.to_string() + " " +
                                                               ledger_.symbol(v.numeraire));
  ledger_.transfer(trader, v.account, asset, amount, JournalTag::venue_trade);
  ledger_.transfer(v.account, trader, v.numeraire, out, JournalTag::venue_trade);
  return out;
}

Wad Venues::buy(AccountId trader, VenueId id, AssetId asset, Wad amount, std::size_t step) {
  const QuoteVenue& v = quote_venue(id);
  Wad cost = quote_buy(id, asset, amount, step);
  if (ledger_.balance(v.account, asset) < amount)
    throw ProtocolError(ErrorCode::insufficient_inventory, v.id + " lacks " + amount.to_string() + " " +
                                                               ledger_.symbol(asset));
  ledger_.transfer(trader, v.account, v.numeraire, cost, JournalTag::venue_trade);
  ledger_.transfer(v.account, trader, asset, amount, JournalTag::venue_trade);
  return cost;
}

std::pair<Wad, Wad> Venues::reserves(VenueId id) const {
  const AmmVenue& v = amm_venue(id);
  return {ledger_.balance(v.account, v.asset0), ledger_.balance(v.account, v.asset1)};
}

std::pair<Wad, Wad> Venues::oriented(const AmmVenue& v, AssetId asset_in) const {
  Wad r0 = ledger_.balance(v.account, v.asset0);
  Wad r1 = ledger_.balance(v.account, v.asset1);
  if (asset_in == v.asset0) return {r0, r1};
  if (asset_in == v.asset1) return {r1, r0};
  throw ProtocolError(ErrorCode::unsupported_trade, v.id + " does not trade " + ledger_.symbol(asset_in));
}

Wad Venues::amm_out(VenueId id, AssetId asset_in, Wad amount_in) const {
  const AmmVenue& v = amm_venue(id);
  auto [x, y] = oriented(v, asset_in);
  if (amount_in.is_zero()) return {};
  const u128 keep = kBps - v.fee_bps;
  // y * in * keep / (x * 10000 + in * keep)
  u128 in_keep;
  if (__builtin_mul_overflow(amount_in.raw(), keep, &in_keep))
    throw ProtocolError(ErrorCode::overflow, "amm input");
  u128 x_scaled;
  if (__builtin_mul_overflow(x.raw(), kBps, &x_scaled)) throw ProtocolError(ErrorCode::overflow, "amm reserve");
  u128 den;
  if (__builtin_add_overflow(x_scaled, in_keep, &den)) throw ProtocolError(ErrorCode::overflow, "amm denominator");
  return Wad::from_raw(mul_div(y.raw(), in_keep, den, Rounding::down));
}

Wad Venues::amm_in_for_out(VenueId id, AssetId asset_out, Wad amount_out) const {
  const AmmVenue& v = amm_venue(id);
  if (asset_out != v.asset0 && asset_out != v.asset1)
    throw ProtocolError(ErrorCode::unsupported_trade, v.id + " does not trade " + ledger_.symbol(asset_out));
  AssetId asset_in = asset_out == v.asset0 ? v.asset1 : v.asset0;
  auto [x, y] = oriented(v, asset_in);
  if (amount_out.is_zero()) return {};
  if (amount_out >= y) throw ProtocolError(ErrorCode::insufficient_inventory, v.id + " reserve too small");
  // x * out * 10000 / ((y - out) * keep), rounded up.
  return Wad::from_raw(
      mul_mul_div(x.raw(), amount_out.raw(), kBps, (y - amount_out).raw(), kBps - v.fee_bps, Rounding::up));
}

Wad Venues::amm_swap(AccountId trader, VenueId id, AssetId asset_in, Wad amount_in) {
  const AmmVenue& v = amm_venue(id);
  AssetId asset_out = asset_in == v.asset0 ? v.asset1 : v.asset0;
  Wad out = amm_out(id, asset_in, amount_in);
  ledger_.transfer(trader, v.account, asset_in, amount_in, JournalTag::venue_trade);
  ledger_.transfer(v.account, trader, asset_out, out, JournalTag::venue_trade);
  return out;
}

bool Venues::converts(VenueId id, AssetId from, AssetId to) const {
  if (from == to) return false;
  return std::visit(overloaded{
                        [&](const QuoteVenue& q) {
                          return (from == q.numeraire && q.quotes.contains(to)) ||
                                 (to == q.numeraire && q.quotes.contains(from));
                        },
                        [&](const AmmVenue& a) {
                          return (from == a.asset0 && to == a.asset1) || (from == a.asset1 && to == a.asset0);
                        },
                    },
                    venue(id));
}

Wad Venues::convert_out(VenueId id, AssetId from, AssetId to, Wad amount, std::size_t step) const {
  if (!converts(id, from, to))
    throw ProtocolError(ErrorCode::unsupported_trade, name(id) + " cannot convert " + ledger_.symbol(from) + " to " +
                                                          ledger_.symbol(to));
  if (is_amm(id)) return amm_out(id, from, amount);
  const QuoteVenue& q = quote_venue(id);
  if (to == q.numeraire) return quote_sell(id, from, amount, step);
  // Spend `amount` numeraire: largest quantity whose rounded-up cost fits.
  Wad price = quote_price(id, to, step);
  return Wad::from_raw(
      mul_mul_div(amount.raw(), Wad::kScale, kBps - q.fee_bps, price.raw(), kBps, Rounding::down));
}

Wad Venues::convert(AccountId trader, VenueId id, AssetId from, AssetId to, Wad amount, std::size_t step) {
  Wad out = convert_out(id, from, to, amount, step);
  if (is_amm(id)) return amm_swap(trader, id, from, amount);
  const QuoteVenue& q = quote_venue(id);
  if (to == q.numeraire) return sell(trader, id, from, amount, step);
  buy(trader, id, to, out, step);
  return out;
}

Wad Venues::cost_of(VenueId id, AssetId pay, AssetId want, Wad want_amount, std::size_t step) const {
  if (!converts(id, pay, want))
    throw ProtocolError(ErrorCode::unsupported_trade, name(id) + " cannot convert " + ledger_.symbol(pay) + " to " +
                                                          ledger_.symbol(want));
  if (is_amm(id)) return amm_in_for_out(id, want, want_amount);
  const QuoteVenue& q = quote_venue(id);
  if (pay == q.numeraire) return quote_buy(id, want, want_amount, step);
  // Selling `pay` for an exact numeraire amount.
  Wad price = quote_price(id, pay, step);
  return Wad::from_raw(
      mul_mul_div(want_amount.raw(), Wad::kScale, kBps, price.raw(), kBps - q.fee_bps, Rounding::up));
}

Wad Venues::acquire(AccountId trader, VenueId id, AssetId pay, AssetId want, Wad want_amount, std::size_t step) {
  Wad cost = cost_of(id, pay, want, want_amount, step);
  if (is_amm(id)) {
    amm_swap(trader, id, pay, cost);
    return cost;
  }
  const QuoteVenue& q = quote_venue(id);
  if (pay == q.numeraire) return buy(trader, id, want, want_amount, step);
  sell(trader, id, pay, cost, step);
  return cost;
}

Wad Venues::mid_price(VenueId id, AssetId asset, AssetId numeraire, std::size_t step) const {
  if (is_amm(id)) {
    const AmmVenue& a = amm_venue(id);
    auto [x, y] = oriented(a, asset);
    if (numeraire != (asset == a.asset0 ? a.asset1 : a.asset0))
      throw ProtocolError(ErrorCode::unsupported_trade, a.id + " does not pair these assets");
    return div(y, x);
  }
  const QuoteVenue& q = quote_venue(id);
  if (numeraire != q.numeraire) throw ProtocolError(ErrorCode::unsupported_trade, q.id + " uses another numeraire");
  return quote_price(id, asset, step);
}

}  // namespace lendsim
