#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "lendsim/fixed.hpp"
#include "lendsim/ledger.hpp"

namespace lendsim {

/// USD per whole asset unit at a simulation step.
struct PricePoint {
  std::size_t step{};
  Wad price{};
  friend bool operator==(const PricePoint&, const PricePoint&) = default;
};

struct WalkParams {
  std::uint64_t seed{};
  Wad initial{};
  double drift{};       // per-step log drift
  double volatility{};  // per-step log volatility
};

/// One asset's price source: a recorded step-function series or a seeded
/// geometric random walk p(t+1) = p(t) * exp(drift + volatility * z).
class PriceFeed {
 public:
  static PriceFeed replay(std::vector<PricePoint> points);
  /// `salt` distinguishes assets sharing a seed; `precompute` is how many
  /// steps to materialise eagerly (later steps are recomputed on demand).
  static PriceFeed walk(WalkParams params, std::uint64_t salt, std::size_t precompute);

  Wad price_at(std::size_t step) const;
  bool is_walk() const noexcept { return !walk_path_.empty(); }
  const std::vector<PricePoint>& points() const noexcept { return points_; }

 private:
  static std::vector<Wad> generate(const WalkParams& params, std::uint64_t salt, std::size_t steps);

  std::vector<PricePoint> points_;
  WalkParams walk_{};
  std::uint64_t salt_{};
  std::vector<Wad> walk_path_;
};

/// Trusted, instantaneous oracle. Read-only once built.
class PriceOracle {
 public:
  void set_feed(AssetId asset, PriceFeed feed);
  bool has_feed(AssetId asset) const noexcept { return feeds_.contains(asset.index); }

  Wad price_at(AssetId asset, std::size_t step) const;
  /// amount * price, rounded per `rounding` (down for credited value).
  Wad value_usd(Wad amount, AssetId asset, std::size_t step, Rounding rounding = Rounding::down) const;

 private:
  std::map<std::uint32_t, PriceFeed> feeds_;
};

/// Reads `step,asset,price` CSV into per-symbol replay series.
std::map<std::string, std::vector<PricePoint>> read_price_csv(std::istream& in);

/// Stable 64-bit hash used to derive per-asset walk salts from symbols.
std::uint64_t symbol_salt(std::string_view symbol) noexcept;

}  // namespace lendsim
