#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lendsim/cdp.hpp"
#include "lendsim/fixed.hpp"
#include "lendsim/lending.hpp"
#include "lendsim/oracle.hpp"
#include "lendsim/rewards.hpp"
#include "lendsim/venues.hpp"

namespace lendsim {

inline constexpr int kSchemaVersion = 1;

struct FeedSpec {
  enum class Kind : std::uint8_t { replay, walk };
  Kind kind{Kind::replay};
  std::vector<PricePoint> points;
  Wad initial{};
  double drift{};
  double volatility{};
  std::optional<std::uint64_t> seed;  // defaults to the scenario seed
};

struct PoolSpec {
  std::string id;
  std::string asset;
  PoolParams params;  // params.asset resolved when the world is built
  std::vector<std::pair<std::string, Wad>> deposits;  // genesis suppliers
};

struct VaultSpec {
  std::string owner;
  std::map<std::string, Wad> collateral;
  Wad debt{};
};

struct CdpSpec {
  std::string stablecoin;
  std::map<std::string, Wad> issuance_fraction;
  Wad stability_fee{};
  Wad liquidation_penalty{};
  FeePolicy fee_policy{};
  std::vector<VaultSpec> vaults;
};

struct VenueSpec {
  enum class Kind : std::uint8_t { quote, amm };
  std::string id;
  Kind kind{Kind::quote};
  std::uint32_t fee_bps{30};
  std::string numeraire;                     // quote
  std::map<std::string, QuoteSource> quotes;  // quote
  std::map<std::string, Wad> inventory;       // quote
  std::string asset0, asset1;                 // amm
  Wad reserve0{}, reserve1{};                 // amm
};

enum class AgentKind : std::uint8_t { depositor, borrow_spiral, leverage_spiral, liquidator, arbitrageur };
std::string_view to_string(AgentKind kind) noexcept;

struct AgentSpec {
  std::string name;
  AgentKind kind{};
  std::map<std::string, Wad> endowment;
  std::size_t start{0};
  std::optional<std::size_t> end;  // inclusive; open-ended when absent
  Wad min_action{Wad::from_raw(Wad::kScale / 1'000'000)};  // epsilon
  Wad buffer{};                                             // subtracted from the collateral factor
  std::size_t max_iterations{50};
  std::string pool;         // deposit / collateral pool
  std::string borrow_pool;  // spirals; defaults to `pool`
  std::string venue;        // leverage spiral
  std::optional<Wad> amount;  // depositor: amount to supply (all when absent)
  double churn{0.0};          // depositor: per-step probability of a random redeem or top-up
  bool use_flash{true};       // liquidator
};

struct Scenario {
  int schema_version{kSchemaVersion};
  std::size_t horizon{1};
  std::uint64_t seed{0};
  std::vector<std::string> assets;
  std::map<std::string, FeedSpec> feeds;
  std::string gas_asset;
  Wad gas_fee{};
  std::vector<PoolSpec> pools;
  std::optional<CdpSpec> cdp;
  std::vector<VenueSpec> venues;
  std::optional<RewardParams> rewards;
  std::map<std::string, std::map<std::string, Wad>> accounts;  // plain genesis balances
  std::vector<AgentSpec> agents;
};

/// Every problem found in a scenario document, each prefixed with its line
/// and JSON pointer. `parse` distinguishes malformed JSON from bad content.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(bool parse, std::vector<std::string> messages);
  bool parse_error() const noexcept { return parse_; }
  const std::vector<std::string>& messages() const noexcept { return messages_; }

 private:
  bool parse_;
  std::vector<std::string> messages_;
};

/// Parses and fully validates; `base_dir` resolves relative CSV feed paths.
Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {});
/// Throws std::ios_base::failure when the file cannot be read.
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace lendsim
