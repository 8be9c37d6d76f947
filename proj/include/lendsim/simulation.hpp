#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lendsim/flashloan.hpp"
#include "lendsim/rewards.hpp"
#include "lendsim/scenario.hpp"
#include "lendsim/world.hpp"

namespace lendsim {

struct SpiralReport {
  std::size_t iterations{};  // completed borrows
  Wad total_deposited{};     // in deposit-asset units
  Wad total_borrowed{};      // in borrow-asset units
  std::vector<Wad> deposits;  // running totals after each deposit
  std::vector<Wad> borrows;   // running totals after each borrow
  std::optional<ErrorCode> stopped_by;
};

struct SpiralParams {
  Wad buffer{};
  std::size_t max_iterations{50};
  Wad min_action{Wad::from_raw(Wad::kScale / 1'000'000)};
  RateMode rate_mode{RateMode::variable};
};

/// deposit -> borrow (c - buffer) of the latest deposit -> re-deposit into
/// the same pool, until the marginal borrow falls below min_action or
/// max_iterations borrows have been made.
SpiralReport run_borrow_spiral(World& world, AccountId agent, PoolId pool, Wad initial_deposit,
                               const SpiralParams& params, std::size_t step);

/// deposit collateral -> borrow -> swap the loan into collateral on `venue`
/// -> re-deposit. total_deposited is the long collateral exposure.
SpiralReport run_leverage_spiral(World& world, AccountId agent, PoolId collateral_pool, PoolId borrow_pool,
                                 VenueId venue, Wad initial_deposit, const SpiralParams& params, std::size_t step);

/// Deterministic per-step RNG seed from the master seed and the step.
std::uint64_t step_seed(std::uint64_t master, std::uint64_t step) noexcept;
/// Unbiased Fisher-Yates over [0, n); independent of the standard library's
/// distribution implementations so orderings are portable.
std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed);

class Agent;
class StepContext;

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> horizon;
};

struct RunTotals {
  std::size_t liquidations{};
  std::size_t flash_committed{};
  std::size_t flash_reverted{};
  SignedWad flash_profit_usd{};
  std::size_t agent_errors{};
};

/// A world built from a scenario plus its agents and telemetry buffers.
class Simulation {
 public:
  explicit Simulation(const Scenario& scenario, RunOptions options = {});
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  World& world() noexcept { return *world_; }
  const World& world() const noexcept { return *world_; }
  std::size_t horizon() const noexcept { return horizon_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t next_step() const noexcept { return next_step_; }
  bool done() const noexcept { return next_step_ >= horizon_; }

  /// Runs one step with the fixed phase order; audits the ledger afterwards.
  void step();
  void run();
  /// Prices, accrual and rewards for the next step without agent actions or
  /// telemetry; used to advance a world to a scan point.
  void advance_quietly();

  const RunTotals& totals() const noexcept { return totals_; }
  const RewardLedger* rewards() const noexcept { return rewards_ ? &*rewards_ : nullptr; }
  std::size_t agent_count() const noexcept { return agents_.size(); }
  const Agent& agent(std::size_t i) const { return *agents_[i]; }
  AccountId agent_account(std::string_view name) const;
  /// Agent indices in the order they acted at the most recent step.
  const std::vector<std::size_t>& last_order() const noexcept { return last_order_; }

  /// Forces the agent order for the next step (tests).
  void force_order(std::vector<std::size_t> order) { forced_order_ = std::move(order); }

  Wad tvl_usd(PoolId pool, std::size_t step) const;
  SignedWad net_worth_usd(AccountId account, std::size_t step) const;

  const std::string& pools_csv() const noexcept { return pools_csv_; }
  const std::string& vaults_csv() const noexcept { return vaults_csv_; }
  const std::string& events() const noexcept { return events_; }
  const std::string& rewards_csv() const noexcept { return rewards_csv_; }
  std::string summary_json() const;
  void write_outputs(const std::filesystem::path& dir) const;

 private:
  friend class StepContext;

  void build(const Scenario& scenario);
  void market_phase(std::size_t t);
  void telemetry(std::size_t t);

  std::unique_ptr<World> world_;
  std::optional<RewardLedger> rewards_;
  std::vector<std::unique_ptr<Agent>> agents_;
  std::size_t horizon_{};
  std::uint64_t seed_{};
  std::size_t next_step_{0};
  std::vector<std::size_t> last_order_;
  std::optional<std::vector<std::size_t>> forced_order_;
  std::vector<Wad> tvl_start_;
  std::vector<SignedWad> worth_start_;
  RunTotals totals_;
  std::string pools_csv_, vaults_csv_, events_, rewards_csv_;
};

}  // namespace lendsim
