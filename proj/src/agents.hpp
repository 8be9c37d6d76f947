#pragma once

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "lendsim/flashloan.hpp"
#include "lendsim/simulation.hpp"

namespace lendsim {

/// What an agent sees during its turn: the world, the step, shared
/// per-step scan results and the event log.
class StepContext {
 public:
  StepContext(Simulation& sim, std::size_t step) : sim_(sim), step_(step) {}

  World& world() noexcept { return *sim_.world_; }
  std::size_t step() const noexcept { return step_; }
  RunTotals& totals() noexcept { return sim_.totals_; }
  void emit(nlohmann::ordered_json event);
  void error(const std::string& agent, std::string_view action, const ProtocolError& e);

  /// Scans run once per step, at the first agent that asks; later agents act
  /// on the same (possibly stale) view, as competing transactions in one
  /// block would.
  const std::vector<Opportunity>& liquidations(AccountId asker);
  const std::vector<Opportunity>& arbitrages(AccountId asker);

 private:
  Simulation& sim_;
  std::size_t step_;
  std::optional<std::vector<Opportunity>> liquidations_;
  std::optional<std::vector<Opportunity>> arbitrages_;
};

class Agent {
 public:
  Agent(AgentSpec spec, AccountId account, std::uint64_t seed) : spec_(std::move(spec)), account_(account), rng_(seed) {}
  virtual ~Agent() = default;

  const AgentSpec& spec() const noexcept { return spec_; }
  AccountId account() const noexcept { return account_; }
  bool active(std::size_t step) const noexcept {
    return step >= spec_.start && (!spec_.end || step <= *spec_.end);
  }
  virtual void act(StepContext& ctx) = 0;

 protected:
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  AgentSpec spec_;
  AccountId account_;
  std::mt19937_64 rng_;
};

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, AccountId account, std::uint64_t seed, const World& world);

}  // namespace lendsim
