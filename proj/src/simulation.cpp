#include "lendsim/simulation.hpp"

#include <fstream>

#include "agents.hpp"
#include "json.hpp"
#include "lendsim/errors.hpp"

namespace lendsim {

using nlohmann::ordered_json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform integer in [0, bound) by rejection.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  while (true) {
    std::uint64_t x = rng();
    if (x < limit) return x % bound;
  }
}

AccountId ensure_account(Ledger& ledger, const std::string& name) {
  if (auto a = ledger.find_account(name)) return *a;
  return ledger.add_account(name, AccountKind::user);
}

void endow(Ledger& ledger, AccountId account, const std::map<std::string, Wad>& balances) {
  for (const auto& [symbol, amount] : balances)
    if (!amount.is_zero()) ledger.mint(Authority::genesis, account, ledger.asset(symbol), amount, JournalTag::genesis);
}

}  // namespace

std::uint64_t step_seed(std::uint64_t master, std::uint64_t step) noexcept {
  return splitmix64(splitmix64(master) ^ step);
}

std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[bounded(rng, i)]);
  return order;
}

Simulation::Simulation(const Scenario& scenario, RunOptions options)
    : world_(std::make_unique<World>()),
      horizon_(options.horizon.value_or(scenario.horizon)),
      seed_(options.seed.value_or(scenario.seed)) {
  build(scenario);
}

Simulation::~Simulation() = default;

void Simulation::build(const Scenario& s) {
  World& w = *world_;
  Ledger& ledger = w.ledger;
  std::string stable = s.cdp ? s.cdp->stablecoin : std::string{};
  for (const auto& symbol : s.assets) {
    if (symbol == stable)
      ledger.add_asset(symbol, {Authority::genesis, Authority::cdp});
    else
      ledger.add_asset(symbol, {Authority::genesis});
  }
  for (const auto& [symbol, f] : s.feeds) {
    AssetId asset = ledger.asset(symbol);
    if (f.kind == FeedSpec::Kind::replay) {
      w.oracle.set_feed(asset, PriceFeed::replay(f.points));
    } else {
      WalkParams p{f.seed.value_or(seed_), f.initial, f.drift, f.volatility};
      w.oracle.set_feed(asset, PriceFeed::walk(p, symbol_salt(symbol), horizon_ + 1));
    }
  }
  if (!s.gas_asset.empty()) w.gas_asset = ledger.asset(s.gas_asset);
  w.gas_fee = s.gas_fee;

  for (const auto& p : s.pools) {
    PoolParams params = p.params;
    params.asset = ledger.asset(p.asset);
    w.lending.add_pool(p.id, params);
  }
  if (s.cdp) {
    CdpParams params;
    params.stablecoin = ledger.asset(s.cdp->stablecoin);
    for (const auto& [symbol, frac] : s.cdp->issuance_fraction) params.issuance_fraction[ledger.asset(symbol)] = frac;
    params.stability_fee = s.cdp->stability_fee;
    params.liquidation_penalty = s.cdp->liquidation_penalty;
    params.fee_policy = s.cdp->fee_policy;
    w.enable_cdp(std::move(params));
  }
  for (const auto& v : s.venues) {
    if (v.kind == VenueSpec::Kind::quote) {
      std::map<AssetId, QuoteSource> quotes;
      for (const auto& [symbol, q] : v.quotes) quotes[ledger.asset(symbol)] = q;
      VenueId id = w.venues.add_quote_venue(v.id, ledger.asset(v.numeraire), std::move(quotes), v.fee_bps);
      endow(ledger, w.venues.account(id), v.inventory);
    } else {
      VenueId id = w.venues.add_amm(v.id, ledger.asset(v.asset0), ledger.asset(v.asset1), v.fee_bps);
      endow(ledger, w.venues.account(id), {{v.asset0, v.reserve0}, {v.asset1, v.reserve1}});
    }
  }
  for (const auto& [name, balances] : s.accounts) endow(ledger, ensure_account(ledger, name), balances);

  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const AgentSpec& a = s.agents[i];
    AccountId account = ensure_account(ledger, a.name);
    endow(ledger, account, a.endowment);
    agents_.push_back(make_agent(a, account, splitmix64(seed_ ^ splitmix64(i + 1)), w));
  }

  for (const auto& p : s.pools) {
    PoolId id = *w.lending.find_pool(std::string_view(p.id));
    for (const auto& [who, amount] : p.deposits) {
      AccountId account = ensure_account(ledger, who);
      ledger.mint(Authority::genesis, account, ledger.asset(p.asset), amount, JournalTag::genesis);
      w.lending.deposit(account, id, amount);
    }
  }
  if (s.cdp) {
    for (const auto& v : s.cdp->vaults) {
      AccountId owner = ensure_account(ledger, v.owner);
      VaultId id = w.cdp->open_vault(owner);
      for (const auto& [symbol, amount] : v.collateral) {
        ledger.mint(Authority::genesis, owner, ledger.asset(symbol), amount, JournalTag::genesis);
        w.cdp->lock(id, ledger.asset(symbol), amount);
      }
      w.cdp->draw(id, v.debt, 0);
    }
  }
  ledger.seal_genesis();
  ledger.audit();

  if (s.rewards) rewards_.emplace(*s.rewards);

  pools_csv_ =
      "step,pool,asset,cash,borrows,reserves,utilization,borrow_rate,supply_rate,exchange_rate,borrow_index,"
      "liquidity_index,tvl_usd\n";
  vaults_csv_ = "step,vault,owner,collateral_value,debt,bound,safe\n";
  rewards_csv_ = "step,pool,supply_side,borrow_side,distributed,dust\n";

  for (std::size_t p = 0; p < w.lending.pool_count(); ++p) tvl_start_.push_back(tvl_usd(PoolId{std::uint32_t(p)}, 0));
  for (const auto& agent : agents_) worth_start_.push_back(net_worth_usd(agent->account(), 0));
}

AccountId Simulation::agent_account(std::string_view name) const {
  for (const auto& a : agents_)
    if (a->spec().name == name) return a->account();
  throw ProtocolError(ErrorCode::unknown_account, std::string(name));
}

Wad Simulation::tvl_usd(PoolId pool, std::size_t step) const {
  const LendingMarket& m = world_->lending;
  return world_->oracle.value_usd(m.cash(pool) + m.total_borrows(pool), m.pool(pool).params.asset, step);
}

SignedWad Simulation::net_worth_usd(AccountId account, std::size_t step) const {
  const World& w = *world_;
  Wad assets{}, debts{};
  for (std::uint32_t a = 0; a < w.ledger.asset_count(); ++a) {
    AssetId asset{a};
    Wad bal = w.ledger.balance(account, asset);
    if (!bal.is_zero() && w.oracle.has_feed(asset)) assets += w.oracle.value_usd(bal, asset, step);
  }
  for (std::size_t p = 0; p < w.lending.pool_count(); ++p) {
    PoolId id{std::uint32_t(p)};
    AssetId asset = w.lending.pool(id).params.asset;
    assets += w.oracle.value_usd(w.lending.underlying_balance(account, id), asset, step);
    debts += w.oracle.value_usd(w.lending.debt_of(account, id), asset, step, Rounding::up);
  }
  if (w.cdp) {
    for (std::size_t v = 0; v < w.cdp->vault_count(); ++v) {
      VaultId id{std::uint32_t(v)};
      const Vault& vault = w.cdp->vault(id);
      if (vault.owner != account) continue;
      for (const auto& [asset, amount] : vault.collateral) assets += w.oracle.value_usd(amount, asset, step);
      debts += w.oracle.value_usd(w.cdp->debt(id), w.cdp->stablecoin(), step, Rounding::up);
    }
  }
  return SignedWad::difference(assets, debts);
}

void Simulation::market_phase(std::size_t t) {
  World& w = *world_;
  // Prices are a pure function of the step, so phase 1 needs no mutation.
  if (t > 0) w.lending.accrue_all(1);
  if (w.cdp) {
    w.cdp->apply_policy(t);
    if (t > 0) w.cdp->accrue_fee(1);
  }
  if (rewards_) {
    for (const RewardTranche& r : rewards_->distribute(w.lending)) {
      rewards_csv_ += std::to_string(t) + ',' + w.lending.pool(r.pool).id + ',' + r.supply_side.to_string() + ',' +
                      r.borrow_side.to_string() + ',' + r.distributed.to_string() + ',' + r.dust.to_string() + '\n';
    }
  }
}

void Simulation::advance_quietly() {
  if (done()) throw ProtocolError(ErrorCode::invalid_argument, "horizon reached");
  std::string keep = rewards_csv_;
  market_phase(next_step_);
  rewards_csv_ = std::move(keep);
  ++next_step_;
}

void Simulation::step() {
  if (done()) throw ProtocolError(ErrorCode::invalid_argument, "horizon reached");
  const std::size_t t = next_step_;
  market_phase(t);

  if (forced_order_) {
    last_order_ = std::move(*forced_order_);
    forced_order_.reset();
  } else {
    last_order_ = shuffled_order(agents_.size(), step_seed(seed_, t));
  }
  StepContext ctx(*this, t);
  if (!agents_.empty()) {
    ordered_json order;
    order["step"] = t;
    order["event"] = "agent_order";
    order["order"] = last_order_;
    ctx.emit(std::move(order));
  }
  for (std::size_t i : last_order_) {
    Agent& agent = *agents_[i];
    if (!agent.active(t)) continue;
    try {
      agent.act(ctx);
    } catch (const ProtocolError& e) {
      ctx.error(agent.spec().name, "act", e);
    }
  }

  telemetry(t);
  world_->ledger.audit();
  ++next_step_;
}

void Simulation::run() {
  while (!done()) step();
}

void Simulation::telemetry(std::size_t t) {
  const World& w = *world_;
  const LendingMarket& m = w.lending;
  const std::string step = std::to_string(t);
  for (std::size_t p = 0; p < m.pool_count(); ++p) {
    PoolId id{std::uint32_t(p)};
    const auto& pool = m.pool(id);
    pools_csv_ += step + ',' + pool.id + ',' + w.ledger.symbol(pool.params.asset) + ',' + m.cash(id).to_string() + ',' +
                  m.total_borrows(id).to_string() + ',' + m.reserves(id).to_string() + ',' +
                  m.utilization(id).to_string() + ',' + m.current_borrow_rate(id).to_string() + ',' +
                  m.current_supply_rate(id).to_string() + ',' + m.exchange_rate(id).to_string() + ',' +
                  pool.state.borrow_index.to_string() + ',' + pool.state.liquidity_index.to_string() + ',' +
                  tvl_usd(id, t).to_string() + '\n';
  }
  if (w.cdp) {
    for (std::size_t v = 0; v < w.cdp->vault_count(); ++v) {
      VaultId id{std::uint32_t(v)};
      VaultStatus s = w.cdp->status(id, t);
      vaults_csv_ += step + ',' + std::to_string(v) + ',' + w.ledger.name(w.cdp->vault(id).owner) + ',' +
                     s.collateral_value.to_string() + ',' + s.debt.to_string() + ',' + s.bound.to_string() + ',' +
                     (s.safe ? "1" : "0") + '\n';
    }
  }
}

std::string Simulation::summary_json() const {
  const World& w = *world_;
  const std::size_t last = next_step_ == 0 ? 0 : next_step_ - 1;
  ordered_json j;
  j["seed"] = seed_;
  j["steps"] = next_step_;
  ordered_json tvl0 = ordered_json::object(), tvl = ordered_json::object();
  for (std::size_t p = 0; p < w.lending.pool_count(); ++p) {
    PoolId id{std::uint32_t(p)};
    tvl0[w.lending.pool(id).id] = tvl_start_[p].to_string();
    tvl[w.lending.pool(id).id] = tvl_usd(id, last).to_string();
  }
  j["tvl_step0"] = std::move(tvl0);
  j["final_tvl"] = std::move(tvl);
  j["total_liquidations"] = totals_.liquidations;
  j["total_flash_profit"] = totals_.flash_profit_usd.to_string();
  j["flash_loans"] = {{"committed", totals_.flash_committed}, {"reverted", totals_.flash_reverted}};
  j["agent_errors"] = totals_.agent_errors;
  ordered_json pnl = ordered_json::object();
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    SignedWad now = net_worth_usd(agents_[i]->account(), last);
    pnl[agents_[i]->spec().name] = SignedWad::from_raw(now.raw() - worth_start_[i].raw()).to_string();
  }
  j["agent_pnl"] = std::move(pnl);
  if (rewards_) {
    ordered_json r;
    r["distributed"] = rewards_->total_distributed().to_string();
    r["dust"] = rewards_->dust().to_string();
    ordered_json per = ordered_json::object();
    for (const auto& [account, amount] : rewards_->accounts()) per[w.ledger.name(account)] = amount.to_string();
    r["accrued"] = std::move(per);
    j["rewards"] = std::move(r);
  }
  j["journal_records"] = w.ledger.journal().size();
  return j.dump(2) + '\n';
}

void Simulation::write_outputs(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& body) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    out << body;
    if (!out) throw std::ios_base::failure("cannot write " + (dir / name).string());
  };
  write("pools.csv", pools_csv_);
  write("vaults.csv", vaults_csv_);
  write("events.jsonl", events_);
  write("rewards.csv", rewards_csv_);
  write("summary.json", summary_json());
}

}  // namespace lendsim
