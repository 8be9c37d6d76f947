#include "lendsim/world.hpp"

#include "lendsim/errors.hpp"

namespace lendsim {

World::World() : lending(ledger, oracle), venues(ledger, oracle) {
  fee_sink = ledger.add_account("fee-sink", AccountKind::fee_sink);
}

VaultEngine& World::enable_cdp(CdpParams params) {
  if (cdp) throw ProtocolError(ErrorCode::invalid_argument, "cdp engine already enabled");
  if (!ledger.may_mint(Authority::cdp, params.stablecoin))
    throw ProtocolError(ErrorCode::unauthorized, ledger.symbol(params.stablecoin) + " is not cdp-mintable");
  AccountId engine = ledger.add_account("vault-engine", AccountKind::vault_engine);
  cdp.emplace(ledger, oracle, std::move(params), engine);
  return *cdp;
}

ProtocolSnapshot World::snapshot() const {
  ProtocolSnapshot s{lending.snapshot(), std::nullopt};
  if (cdp) s.cdp = cdp->snapshot();
  return s;
}

WorldCheckpoint World::checkpoint() {
  frames_.push_back(Frame{ledger.checkpoint(), snapshot()});
  return WorldCheckpoint{frames_.size()};
}

void World::rollback(WorldCheckpoint cp) {
  if (frames_.empty() || cp.depth != frames_.size())
    throw ProtocolError(ErrorCode::checkpoint_order_violation, "world checkpoint " + std::to_string(cp.depth));
  Frame& frame = frames_.back();
  ledger.rollback(frame.ledger_cp);
  lending.restore(frame.state.lending);
  if (cdp && frame.state.cdp) cdp->restore(*frame.state.cdp);
  frames_.pop_back();
}

void World::commit(WorldCheckpoint cp) {
  if (frames_.empty() || cp.depth != frames_.size())
    throw ProtocolError(ErrorCode::checkpoint_order_violation, "world checkpoint " + std::to_string(cp.depth));
  ledger.commit(frames_.back().ledger_cp);
  frames_.pop_back();
}

}  // namespace lendsim
